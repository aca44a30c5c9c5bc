"""Dense linear-algebra primitives shared by every sampler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from ._backend import core
from .errors import RankError

# relative rank / singularity threshold, scaled by the pivoted-QR leading diagonal
RANK_RTOL = 1e-10


def _rank_tolerance(R_diag: np.ndarray) -> float:
    if R_diag.size == 0:
        return 0.0
    return RANK_RTOL * float(np.abs(R_diag[0]))


def numerical_rank(X: np.ndarray) -> int:
    """Rank of ``X`` from a column-pivoted QR with relative tolerance."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return 0
    R = scipy.linalg.qr(X, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.sum(diag > _rank_tolerance(diag)))


@dataclass(frozen=True)
class FeatureMatrix:
    """Full-rank ``r x n`` real matrix with ``r < n``.

    The array is copied and made read-only. ``scale`` (largest pivoted-QR
    diagonal) sets the absolute singularity threshold used by determinant
    routines.
    """

    data: np.ndarray
    scale: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        A = np.array(self.data, dtype=np.float64, copy=True)
        if A.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {A.shape}")
        r, n = A.shape
        if r < 1 or not r < n:
            raise ValueError(f"need 1 <= r < n, got r={r}, n={n}")
        if not np.all(np.isfinite(A)):
            raise ValueError("feature matrix has non-finite entries")
        R = scipy.linalg.qr(A, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(R))
        if diag[0] == 0.0 or np.sum(diag > _rank_tolerance(diag)) < r:
            raise RankError(f"feature matrix is rank deficient (need rank {r})")
        A.setflags(write=False)
        object.__setattr__(self, "data", A)
        object.__setattr__(self, "scale", float(diag[0]))

    @property
    def r(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def columns(self, idx: Iterable[int]) -> np.ndarray:
        return self.data[:, list(idx)]

    @property
    def det_tol(self) -> float:
        """Absolute pivot threshold for square submatrix determinants."""
        return RANK_RTOL * self.scale

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_feature_matrix(A) -> FeatureMatrix:
    return A if isinstance(A, FeatureMatrix) else FeatureMatrix(np.asarray(A))


@dataclass(frozen=True)
class ProjectionKernel:
    """Symmetric idempotent ``n x n`` kernel of rank ``r``."""

    K: np.ndarray

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.K))))

    def minor(self, idx: Sequence[int]) -> float:
        idx = list(idx)
        if not idx:
            return 1.0
        return float(np.linalg.det(self.K[np.ix_(idx, idx)]))


def build_projection_kernel(A) -> ProjectionKernel:
    """``K = A^T (A A^T)^{-1} A``, the orthogonal projector onto the row space.

    Computed from a thin QR of ``A^T`` (``K = Q Q^T``), which equals the
    normal-equation form exactly and is better conditioned.
    """
    A = as_feature_matrix(A)
    Q, R = np.linalg.qr(A.data.T)
    d = np.abs(np.diag(R))
    if np.min(d) <= RANK_RTOL * np.max(d):
        raise RankError("A A^T is singular")
    K = Q @ Q.T
    K = 0.5 * (K + K.T)
    K.setflags(write=False)
    return ProjectionKernel(K)


def check_basis(A: FeatureMatrix, indices: Iterable[int]) -> tuple[int, ...]:
    """Validate and sort a candidate basis; raises ``ValueError`` if invalid."""
    idx = tuple(sorted(int(i) for i in indices))
    if len(idx) != A.r or len(set(idx)) != A.r:
        raise ValueError(f"basis must hold {A.r} distinct indices, got {idx}")
    if idx[0] < 0 or idx[-1] >= A.n:
        raise IndexError(f"basis index out of range [0, {A.n}): {idx}")
    if log_abs_det(A, idx) == -np.inf:
        raise ValueError(f"columns {idx} are linearly dependent")
    return idx


def log_abs_det(A: FeatureMatrix, idx: Sequence[int]) -> float:
    """``log|det A[:, idx]|`` for ``len(idx) == r``; ``-inf`` when singular."""
    return core.lu_log_abs_det(A.data[:, list(idx)], A.det_tol)


def _validate_index_set(A: FeatureMatrix, P: Iterable[int]) -> list[int]:
    idx = [int(i) for i in P]
    for i in idx:
        if i < 0 or i >= A.n:
            raise IndexError(f"column index {i} out of range [0, {A.n})")
    if len(set(idx)) != len(idx):
        raise ValueError(f"repeated column index in {idx}")
    return idx


def log_squared_volume(A, P: Iterable[int]) -> float:
    """``log det(A_P^T A_P)``; ``-inf`` for dependent columns or ``|P| > r``.

    Uses the R factor of a QR of ``A[:, P]`` so the Gram matrix is never
    formed.
    """
    A = as_feature_matrix(A)
    idx = _validate_index_set(A, P)
    if not idx:
        return 0.0
    if len(idx) > A.r:
        return -np.inf
    R = np.linalg.qr(A.data[:, idx], mode="r")
    diag = np.abs(np.diag(R))
    if np.any(diag <= A.det_tol):
        return -np.inf
    return float(2.0 * np.sum(np.log(diag)))


def squared_volume(A, P: Iterable[int]) -> float:
    """Squared volume of the parallelotope spanned by the columns ``P``.

    Equals ``det(A_P^T A_P)``. When ``|P| = r`` this is ``det(A_P)^2``, which
    is ``det(A A^T) * det(K_P)`` for the projection kernel ``K`` of ``A``.
    """
    lv = log_squared_volume(A, P)
    return 0.0 if lv == -np.inf else float(np.exp(lv))


def cauchy_binet_total(A) -> float:
    """``det(A A^T)``: the sum of squared ``r x r`` minors."""
    A = as_feature_matrix(A)
    sign, logdet = np.linalg.slogdet(A.data @ A.data.T)
    return float(sign * np.exp(logdet))


def log_cauchy_binet_total(A) -> float:
    A = as_feature_matrix(A)
    return float(np.linalg.slogdet(A.data @ A.data.T)[1])
