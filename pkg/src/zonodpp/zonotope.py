"""Geometry of the zonotope ``Z(A) = A [0, 1]^n`` and its tiling.

A fixed generic objective ``c`` tiles the zonotope into parallelotopes
``A xi + A_B [0, 1]^r``, one per basis ``B``. The tile holding a point ``x``
is read off the optimal vertex of

    minimize c . y   subject to  A y = x,  0 <= y <= 1,

whose coordinates strictly between 0 and 1 index ``B`` and whose integral
coordinates give the offset ``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import core
from .errors import NotInZonotopeError, TieError
from .lp import (AT_LOWER, AT_UPPER, BOUND_TOL, FEAS_TOL, FREE_ZERO, OPT_TOL,
                 PIVOT_TOL, LpError, fractional_mask)
from .numerics import FeatureMatrix, as_feature_matrix, log_abs_det

# nonbasic reduced costs below this (relative to max|c|) flag a tie
TIE_RTOL = 1e-10


@dataclass(frozen=True)
class TilingObjective:
    """Linear objective fixing the tiling; drawn once per run."""

    c: np.ndarray
    seed: Optional[int] = None

    @classmethod
    def draw(cls, n: int, seed: Optional[int] = None) -> "TilingObjective":
        c = np.random.default_rng(seed).standard_normal(n)
        c.setflags(write=False)
        return cls(c, seed)


@dataclass(frozen=True)
class Chord:
    x: np.ndarray
    d: np.ndarray
    alpha_min: float
    alpha_max: float

    @property
    def length(self) -> float:
        return self.alpha_max - self.alpha_min

    def point(self, alpha: float) -> np.ndarray:
        return self.x + alpha * self.d


@dataclass(frozen=True)
class Tile:
    """Result of tile extraction at a point.

    ``basis`` is sorted; ``xi`` is the 0/1 offset (zero on the basis);
    ``y`` is the LP optimum. ``lp_basis``/``lp_status`` describe the final
    simplex basis and seed warm starts of the chord programs.
    """

    basis: tuple[int, ...]
    xi: np.ndarray
    y: np.ndarray
    lp_basis: np.ndarray
    lp_status: np.ndarray


class Zonotope:
    """Zonotope of a feature matrix together with a tiling objective."""

    def __init__(self, A, objective: Optional[TilingObjective] = None):
        self.A = as_feature_matrix(A)
        r, n = self.A.shape
        self.r, self.n = r, n
        if objective is None:
            objective = TilingObjective.draw(n)
        c = np.ascontiguousarray(objective.c, dtype=np.float64)
        if c.shape != (n,):
            raise ValueError(f"objective has shape {c.shape}, expected ({n},)")
        self.objective = objective
        self._c = c
        self._M = np.ascontiguousarray(self.A.data)
        self._lo = np.zeros(n)
        self._hi = np.ones(n)
        self._zero = np.zeros(n)
        self._chord_M = np.zeros((r, n + 1))
        self._chord_M[:, :n] = self._M
        self._chord_lo = np.zeros(n + 1)
        self._chord_lo[n] = -np.inf
        self._chord_hi = np.ones(n + 1)
        self._chord_hi[n] = np.inf
        self._c_min = np.zeros(n + 1)
        self._c_min[n] = 1.0
        self._c_max = -self._c_min
        self._bland_after = 10 * (n + r)
        self._max_iter = self._bland_after + 200 * (n + r) + 1000
        self._tie_tol = TIE_RTOL * max(1.0, float(np.max(np.abs(c))))

    # -- membership -------------------------------------------------------
    def contains(self, x) -> bool:
        x = self._point(x)
        code = self._solve(self._M, x, self._zero, self._lo, self._hi, True)[0]
        return code == 0

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        A = self._M
        return np.minimum(A, 0.0).sum(axis=1), np.maximum(A, 0.0).sum(axis=1)

    def uniform_point(self, rng: np.random.Generator) -> np.ndarray:
        """``A u`` with ``u`` uniform on the cube (a chain initializer, not
        uniform on the zonotope)."""
        return self._M @ rng.uniform(size=self.n)

    # -- chords -----------------------------------------------------------
    def chord(self, x, d, tile: Optional[Tile] = None) -> Chord:
        """Intersection of the line ``x + R d`` with the zonotope."""
        x = self._point(x)
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.r,):
            raise ValueError(f"direction has shape {d.shape}, expected ({self.r},)")
        n = self.n
        self._chord_M[:, n] = -d
        hint_b = hint_s = None
        if tile is not None:
            hint_b = tile.lp_basis
            hint_s = np.empty(n + 1, dtype=np.int8)
            hint_s[:n] = tile.lp_status
            hint_s[n] = FREE_ZERO
        lo_code, y_lo = self._solve(self._chord_M, x, self._c_min, self._chord_lo,
                                    self._chord_hi, False, hint_b, hint_s)[:2]
        hi_code, y_hi = self._solve(self._chord_M, x, self._c_max, self._chord_lo,
                                    self._chord_hi, False, hint_b, hint_s)[:2]
        if lo_code == 1 or hi_code == 1:
            raise NotInZonotopeError(f"point {x} is not in the zonotope")
        if lo_code != 0 or hi_code != 0:
            raise LpError(f"chord programs ended with status {lo_code}/{hi_code}")
        # the line may cross Z(A) without passing through x
        slack = FEAS_TOL * max(1.0, float(np.max(np.abs(x))))
        if y_lo[n] > slack or y_hi[n] < -slack:
            raise NotInZonotopeError(f"point {x} is not in the zonotope")
        # + 0.0 turns a -0.0 endpoint into 0.0
        return Chord(x, d.copy(), min(float(y_lo[n]), 0.0) + 0.0,
                     max(float(y_hi[n]), 0.0) + 0.0)

    # -- tiles ------------------------------------------------------------
    def extract(self, x) -> Tile:
        """Tile containing ``x`` under the fixed objective."""
        x = self._point(x)
        code, y, st, bs, dred = self._solve(self._M, x, self._c, self._lo, self._hi, False)
        if code == 1:
            raise NotInZonotopeError(f"point {x} is not in the zonotope")
        if code != 0:
            raise LpError(f"tile program ended with status {code}")
        nonbasic = st != 2
        if np.any(np.abs(dred[nonbasic]) <= self._tie_tol):
            raise TieError("tiling objective has a tie at this point; redraw c with another seed")
        frac = fractional_mask(y)
        basis = self._complete_basis(np.flatnonzero(frac), bs, y)
        xi = np.rint(np.clip(y, 0.0, 1.0)).astype(np.int8)
        xi[list(basis)] = 0
        return Tile(basis, xi, y, bs, st)

    def _complete_basis(self, frac_idx: np.ndarray, lp_basis: np.ndarray, y) -> tuple[int, ...]:
        r = self.r
        if frac_idx.shape[0] == r:
            return tuple(int(i) for i in frac_idx)
        if frac_idx.shape[0] > r:
            raise LpError("optimal vertex has more than r fractional coordinates")
        # degenerate vertex: add basic-at-bound variables in index order, then
        # any other column, keeping the chosen columns independent
        chosen = [int(i) for i in frac_idx]
        rest = sorted(set(int(i) for i in lp_basis) - set(chosen))
        rest += [j for j in range(self.n) if j not in set(chosen) | set(rest)]
        for j in rest:
            if len(chosen) == r:
                break
            trial = chosen + [j]
            if _independent(self._M[:, trial], self.A.det_tol):
                chosen = trial
        return tuple(sorted(chosen))

    def tile_offset(self, basis) -> np.ndarray:
        """0/1 offset of the tile of ``basis``, from reduced-cost signs.

        A nonbasic column with negative reduced cost sits at its upper bound
        at every point of the tile's interior.
        """
        B = list(basis)
        AB = self._M[:, B]
        w = np.linalg.solve(AB.T, self._c[B])
        red = self._c - self._M.T @ w
        xi = (red < 0.0).astype(np.int8)
        xi[B] = 0
        return xi

    def tile_point(self, basis, u) -> np.ndarray:
        """``A xi_B + A_B u``: the point with tile coordinates ``u``."""
        B = list(basis)
        return self._M @ self.tile_offset(B) + self._M[:, B] @ np.asarray(u, dtype=np.float64)

    def log_volume(self, basis) -> float:
        return log_abs_det(self.A, basis)

    # -- internals --------------------------------------------------------
    def _point(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.r,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.r},)")
        return x

    def _solve(self, M, b, c, lo, hi, phase1, hint_b=None, hint_s=None):
        m = M.shape[1]
        y = np.empty(m)
        st = np.empty(m, dtype=np.int8)
        bs = np.empty(self.r, dtype=np.int64)
        dred = np.empty(m)
        code, _, _ = core.simplex_solve(M, b, c, lo, hi, phase1, hint_b, hint_s,
                                        self._bland_after, self._max_iter, FEAS_TOL,
                                        PIVOT_TOL, OPT_TOL, y, st, bs, dred)
        if code == 3:
            raise LpError("simplex exceeded its pivot budget")
        return code, y, st, bs, dred


def _independent(cols: np.ndarray, tol: float) -> bool:
    if cols.shape[1] > cols.shape[0]:
        return False
    R = np.linalg.qr(cols, mode="r")
    return bool(np.all(np.abs(np.diag(R)) > tol))


def contains(A, x) -> bool:
    """Membership test ``x in Z(A)`` by a Phase I feasibility solve."""
    return Zonotope(A, TilingObjective(np.zeros(as_feature_matrix(A).n))).contains(x)


def chord_endpoints(A, x, d) -> Chord:
    """Endpoints of the chord through ``x`` with direction ``d`` (two LPs)."""
    return Zonotope(A, TilingObjective(np.zeros(as_feature_matrix(A).n))).chord(x, d)


def extract_basis(A, c, x) -> tuple[tuple[int, ...], np.ndarray]:
    """``(B, xi)`` for the tile containing ``x`` under objective ``c``."""
    obj = c if isinstance(c, TilingObjective) else TilingObjective(np.asarray(c, dtype=np.float64))
    tile = Zonotope(A, obj).extract(x)
    return tile.basis, tile.xi


def uniform_point(A, rng: np.random.Generator) -> np.ndarray:
    A = as_feature_matrix(A)
    return A.data @ rng.uniform(size=A.n)


__all__ = [
    "AT_LOWER", "AT_UPPER", "BOUND_TOL", "Chord", "Tile", "TilingObjective",
    "Zonotope", "chord_endpoints", "contains", "extract_basis", "uniform_point",
]
