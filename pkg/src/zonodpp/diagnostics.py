"""Ground-truth laws and convergence metrics for basis samplers."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import EnumerationLimitError
from .numerics import as_feature_matrix, build_projection_kernel, cauchy_binet_total
from .samplers import ChainTrace

ENUMERATION_GUARD = 10**6
DEFAULT_BURN_IN = 0.1

Basis = tuple[int, ...]


@dataclass(frozen=True)
class ExactLaw:
    """Basis law with mass proportional to ``prod_{i in B} q_i * det(A_B)^2``.

    Only bases with nonzero mass are listed, in lexicographic order.
    ``normalizer`` is the total unnormalized mass (``det(A A^T)`` when
    unweighted).
    """

    bases: tuple[Basis, ...]
    probs: np.ndarray
    normalizer: float
    r: int
    n: int

    def __len__(self) -> int:
        return len(self.bases)

    def as_dict(self) -> dict[Basis, float]:
        return dict(zip(self.bases, self.probs.tolist()))

    def prob(self, basis: Iterable[int]) -> float:
        return self.as_dict().get(tuple(sorted(basis)), 0.0)

    def inclusion(self, S: Iterable[int]) -> float:
        S = set(S)
        if len(S) > self.r:
            return 0.0
        return float(sum(p for B, p in zip(self.bases, self.probs) if S.issubset(B)))


def n_subsets(n: int, r: int) -> int:
    return math.comb(n, r)


def enumerate_law(A, weights: Optional[Sequence[float]] = None,
                  guard: int = ENUMERATION_GUARD, chunk: int = 50000) -> ExactLaw:
    """Brute-force the basis law of ``A`` (optionally weighted per column).

    Refuses when ``C(n, r)`` exceeds ``guard``.
    """
    A = as_feature_matrix(A)
    r, n = A.shape
    total = math.comb(n, r)
    if total > guard:
        raise EnumerationLimitError(f"C({n}, {r}) = {total} subsets exceeds the guard {guard}")
    q = None if weights is None else np.asarray(weights, dtype=np.float64)
    if q is not None and (q.shape != (n,) or np.any(q <= 0)):
        raise ValueError(f"weights must be {n} positive values")
    data = A.data
    keep_b: list[Basis] = []
    keep_m: list[np.ndarray] = []
    combos = itertools.combinations(range(n), r)
    tol = A.det_tol ** r if r else 0.0
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        sub = np.transpose(data[:, block], (1, 0, 2))
        dets = np.linalg.det(sub)
        nz = np.abs(dets) > max(tol, 1e-13 * A.scale ** r)
        mass = dets[nz] ** 2
        if q is not None:
            mass = mass * np.prod(q[block[nz]], axis=1)
        keep_b.extend(tuple(int(v) for v in row) for row in block[nz])
        keep_m.append(mass)
    mass = np.concatenate(keep_m) if keep_m else np.zeros(0)
    Z = float(mass.sum())
    probs = mass / Z
    probs.setflags(write=False)
    return ExactLaw(tuple(keep_b), probs, Z, r, n)


def kernel_inclusion(A, S: Iterable[int]) -> float:
    """``P(S in B) = det K_S`` from the projection kernel (no enumeration)."""
    S = sorted(set(S))
    A = as_feature_matrix(A)
    if len(S) > A.r:
        return 0.0
    if not S:
        return 1.0
    K = build_projection_kernel(A).K
    return float(np.linalg.det(K[np.ix_(S, S)]))


# -- trace statistics -----------------------------------------------------

def _burn(trace: ChainTrace, burn_in: float) -> int:
    if not 0.0 <= burn_in < 1.0:
        raise ValueError(f"burn_in must lie in [0, 1), got {burn_in}")
    return int(len(trace) * burn_in)


def running_average(trace: ChainTrace, S: Iterable[int], burn_in: float = 0.0) -> np.ndarray:
    """Running frequency of ``S in B_t`` (from step 0 by default)."""
    S = list(S)
    if len(S) > trace.r:
        return np.zeros(len(trace) - _burn(trace, burn_in))
    ind = trace.indicator(S)[_burn(trace, burn_in):]
    return np.cumsum(ind, dtype=np.float64) / np.arange(1, ind.shape[0] + 1)


def inclusion_probability(source: Union[ExactLaw, ChainTrace], S: Iterable[int],
                          burn_in: float = 0.0):
    """``P(S in B)``: a number for an exact law, a running-average curve for a trace."""
    if isinstance(source, ExactLaw):
        return source.inclusion(S)
    return running_average(source, S, burn_in)


def relative_error_trace(trace: ChainTrace, truth: Union[ExactLaw, float],
                         S: Iterable[int], burn_in: float = 0.0) -> np.ndarray:
    """``|estimate_t - truth| / truth`` along the running average."""
    S = list(S)
    p = truth.inclusion(S) if isinstance(truth, ExactLaw) else float(truth)
    if not p > 0:
        raise ValueError(f"P(S in B) = 0 for S = {S}; choose another subset")
    return np.abs(running_average(trace, S, burn_in) - p) / p


@dataclass(frozen=True)
class ErrorBand:
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def error_band(curves: Sequence[np.ndarray], lower_q: float = 0.1,
               upper_q: float = 0.9) -> ErrorBand:
    """Median and decile band across chains, truncated to the shortest curve."""
    T = min(len(c) for c in curves)
    X = np.stack([np.asarray(c)[:T] for c in curves])
    lo, med, hi = np.quantile(X, [lower_q, 0.5, upper_q], axis=0)
    return ErrorBand(med, lo, hi)


def seeded_subset(n: int, size: int = 3, seed: Optional[int] = None,
                  law: Optional[Union[ExactLaw, "object"]] = None,
                  max_tries: int = 1000) -> tuple[int, ...]:
    """A uniformly drawn ``size``-subset of ``[n]``.

    With ``law`` (an ExactLaw, or a feature matrix for ``det K_S``), subsets
    of zero inclusion probability are redrawn.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        S = tuple(sorted(int(v) for v in rng.choice(n, size=size, replace=False)))
        if law is None:
            return S
        p = law.inclusion(S) if isinstance(law, ExactLaw) else kernel_inclusion(law, S)
        if p > 1e-12:
            return S
    raise ValueError(f"no {size}-subset with positive inclusion probability found")


# -- Gelman-Rubin ---------------------------------------------------------

@dataclass(frozen=True)
class PsrfReport:
    """Potential scale reduction factor and its variance components.

    ``defined`` is False when every chain has zero within-chain variance;
    ``psrf`` is then ``inf`` if the chain means differ and ``nan`` if not.
    """

    psrf: float
    within: float
    between: float
    pooled: float
    chains: int
    steps: int
    defined: bool
    statistic: str = ""

    def to_text(self) -> str:
        lines = [
            "[psrf]",
            f"statistic = {self.statistic}",
            f"chains = {self.chains}",
            f"steps = {self.steps}",
            f"defined = {str(self.defined).lower()}",
            f"within_variance = {self.within!r}",
            f"between_variance = {self.between!r}",
            f"pooled_variance = {self.pooled!r}",
            f"psrf = {self.psrf!r}",
        ]
        if not self.defined:
            lines.append("note = zero within-chain variance in every chain")
        return "\n".join(lines) + "\n"


def psrf(chains, statistic: str = "") -> PsrfReport:
    """Gelman-Rubin PSRF of an ``M x N`` array (one row per chain).

    ``W`` is the mean within-chain variance, ``B = N var(chain means)``,
    ``V = (N-1)/N W + (M+1)/(M N) B`` and ``R = sqrt(V / W)``.
    """
    X = np.asarray(chains, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("psrf expects an M x N array")
    M, N = X.shape
    if M < 2 or N < 10:
        raise ValueError(f"psrf needs M >= 2 chains and N >= 10 steps, got {M} x {N}")
    means = X.mean(axis=1)
    W = float(np.mean(X.var(axis=1, ddof=1)))
    B = float(N * means.var(ddof=1))
    V = (N - 1) / N * W + (M + 1) / (M * N) * B
    if W <= 0.0:
        return PsrfReport(math.inf if B > 0 else math.nan, W, B, V, M, N, False, statistic)
    return PsrfReport(math.sqrt(V / W), W, B, V, M, N, True, statistic)


def indicator_matrix(traces: Sequence[ChainTrace], S: Iterable[int],
                     burn_in: float = 0.0) -> np.ndarray:
    """``M x N`` 0/1 matrix of ``S in B_t``, truncated to the shortest chain."""
    S = list(S)
    starts = [_burn(t, burn_in) for t in traces]
    N = min(len(t) - s for t, s in zip(traces, starts))
    return np.stack([t.indicator(S)[s:s + N] for t, s in zip(traces, starts)])


def psrf_curve(chains, checkpoints: Sequence[int]) -> list[PsrfReport]:
    """PSRF on growing prefixes of the chains."""
    X = np.asarray(chains)
    return [psrf(X[:, :k]) for k in checkpoints]


# -- distances and rates --------------------------------------------------

def empirical_law(source, burn_in: float = DEFAULT_BURN_IN) -> dict[Basis, float]:
    """Basis frequencies from a trace, several traces, or a list of bases."""
    if isinstance(source, ChainTrace):
        source = [source]
    counts: dict[Basis, int] = {}
    total = 0
    items = list(source)
    if items and isinstance(items[0], ChainTrace):
        for tr in items:
            rows = tr.bases[_burn(tr, burn_in):]
            uniq, cnt = np.unique(rows, axis=0, return_counts=True)
            for row, c in zip(uniq, cnt):
                key = tuple(int(v) for v in row)
                counts[key] = counts.get(key, 0) + int(c)
            total += rows.shape[0]
    else:
        for B in items:
            key = tuple(sorted(int(v) for v in B))
            counts[key] = counts.get(key, 0) + 1
            total += 1
    if total == 0:
        raise ValueError("no samples")
    return {B: c / total for B, c in counts.items()}


def tv_distance(empirical, law: Union[ExactLaw, Mapping[Basis, float]],
                burn_in: float = DEFAULT_BURN_IN) -> float:
    """``1/2 sum_B |freq(B) - p(B)|`` over the union of supports."""
    if not isinstance(empirical, Mapping):
        empirical = empirical_law(empirical, burn_in)
    p = law.as_dict() if isinstance(law, ExactLaw) else dict(law)
    keys = set(empirical) | set(p)
    return 0.5 * sum(abs(empirical.get(k, 0.0) - p.get(k, 0.0)) for k in keys)


def acceptance_rate(trace: ChainTrace) -> float:
    """Accepted proposals over proposals made.

    Lazy self-loops of basis-exchange are not proposals; see
    :func:`move_rate` for the per-step figure. The two coincide for the
    zonotope samplers.
    """
    proposed = int(np.count_nonzero(trace.proposed))
    if len(trace) == 0 or proposed == 0:
        raise ValueError("acceptance rate of a trace without proposals")
    return int(np.count_nonzero(trace.accepted)) / proposed


def move_rate(trace: ChainTrace) -> float:
    """Accepted moves over all steps (lazy steps count as rejections)."""
    if len(trace) == 0:
        raise ValueError("move rate of an empty trace")
    return int(np.count_nonzero(trace.accepted)) / len(trace)


# -- output ---------------------------------------------------------------

METRICS_HEADER = ("step", "statistic", "chain", "value")


def write_metrics(path, rows: Iterable[tuple[int, str, Union[int, str], float]]) -> None:
    """CSV with columns ``step,statistic,chain,value``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for step, stat, chain, value in rows:
            w.writerow((int(step), stat, chain, repr(float(value))))


def read_metrics(path) -> list[tuple[int, str, str, float]]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        return [(int(s), st, ch, float(v)) for s, st, ch, v in rd]


def cauchy_binet_check(law: ExactLaw, A) -> float:
    """Relative gap between the enumerated normalizer and ``det(A A^T)``."""
    ref = cauchy_binet_total(A)
    return abs(law.normalizer - ref) / ref
