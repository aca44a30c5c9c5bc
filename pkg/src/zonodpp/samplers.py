"""Samplers over matroid bases.

Exact: chain-rule sampler for projection kernels and Aldous-Broder for
uniform spanning trees. MCMC: the lazy basis-exchange walk, hit-and-run
on the zonotope with uniform target (bases drawn proportionally to
``|det A_B|``), and hit-and-run with the piecewise-constant target
``|det A_{B_x}|`` (bases drawn proportionally to ``det(A_B)^2``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np

from ._backend import core
from .errors import ChainError, ConfigError, NotInZonotopeError, NumericalBreakdownError
from .models import DppTarget, Graph, make_target
from .numerics import FeatureMatrix, ProjectionKernel, as_feature_matrix
from .zonotope import Tile, TilingObjective, Zonotope

SamplerKind = Literal["exact", "aldous-broder", "basis-exchange", "unif-zonotope", "vol-zonotope"]
KINDS: tuple[str, ...] = ("exact", "aldous-broder", "basis-exchange", "unif-zonotope",
                          "vol-zonotope")
MCMC_KINDS = ("basis-exchange", "unif-zonotope", "vol-zonotope")

# conditional masses below -NEG_MASS_TOL signal breakdown; smaller negatives clamp to 0
NEG_MASS_TOL = 1e-8


# -- exact samplers -------------------------------------------------------

def exact_projection_dpp(K: Union[ProjectionKernel, np.ndarray],
                         rng: np.random.Generator) -> tuple[int, ...]:
    """One draw from the projection DPP with kernel ``K`` by the chain rule.

    Step ``l`` picks ``i`` with probability proportional to the Schur
    complement ``K_ii - K_{i,I} K_I^{-1} K_{I,i}``, maintained by rank-one
    downdates of the residual kernel.
    """
    Kres = np.array(K.K if isinstance(K, ProjectionKernel) else K, dtype=np.float64)
    n = Kres.shape[0]
    r = int(round(float(np.trace(Kres))))
    picked: list[int] = []
    for _ in range(r):
        p = np.diag(Kres).copy()
        if np.min(p) < -NEG_MASS_TOL:
            raise NumericalBreakdownError(f"negative conditional mass {np.min(p):.3g}")
        p = np.clip(p, 0.0, None)
        p[picked] = 0.0
        total = p.sum()
        if total <= 0.0:
            raise NumericalBreakdownError("conditional masses vanished before r items")
        i = int(np.searchsorted(np.cumsum(p), rng.uniform() * total, side="right"))
        i = min(i, n - 1)
        col = Kres[:, i].copy()
        Kres -= np.outer(col, col) / col[i]
        picked.append(i)
    return tuple(sorted(picked))


def exact_projection_dpp_batch(A, size: int, rng: np.random.Generator,
                               chunk: int = 20000) -> np.ndarray:
    """``size`` i.i.d. draws (rows of sorted indices) using the feature matrix.

    Works with an orthonormal basis ``V`` of the row space of ``A``
    (``K = V V^T``) and projects out each chosen row, vectorized over draws.
    """
    A = as_feature_matrix(A)
    r, n = A.shape
    Q, _ = np.linalg.qr(A.data.T)
    out = np.empty((size, r), dtype=np.int64)
    done = 0
    while done < size:
        S = min(chunk, size - done)
        V = np.broadcast_to(Q, (S, n, r)).copy()
        rows = np.arange(S)
        for ell in range(r):
            w2 = np.einsum("snk,snk->sn", V, V)
            if np.min(w2) < -NEG_MASS_TOL:
                raise NumericalBreakdownError("negative conditional mass")
            np.clip(w2, 0.0, None, out=w2)
            if ell:
                w2[rows[:, None], out[done:done + S, :ell]] = 0.0
            cum = np.cumsum(w2, axis=1)
            u = rng.uniform(size=S) * cum[:, -1]
            pick = np.minimum((cum < u[:, None]).sum(axis=1), n - 1)
            out[done:done + S, ell] = pick
            v = V[rows, pick]
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            V -= np.einsum("snk,sk->sn", V, v)[:, :, None] * v[:, None, :]
        done += S
    out.sort(axis=1)
    return out


def aldous_broder(graph: Graph, rng: np.random.Generator,
                  start: Optional[int] = None) -> tuple[int, ...]:
    """Uniform spanning tree by the Aldous-Broder random walk.

    Returns the sorted edge indices. Edge weights are ignored.
    """
    if not graph.is_connected():
        raise ValueError("Aldous-Broder needs a connected graph")
    adj = graph.adjacency()
    index = graph.edge_index()
    v = int(rng.integers(graph.m)) if start is None else int(start)
    seen = [False] * graph.m
    seen[v] = True
    remaining = graph.m - 1
    tree = []
    while remaining:
        nbrs = adj[v]
        w = nbrs[int(rng.integers(len(nbrs)))]
        if not seen[w]:
            seen[w] = True
            remaining -= 1
            tree.append(index[(min(v, w), max(v, w))])
        v = w
    return tuple(sorted(tree))


# -- chain state ----------------------------------------------------------

@dataclass
class ChainState:
    """Current state of one chain.

    ``x``/``tile`` are set for zonotope chains only. ``log_vol`` caches the
    log-volume of the current basis under the sampler's acceptance matrix.
    """

    step: int
    basis: tuple[int, ...]
    x: Optional[np.ndarray] = None
    tile: Optional[Tile] = None
    accepted: bool = False
    proposed: bool = False
    n_accepted: int = 0
    log_vol: float = 0.0
    rng: Optional[np.random.Generator] = field(default=None, repr=False)


def _log_vol2(M: Union[FeatureMatrix, ProjectionKernel], idx) -> float:
    """Log squared volume of ``idx`` (feature matrix) or log det K_idx."""
    if isinstance(M, ProjectionKernel):
        return core.lu_log_abs_det(M.K[np.ix_(idx, idx)], 1e-12)
    return 2.0 * core.lu_log_abs_det(M.data[:, idx], M.det_tol)


def basis_exchange_step(state: ChainState, A: Union[FeatureMatrix, ProjectionKernel],
                        rng: np.random.Generator, laziness: float = 0.5) -> ChainState:
    """One step of the lazy basis-exchange walk.

    With probability ``laziness`` stay put; otherwise swap a uniform ``s`` in
    the basis for a uniform ``t`` outside it and accept with probability
    ``V(P) / (V(B) + V(P))`` where ``V`` is the squared volume (or the
    principal minor of ``K``). ``state.log_vol`` must hold ``V(B)`` in log
    form.
    """
    B = state.basis
    r = len(B)
    n = A.n if isinstance(A, ProjectionKernel) else A.n
    if rng.uniform() >= 1.0 - laziness:
        return ChainState(state.step + 1, B, accepted=False, proposed=False,
                          n_accepted=state.n_accepted, log_vol=state.log_vol)
    s_pos = int(rng.integers(r))
    t = int(rng.integers(n - r))
    for b in B:
        if b <= t:
            t += 1
    P = tuple(sorted(B[:s_pos] + B[s_pos + 1:] + (t,)))
    lp = _log_vol2(A, list(P))
    u = rng.uniform()
    if lp == -math.inf:
        accept = False
    else:
        # V(P) / (V(B) + V(P)) = 1 / (1 + exp(lB - lP))
        accept = u * (1.0 + math.exp(min(state.log_vol - lp, 700.0))) < 1.0
    if accept:
        return ChainState(state.step + 1, P, accepted=True, proposed=True,
                          n_accepted=state.n_accepted + 1, log_vol=lp)
    return ChainState(state.step + 1, B, accepted=False, proposed=True,
                      n_accepted=state.n_accepted, log_vol=state.log_vol)


def random_direction(r: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on the unit sphere (normalized Gaussian)."""
    while True:
        d = rng.standard_normal(r)
        nrm = float(np.sqrt(d @ d))
        if nrm > 1e-300:
            return d / nrm


def _hit_and_run_proposal(state: ChainState, Z: Zonotope, rng: np.random.Generator):
    d = random_direction(Z.r, rng)
    try:
        ch = Z.chord(state.x, d, state.tile)
    except NotInZonotopeError as exc:
        raise ChainError(f"chain state left the zonotope at step {state.step}") from exc
    alpha = rng.uniform(ch.alpha_min, ch.alpha_max)
    x_new = state.x + alpha * d
    try:
        tile = Z.extract(x_new)
    except NotInZonotopeError as exc:
        raise ChainError(f"proposal left the zonotope at step {state.step}") from exc
    return x_new, tile


def unif_zono_step(state: ChainState, Z: Zonotope, rng: np.random.Generator) -> ChainState:
    """Hit-and-run step with uniform target on ``Z(A)``; always accepted."""
    x_new, tile = _hit_and_run_proposal(state, Z, rng)
    return ChainState(state.step + 1, tile.basis, x_new, tile, accepted=True, proposed=True,
                      n_accepted=state.n_accepted + 1)


def vol_zono_step(state: ChainState, Z: Zonotope, rng: np.random.Generator,
                  acceptance: Optional[FeatureMatrix] = None) -> ChainState:
    """Hit-and-run step targeting density proportional to ``|det A_{B_x}|``.

    The move to the proposed point is accepted with probability
    ``min(1, |det V_{B'}| / |det V_B|)`` with ``V = acceptance`` (defaults to
    the zonotope's own matrix). ``state.log_vol`` must hold
    ``log|det V_B|``.
    """
    V = Z.A if acceptance is None else acceptance
    x_new, tile = _hit_and_run_proposal(state, Z, rng)
    if tile.basis == state.basis:
        lv = state.log_vol
    else:
        lv = core.lu_log_abs_det(V.data[:, list(tile.basis)], V.det_tol)
    u = rng.uniform()
    if lv != -math.inf and (lv >= state.log_vol or math.log(u) < lv - state.log_vol):
        return ChainState(state.step + 1, tile.basis, x_new, tile, accepted=True,
                          proposed=True, n_accepted=state.n_accepted + 1, log_vol=lv)
    return ChainState(state.step + 1, state.basis, state.x, state.tile, accepted=False,
                      proposed=True, n_accepted=state.n_accepted, log_vol=state.log_vol)


# -- configuration and traces ---------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "vol-zonotope"
    steps: Optional[int] = None
    seconds: Optional[float] = None
    seed: int = 0
    tiling_seed: int = 0
    base_measure: str = "none"
    laziness: float = 0.5
    record_time: bool = True
    debug: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown sampler kind {self.kind!r}; choose from {KINDS}")
        if self.steps is None and self.seconds is None:
            raise ConfigError("set a step budget, a wall-clock budget, or both")
        if self.steps is not None and (not isinstance(self.steps, (int, np.integer))
                                       or self.steps <= 0):
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        if self.seconds is not None and not self.seconds > 0:
            raise ConfigError(f"seconds must be positive, got {self.seconds!r}")
        if self.base_measure not in ("none", "sqrt-q", "q-scaled"):
            raise ConfigError(f"unknown base-measure mode {self.base_measure!r}")
        if not 0.0 <= self.laziness < 1.0:
            raise ConfigError(f"laziness must lie in [0, 1), got {self.laziness}")


@dataclass
class ChainTrace:
    """Per-step record of one chain (the initial state is not a step)."""

    kind: str
    r: int
    n: int
    initial: tuple[int, ...]
    bases: np.ndarray          # (steps, r) sorted indices
    accepted: np.ndarray       # (steps,) bool
    proposed: np.ndarray       # (steps,) bool
    elapsed_ns: np.ndarray     # (steps,) int64, 0 when timing is off
    chain_id: int = 0
    complete: bool = True

    def __len__(self) -> int:
        return self.bases.shape[0]

    def basis_tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.bases]

    def indicator(self, S) -> np.ndarray:
        """0/1 series: does the basis at each step contain ``S``?"""
        S = list(S)
        if not S:
            return np.ones(len(self), dtype=np.int8)
        hit = np.zeros((len(self), self.n), dtype=bool)
        np.put_along_axis(hit, self.bases, True, axis=1)
        return np.all(hit[:, S], axis=1).astype(np.int8)


def chain_streams(seed: int, chain_id: int) -> dict[str, np.random.SeedSequence]:
    """Independent streams for one chain, derived from ``seed`` by spawn key.

    ``init`` draws the starting point; each sampler kind has its own step
    stream, so samplers compared from the same start never share draws.
    """
    streams = {"init": np.random.SeedSequence(seed, spawn_key=(chain_id, 0))}
    for code, kind in enumerate(KINDS, start=1):
        streams[kind] = np.random.SeedSequence(seed, spawn_key=(chain_id, code))
    return streams


def initial_tile(Z: Zonotope, rng: np.random.Generator) -> tuple[np.ndarray, Tile]:
    """Starting point ``A u`` (``u`` uniform on the cube) and its tile."""
    x0 = Z.uniform_point(rng)
    return x0, Z.extract(x0)


def run_chain(config: SamplerConfig, target: Union[DppTarget, FeatureMatrix, np.ndarray],
              rng: Optional[np.random.Generator] = None, *, chain_id: int = 0,
              zonotope: Optional[Zonotope] = None, init: Optional[tuple] = None,
              graph: Optional[Graph] = None) -> ChainTrace:
    """Run one chain of ``config.kind`` until its step or wall-clock budget.

    Zonotope chains start from ``x0 = A u`` and its extracted tile;
    basis-exchange starts from that tile's basis. ``init=(x0, tile)`` forces
    a shared start. ``rng`` defaults to the stream derived from
    ``config.seed`` and ``chain_id``.
    """
    if not isinstance(target, DppTarget):
        target = make_target(as_feature_matrix(target))
    r, n = target.r, target.n
    streams = chain_streams(config.seed, chain_id)
    if rng is None:
        rng = np.random.default_rng(streams[config.kind])
    kind = config.kind

    Z = zonotope
    if Z is None and kind in MCMC_KINDS:
        Z = Zonotope(target.geometry, TilingObjective.draw(n, config.tiling_seed))
    if kind in MCMC_KINDS:
        if init is None:
            init = initial_tile(Z, np.random.default_rng(streams["init"]))
        x0, tile0 = init

    if kind == "exact":
        initial: tuple[int, ...] = ()
        state = ChainState(0, ())
        batch: list = []

        def step(st):
            if not batch:
                draws = exact_projection_dpp_batch(target.dpp, 4096, rng)
                batch.extend(tuple(int(v) for v in row) for row in draws[::-1])
            return ChainState(st.step + 1, batch.pop(), accepted=True, proposed=True,
                              n_accepted=st.n_accepted + 1)
    elif kind == "aldous-broder":
        if graph is None:
            raise ConfigError("aldous-broder needs a graph model")
        if graph.weights is not None or target.measure is not None:
            raise ConfigError("aldous-broder samples uniform spanning trees only")
        initial = ()
        state = ChainState(0, ())

        def step(st):
            return ChainState(st.step + 1, aldous_broder(graph, rng), accepted=True,
                              proposed=True, n_accepted=st.n_accepted + 1)
    elif kind == "basis-exchange":
        initial = tile0.basis
        M = target.dpp
        state = ChainState(0, initial, log_vol=_log_vol2(M, list(initial)))
        lazy = config.laziness

        def step(st):
            return basis_exchange_step(st, M, rng, lazy)
    elif kind == "unif-zonotope":
        initial = tile0.basis
        state = ChainState(0, initial, x0, tile0)

        def step(st):
            return unif_zono_step(st, Z, rng)
    else:
        initial = tile0.basis
        V = target.acceptance
        state = ChainState(0, initial, x0, tile0,
                           log_vol=core.lu_log_abs_det(V.data[:, list(initial)], V.det_tol))

        def step(st):
            return vol_zono_step(st, Z, rng, V)

    limit = config.steps if config.steps is not None else None
    deadline_ns = None if config.seconds is None else int(config.seconds * 1e9)
    timed = config.record_time or deadline_ns is not None
    cap = limit if limit is not None else 1024
    bases = np.empty((cap, r), dtype=np.int32)
    accepted = np.empty(cap, dtype=bool)
    proposed = np.empty(cap, dtype=bool)
    elapsed = np.zeros(cap, dtype=np.int64)
    t0 = time.perf_counter_ns()
    i = 0
    complete = True
    try:
        while True:
            if limit is not None and i >= limit:
                break
            if deadline_ns is not None and time.perf_counter_ns() - t0 >= deadline_ns:
                break
            state = step(state)
            if i == cap:
                cap *= 2
                bases = np.resize(bases, (cap, r))
                accepted = np.resize(accepted, cap)
                proposed = np.resize(proposed, cap)
                elapsed = np.resize(elapsed, cap)
            bases[i] = state.basis
            accepted[i] = state.accepted
            proposed[i] = state.proposed
            if config.record_time:
                elapsed[i] = time.perf_counter_ns() - t0
            if config.debug and state.x is not None and state.accepted:
                if Z.extract(state.x).basis != state.basis:
                    raise ChainError(f"incoherent chain state at step {state.step}")
            i += 1
    except KeyboardInterrupt:
        complete = False
    if not timed:
        elapsed[:i] = 0
    if i == 0:
        raise ChainError("chain produced no steps within its budget")
    return ChainTrace(kind, r, n, tuple(int(v) for v in initial), bases[:i].copy(),
                      accepted[:i].copy(), proposed[:i].copy(), elapsed[:i].copy(),
                      chain_id, complete)
