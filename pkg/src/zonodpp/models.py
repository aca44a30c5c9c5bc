"""Feature-matrix construction: graph incidence matroids, files, base measures."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import RankError, ZonoDppError
from .numerics import FeatureMatrix, as_feature_matrix, numerical_rank

Mode = Literal["sqrt-q", "q-scaled"]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..m-1``; edge order fixes
    column order."""

    m: int
    edges: tuple[tuple[int, int], ...]
    weights: Optional[tuple[float, ...]] = None
    kind: str = "edge-list"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"graph needs at least 2 vertices, got {self.m}")
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.m and 0 <= v < self.m) or u == v:
                raise ValueError(f"invalid edge ({u}, {v}) for {self.m} vertices")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        if self.weights is not None:
            if len(self.weights) != len(self.edges):
                raise ValueError("one weight per edge required")
            if any(not w > 0 for w in self.weights):
                raise ValueError("edge weights must be positive")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def is_connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.m

    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(min(u, v), max(u, v)): i for i, (u, v) in enumerate(self.edges)}


def complete_graph(m: int) -> Graph:
    edges = tuple((i, j) for i in range(m) for j in range(i + 1, m))
    return Graph(m, edges, kind="complete", params={"m": m})


def barabasi_albert(m: int, k: int, seed: Optional[int] = None) -> Graph:
    """Preferential-attachment graph ``BA(m, k)``.

    Starts from the complete graph on ``k`` vertices; each later vertex
    attaches to ``k`` distinct existing vertices drawn with probability
    proportional to degree (uniformly while all degrees are zero).
    """
    if not (isinstance(m, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise TypeError("m and k must be integers")
    if k < 1 or m <= k:
        raise ValueError(f"need m > k >= 1, got m={m}, k={k}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    deg = np.zeros(m)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    for v in range(k, m):
        w = deg[:v]
        total = w.sum()
        p = np.full(v, 1.0 / v) if total == 0 else w / total
        if np.count_nonzero(p) < k:
            p = (w + 1.0) / (total + v)
        targets = rng.choice(v, size=k, replace=False, p=p)
        for t in sorted(int(t) for t in targets):
            edges.append((t, v))
            deg[t] += 1
            deg[v] += 1
    return Graph(m, tuple(edges), kind="barabasi-albert",
                 params={"m": m, "k": k, "seed": seed})


def incidence_feature_matrix(g: Graph) -> FeatureMatrix:
    """Reduced vertex-edge incidence matrix of a connected graph.

    Column ``e = (u, v)`` with ``u < v`` has ``+1`` in row ``u`` and ``-1`` in
    row ``v``; the last vertex's row is dropped, leaving ``m - 1`` rows. A
    set of columns is a basis iff its edges form a spanning tree.
    """
    if not g.is_connected():
        raise RankError("graph is disconnected; incidence matrix is rank deficient")
    A = np.zeros((g.m, g.n_edges))
    for e, (u, v) in enumerate(g.edges):
        lo_v, hi_v = min(u, v), max(u, v)
        A[lo_v, e] = 1.0
        A[hi_v, e] = -1.0
    return FeatureMatrix(A[:-1])


def graph_weights(g: Graph) -> Optional[np.ndarray]:
    return None if g.weights is None else np.asarray(g.weights, dtype=np.float64)


@dataclass(frozen=True)
class BaseMeasure:
    """Positive per-column weights and how they enter the sampler."""

    q: np.ndarray
    mode: Mode = "q-scaled"

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=np.float64, copy=True)
        if q.ndim != 1 or not np.all(q > 0) or not np.all(np.isfinite(q)):
            raise ValueError("base measure weights must be finite and positive")
        if self.mode not in ("sqrt-q", "q-scaled"):
            raise ValueError(f"unknown base-measure mode {self.mode!r}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform_random(cls, n: int, seed: Optional[int] = None,
                       mode: Mode = "q-scaled") -> "BaseMeasure":
        """i.i.d. Unif(0, 1] weights (zero is redrawn)."""
        rng = np.random.default_rng(seed)
        q = rng.uniform(size=n)
        while np.any(q == 0.0):
            q[q == 0.0] = rng.uniform(size=int(np.sum(q == 0.0)))
        return cls(q, mode)


def apply_base_measure(A, q: BaseMeasure) -> FeatureMatrix:
    """Column-scaled feature matrix defining the weighted zonotope.

    ``sqrt-q`` scales column ``i`` by ``sqrt(q_i)`` (use it for both geometry
    and acceptance); ``q-scaled`` scales by ``q_i`` (geometry only; acceptance
    keeps the original volumes). Both give basis law
    ``prod_{i in B} q_i * det(A_B)^2``.
    """
    A = as_feature_matrix(A)
    if q.q.shape != (A.n,):
        raise ValueError(f"need {A.n} weights, got {q.q.shape[0]}")
    s = np.sqrt(q.q) if q.mode == "sqrt-q" else q.q
    return FeatureMatrix(A.data * s[None, :])


@dataclass(frozen=True)
class DppTarget:
    """Everything a sampler needs about its target.

    ``dpp``: matrix whose squared minors give the target basis law.
    ``geometry``: matrix whose zonotope hit-and-run explores.
    ``acceptance``: matrix whose minors enter the zonotope acceptance ratio.
    """

    dpp: FeatureMatrix
    geometry: FeatureMatrix
    acceptance: FeatureMatrix
    base: FeatureMatrix
    measure: Optional[BaseMeasure] = None

    @property
    def r(self) -> int:
        return self.dpp.r

    @property
    def n(self) -> int:
        return self.dpp.n


def make_target(A, measure: Optional[BaseMeasure] = None) -> DppTarget:
    A = as_feature_matrix(A)
    if measure is None:
        return DppTarget(A, A, A, A, None)
    sq = apply_base_measure(A, BaseMeasure(measure.q, "sqrt-q"))
    if measure.mode == "sqrt-q":
        return DppTarget(sq, sq, sq, A, measure)
    return DppTarget(sq, apply_base_measure(A, measure), A, A, measure)


# -- files ----------------------------------------------------------------

class ParseError(ZonoDppError, ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def _data_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def load_feature_matrix(path, jitter: float = 0.0,
                        seed: Optional[int] = None) -> FeatureMatrix:
    """Read a matrix file: a header ``r n`` then ``r`` rows of ``n`` reals.

    If ``jitter > 0``, i.i.d. ``N(0, jitter^2)`` noise is added to every entry
    when the matrix is rank deficient.
    """
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise ParseError(path, 1, "empty matrix file")
    lineno, head = lines[0]
    parts = head.split()
    if len(parts) != 2:
        raise ParseError(path, lineno, "header must be 'r n'")
    try:
        r, n = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(path, lineno, "header must hold two integers") from None
    if r < 1 or n < 1:
        raise ParseError(path, lineno, "dimensions must be positive")
    rows = lines[1:]
    if len(rows) != r:
        raise ParseError(path, rows[-1][0] if rows else lineno,
                         f"expected {r} rows, found {len(rows)}")
    A = np.empty((r, n))
    for i, (ln, text) in enumerate(rows):
        vals = text.split()
        if len(vals) != n:
            raise ParseError(path, ln, f"expected {n} values, found {len(vals)}")
        try:
            A[i] = [float(v) for v in vals]
        except ValueError:
            raise ParseError(path, ln, "non-numeric entry") from None
    if jitter > 0 and numerical_rank(A) < r:
        A = A + jitter * np.random.default_rng(seed).standard_normal(A.shape)
    return FeatureMatrix(A)


def save_feature_matrix(path, A) -> None:
    A = as_feature_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"{A.r} {A.n}\n")
        for row in A.data:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_edge_list(path) -> Graph:
    """Read ``m`` then lines ``u v [w]`` with 0-based vertices."""
    path = Path(path)
    lines = list(_data_lines(path))
    if not lines:
        raise ParseError(path, 1, "empty edge-list file")
    ln0, head = lines[0]
    try:
        m = int(head)
    except ValueError:
        raise ParseError(path, ln0, "first line must be the vertex count") from None
    edges, weights = [], []
    for ln, text in lines[1:]:
        parts = text.split()
        if len(parts) not in (2, 3):
            raise ParseError(path, ln, "expected 'u v [w]'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise ParseError(path, ln, "malformed edge") from None
        edges.append((u, v))
        weights.append(w)
    has_w = [w is not None for w in weights]
    if any(has_w) and not all(has_w):
        raise ParseError(path, lines[-1][0], "weights must be given for all edges or none")
    try:
        return Graph(m, tuple(edges), tuple(weights) if all(has_w) and weights else None)
    except ValueError as exc:
        raise ParseError(path, ln0, str(exc)) from None


def edges_of(g: Graph, basis: Sequence[int]) -> list[tuple[int, int]]:
    return [g.edges[i] for i in basis]
