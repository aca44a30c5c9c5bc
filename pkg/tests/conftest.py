import itertools
import math
import sys

import numpy as np
import pytest

from zonodpp.models import complete_graph, incidence_feature_matrix

SMALL = np.array([[1.0, 2.0, 0.0, -1.0], [0.0, 1.0, 2.0, 1.0]])
# 0-based bases of SMALL in lexicographic order and their |det|
SMALL_BASES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
SMALL_ABS_DET = [1, 2, 1, 4, 3, 2]


def brute_law(A, weights=None):
    """Basis law by direct numpy determinants (independent of the package)."""
    A = np.asarray(A, dtype=float)
    r, n = A.shape
    out = {}
    for B in itertools.combinations(range(n), r):
        d = np.linalg.det(A[:, B])
        if abs(d) > 1e-9:
            m = d * d
            if weights is not None:
                m *= np.prod([weights[i] for i in B])
            out[B] = m
    Z = sum(out.values())
    return {B: m / Z for B, m in out.items()}


def reference_psrf(chains):
    """Gelman-Rubin by explicit loops over chains and draws."""
    M, N = len(chains), len(chains[0])
    means = [sum(c) / N for c in chains]
    grand = sum(means) / M
    B = N / (M - 1) * sum((m - grand) ** 2 for m in means)
    W = sum(sum((x - m) ** 2 for x in c) / (N - 1) for c, m in zip(chains, means)) / M
    V = (N - 1) / N * W + (M + 1) / (M * N) * B
    return math.sqrt(V / W)


def tv(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


@pytest.fixture
def small():
    return SMALL.copy()


@pytest.fixture(scope="session")
def k5():
    return incidence_feature_matrix(complete_graph(5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(line)
