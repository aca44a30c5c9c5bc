import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from zonodpp import _backend, _core_py
from zonodpp.lp import LinearProgram, WarmStart, feasibility, fractional_mask, solve

from conftest import SMALL


def vertex_enumeration(lp):
    """Best objective over all basic solutions (brute force oracle)."""
    r, m = lp.M.shape
    best = None
    for B in itertools.combinations(range(m), r):
        MB = lp.M[:, B]
        if abs(np.linalg.det(MB)) < 1e-10:
            continue
        N = [j for j in range(m) if j not in B]
        for bits in itertools.product((0, 1), repeat=len(N)):
            y = np.zeros(m)
            for j, bit in zip(N, bits):
                y[j] = lp.upper[j] if bit else lp.lower[j]
            y[list(B)] = np.linalg.solve(MB, lp.b - lp.M[:, N] @ y[N])
            if np.all(y >= lp.lower - 1e-9) and np.all(y <= lp.upper + 1e-9):
                val = lp.c @ y
                best = val if best is None else min(best, val)
    return best


def test_pinned_variable():
    lp = LinearProgram(np.array([1.0]), np.array([[1.0]]), np.array([0.5]),
                       np.zeros(1), np.ones(1))
    sol = solve(lp)
    assert sol.optimal and sol.y[0] == pytest.approx(0.5)


def test_tile_program_at_cube_center_has_two_fractional_coordinates():
    c = np.random.default_rng(5).standard_normal(4)
    lp = LinearProgram.box(c, SMALL, SMALL @ np.full(4, 0.5))
    sol = solve(lp)
    assert sol.optimal
    assert np.count_nonzero(fractional_mask(sol.y)) == 2
    np.testing.assert_allclose(SMALL @ sol.y, lp.b, atol=1e-9)


def test_far_point_is_infeasible():
    corners = np.array([SMALL @ np.array(u) for u in itertools.product((0, 1), repeat=4)])
    assert corners.max() < 100
    lp = LinearProgram.box(np.zeros(4), SMALL, np.array([100.0, 100.0]))
    assert solve(lp).status == "infeasible"
    assert not feasibility(lp)


@pytest.mark.parametrize("u", [np.zeros(4), np.ones(4), np.array([0.3, 0.9, 0.1, 0.5])])
def test_feasibility_with_witness(u):
    assert feasibility(LinearProgram.box(np.zeros(4), SMALL, SMALL @ u))


def test_unbounded_with_free_variable():
    M = np.array([[1.0, -1.0]])
    lp = LinearProgram(np.array([0.0, -1.0]), M, np.array([0.0]), np.array([0.0, -np.inf]),
                       np.array([1.0, np.inf]))
    assert solve(lp).status == "optimal"
    lp2 = LinearProgram(np.array([0.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]),
                        np.array([0.0, 0.5]), np.array([0.0, -np.inf]),
                        np.array([1.0, np.inf]))
    assert solve(lp2).y[1] == pytest.approx(0.0)
    lp3 = LinearProgram(np.array([0.0, 0.0, -1.0]), np.array([[1.0, 1.0, 0.0]]),
                        np.array([0.5]), np.array([0.0, 0.0, -np.inf]),
                        np.array([1.0, 1.0, np.inf]))
    assert solve(lp3).status == "unbounded"


def test_invalid_programs():
    with pytest.raises(ValueError):
        LinearProgram(np.zeros(2), np.ones((1, 2)), np.zeros(1), np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        LinearProgram(np.zeros(3), np.ones((1, 2)), np.zeros(1), np.zeros(2), np.ones(2))


def test_warm_start_gives_same_vertex(rng):
    A = rng.standard_normal((3, 8))
    c = rng.standard_normal(8)
    lp1 = LinearProgram.box(c, A, A @ rng.uniform(size=8))
    lp2 = LinearProgram.box(c, A, lp1.b + 0.01 * rng.standard_normal(3))
    cold = solve(lp2)
    warm = solve(lp2, warm_start=solve(lp1).warm_start())
    assert cold.status == warm.status == "optimal"
    assert warm.objective == pytest.approx(cold.objective, abs=1e-9)
    np.testing.assert_allclose(warm.y, cold.y, atol=1e-8)


def test_infeasible_warm_start_falls_back(rng):
    A = rng.standard_normal((2, 6))
    lp = LinearProgram.box(rng.standard_normal(6), A, A @ rng.uniform(size=6))
    bad = WarmStart(np.array([0, 1]), np.ones(6, dtype=np.int8))
    assert solve(lp, warm_start=bad).objective == pytest.approx(solve(lp).objective, abs=1e-9)


def test_determinism(rng):
    A = rng.standard_normal((4, 10))
    lp = LinearProgram.box(rng.standard_normal(10), A, A @ rng.uniform(size=10))
    a, b = solve(lp), solve(lp)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.var_status, b.var_status)
    assert np.array_equal(a.basis, b.basis)


def test_verbose_logs_pivots(caplog, rng):
    A = rng.standard_normal((2, 5))
    lp = LinearProgram.box(rng.standard_normal(5), A, A @ rng.uniform(size=5))
    with caplog.at_level("DEBUG", logger="zonodpp.lp"):
        sol = solve(lp, verbose=True)
    assert sol.optimal
    assert any("enter=" in rec.getMessage() for rec in caplog.records)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 2**32 - 1), st.booleans())
def test_agrees_with_vertex_enumeration(r, extra, seed, inside):
    rng = np.random.default_rng(seed)
    m = r + 1 + extra
    M = rng.standard_normal((r, m))
    b = M @ rng.uniform(size=m) if inside else 3.0 * rng.standard_normal(r)
    lp = LinearProgram.box(rng.standard_normal(m), M, b)
    ref = vertex_enumeration(lp)
    sol = solve(lp)
    if ref is None:
        assert sol.status == "infeasible"
    else:
        assert sol.optimal
        assert sol.objective == pytest.approx(ref, abs=1e-9)
        assert np.count_nonzero(fractional_mask(sol.y)) <= r
        np.testing.assert_allclose(M @ sol.y, b, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_highs_on_tile_programs(seed):
    rng = np.random.default_rng(seed)
    r, n = 4, 12
    M = rng.standard_normal((r, n))
    c = rng.standard_normal(n)
    b = M @ rng.uniform(size=n)
    ref = linprog(c, A_eq=M, b_eq=b, bounds=[(0, 1)] * n, method="highs")
    sol = solve(LinearProgram.box(c, M, b))
    assert sol.optimal and ref.status == 0
    assert sol.objective == pytest.approx(ref.fun, abs=1e-8)


@pytest.mark.skipif(not _backend.HAVE_COMPILED, reason="compiled kernels not built")
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_backends_agree(seed, warm):
    rng = np.random.default_rng(seed)
    r, n = 3, 9
    M = rng.standard_normal((r, n))
    c = rng.standard_normal(n)
    b = M @ rng.uniform(size=n)
    lo, hi = np.zeros(n), np.ones(n)
    hint = None
    if warm:
        sol0 = solve(LinearProgram.box(c, M, M @ rng.uniform(size=n)))
        hint = (sol0.basis, sol0.var_status)
    outs = []
    for core in (_core_py, _backend.core_compiled):
        y, st_ = np.empty(n), np.empty(n, dtype=np.int8)
        bs, d = np.empty(r, dtype=np.int64), np.empty(n)
        code, obj, it = core.simplex_solve(M, b, c, lo, hi, False,
                                           None if hint is None else hint[0],
                                           None if hint is None else hint[1],
                                           10 * (n + r), 10000, 1e-9, 1e-9, 1e-11,
                                           y, st_, bs, d)
        outs.append((code, obj, it, y, st_, bs))
    (c1, o1, i1, y1, s1, b1), (c2, o2, i2, y2, s2, b2) = outs
    assert c1 == c2 and i1 == i2
    assert np.array_equal(s1, s2) and np.array_equal(b1, b2)
    np.testing.assert_allclose(y1, y2, atol=1e-12)
    S = np.ascontiguousarray(M[:, :3])
    assert _core_py.lu_log_abs_det(S, 1e-12) == pytest.approx(
        _backend.core_compiled.lu_log_abs_det(S, 1e-12), rel=1e-12)
