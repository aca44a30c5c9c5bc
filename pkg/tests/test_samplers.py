from collections import Counter
from types import SimpleNamespace

import numpy as np
import pytest

from zonodpp.errors import ChainError, ConfigError, NumericalBreakdownError
from zonodpp.models import Graph, complete_graph, incidence_feature_matrix
from zonodpp.numerics import FeatureMatrix, build_projection_kernel
from zonodpp.samplers import (ChainState, SamplerConfig, aldous_broder, basis_exchange_step,
                              exact_projection_dpp, exact_projection_dpp_batch, run_chain,
                              unif_zono_step, vol_zono_step)
from zonodpp.zonotope import Chord, Tile, TilingObjective, Zonotope

from conftest import SMALL, brute_law, tv


def freqs(samples):
    c = Counter(samples)
    return {B: k / len(samples) for B, k in c.items()}


def test_exact_rank_one_marginals(rng):
    a = np.array([[3.0, 1.0, 0.5, 0.1]])
    K = build_projection_kernel(a)
    draws = [exact_projection_dpp(K, rng)[0] for _ in range(20000)]
    p = np.bincount(draws, minlength=4) / len(draws)
    se = np.sqrt(np.diag(K.K) * (1 - np.diag(K.K)) / len(draws))
    assert np.all(np.abs(p - np.diag(K.K)) < 4 * se + 1e-12)


def test_exact_small_matrix(rng):
    K = build_projection_kernel(SMALL)
    draws = [exact_projection_dpp(K, rng) for _ in range(100_000)]
    assert tv(freqs(draws), brute_law(SMALL)) < 0.01


def test_exact_batch_k5(k5, rng):
    draws = exact_projection_dpp_batch(k5, 100_000, rng)
    emp = freqs([tuple(row) for row in draws.tolist()])
    assert len(emp) == 125
    assert tv(emp, brute_law(k5.data)) < 0.02


def test_exact_negative_mass_breakdown(rng):
    with pytest.raises(NumericalBreakdownError):
        exact_projection_dpp(np.diag([-0.1, 1.1]), rng)


def test_exact_small_negative_mass_clamped(rng):
    K = np.diag([1.0, -1e-10, 0.0])
    assert exact_projection_dpp(K, rng) == (0,)


def test_aldous_broder_triangle(rng):
    g = complete_graph(3)
    draws = [aldous_broder(g, rng) for _ in range(100_000)]
    for B, f in freqs(draws).items():
        assert abs(f - 1 / 3) < 0.01


def test_aldous_broder_k5(k5, rng):
    g = complete_graph(5)
    draws = [aldous_broder(g, rng) for _ in range(60_000)]
    emp = freqs(draws)
    assert len(emp) == 125
    assert tv(emp, brute_law(k5.data)) < 0.02


def test_aldous_broder_path_and_disconnected(rng):
    path = Graph(4, ((0, 1), (1, 2), (2, 3)))
    assert all(aldous_broder(path, rng) == (0, 1, 2) for _ in range(20))
    with pytest.raises(ValueError):
        aldous_broder(Graph(4, ((0, 1), (2, 3))), rng)


def _be_state(A, B):
    return ChainState(0, B, log_vol=2 * np.log(abs(np.linalg.det(A.data[:, B]))))


def test_basis_exchange_dependent_proposal_rejected():
    # columns 0 and 1 are parallel, so swapping 2 for 1 from {0, 2} is dependent
    A = FeatureMatrix([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    rng = np.random.default_rng(0)
    for _ in range(200):
        st = basis_exchange_step(_be_state(A, (0, 2)), A, rng, laziness=0.0)
        if st.basis == (0, 1) or st.basis == (1, 0):
            pytest.fail("moved to a dependent set")


def test_basis_exchange_equal_volumes_accept_half():
    # every 2-subset of these columns has |det| 1
    A = FeatureMatrix([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    rng = np.random.default_rng(2)
    acc = sum(basis_exchange_step(_be_state(A, (0, 1)), A, rng, laziness=0.0).accepted
              for _ in range(20000))
    assert abs(acc / 20000 - 0.5) < 4 * np.sqrt(0.25 / 20000)


def test_basis_exchange_kernel_form_matches_matrix_form():
    K = build_projection_kernel(SMALL)
    A = FeatureMatrix(SMALL)
    st_k = ChainState(0, (1, 2), log_vol=np.log(np.linalg.det(K.K[np.ix_([1, 2], [1, 2])])))
    st_a = _be_state(A, (1, 2))
    ra, rk = np.random.default_rng(9), np.random.default_rng(9)
    for _ in range(2000):
        st_a = basis_exchange_step(st_a, A, ra)
        st_k = basis_exchange_step(st_k, K, rk)
        assert st_a.basis == st_k.basis


def test_basis_exchange_laziness(k5):
    tr = run_chain(SamplerConfig("basis-exchange", steps=20000, seed=4), k5)
    stay = np.mean(~tr.proposed)
    assert stay >= 0.5 - 3 * np.sqrt(0.25 / len(tr))
    self_loop = np.mean(np.all(tr.bases[1:] == tr.bases[:-1], axis=1))
    assert self_loop >= 0.5 - 3 * np.sqrt(0.25 / len(tr))


def test_unif_zono_one_dimensional_is_uniform():
    # a single nonzero column: Z(A) = [0, 1] and every chord is the whole segment
    A = FeatureMatrix([[1.0, 0.0]])
    Z = Zonotope(A, TilingObjective.draw(2, seed=0))
    rng = np.random.default_rng(3)
    st = ChainState(0, (0,), np.array([0.3]), Z.extract(np.array([0.3])))
    xs = []
    for _ in range(20000):
        st = unif_zono_step(st, Z, rng)
        assert st.accepted
        xs.append(st.x[0])
    xs = np.array(xs)
    assert abs(xs.mean() - 0.5) < 3 * np.sqrt(1 / 12 / len(xs))
    assert xs.min() >= 0.0 and xs.max() <= 1.0


class StubZonotope:
    """Chord over [-1, 1] and a scripted tile for every proposal."""

    def __init__(self, A, basis):
        self.A = FeatureMatrix(A)
        self.r = self.A.r
        self.basis = basis

    def chord(self, x, d, tile=None):
        return Chord(x, d, -1.0, 1.0)

    def extract(self, x):
        n = self.A.n
        return Tile(self.basis, np.zeros(n, dtype=np.int8), np.zeros(n),
                    np.zeros(self.r, dtype=np.int64), np.zeros(n, dtype=np.int8))


def _vol_state(A, B):
    return ChainState(0, B, np.zeros(A.shape[0]), None,
                      log_vol=np.log(abs(np.linalg.det(np.asarray(A)[:, B]))))


def test_vol_zono_same_tile_always_accepted():
    Z = StubZonotope(SMALL, (1, 3))
    rng = np.random.default_rng(0)
    assert all(vol_zono_step(_vol_state(SMALL, (1, 3)), Z, rng).accepted for _ in range(500))


def test_vol_zono_uphill_always_accepted():
    Z = StubZonotope(SMALL, (1, 2))  # |det| 4 from |det| 1
    rng = np.random.default_rng(0)
    assert all(vol_zono_step(_vol_state(SMALL, (0, 1)), Z, rng).accepted for _ in range(500))


def test_vol_zono_downhill_accepts_with_ratio():
    Z = StubZonotope(SMALL, (0, 1))  # |det| 1 from |det| 4
    rng = np.random.default_rng(0)
    acc = np.mean([vol_zono_step(_vol_state(SMALL, (1, 2)), Z, rng).accepted
                   for _ in range(20000)])
    assert abs(acc - 0.25) < 4 * np.sqrt(0.25 * 0.75 / 20000)


def test_vol_zono_detailed_balance_flux():
    tr = run_chain(SamplerConfig("vol-zonotope", steps=100_000, seed=5, tiling_seed=1), SMALL)
    moves = Counter()
    prev = tr.initial
    for B in tr.basis_tuples():
        if B != prev:
            moves[(prev, B)] += 1
        prev = B
    checked = 0
    for (a, b), n_ab in moves.items():
        if a < b:
            n_ba = moves.get((b, a), 0)
            assert abs(n_ab - n_ba) <= 4 * np.sqrt(n_ab + n_ba) + 2
            checked += 1
    assert checked >= 5


def test_run_chain_zero_budget_rejected():
    with pytest.raises(ConfigError):
        SamplerConfig("vol-zonotope", steps=0)
    with pytest.raises(ConfigError):
        SamplerConfig("vol-zonotope")
    with pytest.raises(ConfigError):
        SamplerConfig("vol-zonotope", seconds=-1.0)
    with pytest.raises(ConfigError):
        SamplerConfig("gibbs", steps=10)


@pytest.mark.parametrize("kind", ["exact", "basis-exchange", "unif-zonotope", "vol-zonotope"])
def test_run_chain_deterministic(kind):
    cfg = SamplerConfig(kind, steps=3000, seed=17, tiling_seed=3, record_time=False)
    a, b = run_chain(cfg, SMALL), run_chain(cfg, SMALL)
    assert np.array_equal(a.bases, b.bases)
    assert np.array_equal(a.accepted, b.accepted)
    assert a.initial == b.initial
    c = run_chain(SamplerConfig(kind, steps=3000, seed=18, tiling_seed=3), SMALL)
    assert not np.array_equal(a.bases, c.bases)


def test_run_chain_aldous_broder_needs_graph():
    g = complete_graph(4)
    A = incidence_feature_matrix(g)
    tr = run_chain(SamplerConfig("aldous-broder", steps=100, seed=1), A, graph=g)
    assert len(tr) == 100
    with pytest.raises(ConfigError):
        run_chain(SamplerConfig("aldous-broder", steps=100, seed=1), A)


def test_shared_initial_basis_across_samplers(k5):
    for chain in range(5):
        inits = {run_chain(SamplerConfig(kind, steps=10, seed=3, tiling_seed=1), k5,
                           chain_id=chain).initial
                 for kind in ("basis-exchange", "unif-zonotope", "vol-zonotope")}
        assert len(inits) == 1


def test_wall_clock_budget():
    tr = run_chain(SamplerConfig("vol-zonotope", seconds=0.2, seed=1), SMALL)
    assert len(tr) > 10
    assert np.all(np.diff(tr.elapsed_ns) >= 0)
    assert tr.elapsed_ns[-1] < 0.2e9 + 5e7


def test_debug_coherence_runs(k5):
    tr = run_chain(SamplerConfig("vol-zonotope", steps=500, seed=2, debug=True), k5)
    assert len(tr) == 500


def test_chain_error_when_state_leaves_zonotope():
    Z = Zonotope(SMALL, TilingObjective.draw(4, seed=0))
    st = ChainState(0, (0, 1), np.array([50.0, 50.0]), None)
    with pytest.raises(ChainError):
        unif_zono_step(st, Z, np.random.default_rng(0))


def test_indicator(k5):
    tr = run_chain(SamplerConfig("exact", steps=200, seed=0), k5)
    ind = tr.indicator([0, 1])
    ref = np.array([0 in B and 1 in B for B in tr.basis_tuples()])
    np.testing.assert_array_equal(ind.astype(bool), ref)
    assert np.all(tr.indicator([]) == 1)
