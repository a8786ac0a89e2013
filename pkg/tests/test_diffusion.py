import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from costima.diffusion import (SamplingConfig, estimate_sigma, marginal_gain, reach,
                               sample_live_edge, samples_for_accuracy, simulate)
from costima.graph import CandidateEdge, Edge, ProblemInstance
from costima.oracle import exact_delta

from oracles import closure_reach, tiny_instance


def chain():
    return ProblemInstance(3, [Edge(0, 1, 0.5), Edge(1, 2, 0.4)], [0], [], 0)


def test_mask_all_ones_and_zeros():
    ones = ProblemInstance(4, [Edge(0, 1, 1.0), Edge(1, 2, 1.0), Edge(2, 3, 1.0)], [0],
                           [CandidateEdge(0, 3, 1.0, 1.0)], 1)
    zeros = ProblemInstance(4, [Edge(0, 1, 0.0), Edge(1, 2, 0.0)], [0],
                            [CandidateEdge(0, 3, 0.0, 1.0)], 1)
    cfg = SamplingConfig(1, base_seed=99)
    for i in range(50):
        assert sample_live_edge(ones, list(ones.candidates), i, cfg).live.all()
        assert not sample_live_edge(zeros, list(zeros.candidates), i, cfg).live.any()


def test_single_edge_live_fraction():
    inst = ProblemInstance(2, [Edge(0, 1, 0.5)], [0], [], 0)
    cfg = SamplingConfig(1, base_seed=2024)
    live = sum(bool(sample_live_edge(inst, [], i, cfg).live[0]) for i in range(100_000))
    # binomial sd is 0.0016; 0.01 is > 6 sd
    assert abs(live / 100_000 - 0.5) <= 0.01


def test_mask_layout_is_e_then_s():
    inst = ProblemInstance(3, [Edge(1, 2, 0.5)], [0], [CandidateEdge(0, 1, 0.5, 1.0)], 1)
    X = sample_live_edge(inst, list(inst.candidates), 0, SamplingConfig(1))
    assert list(zip(X.src, X.dst)) == [(1, 2), (0, 1)]


def test_adding_edges_keeps_existing_coins():
    inst = tiny_instance(np.random.default_rng(5), n_max=8, cand_max=6)
    cfg = SamplingConfig(1, base_seed=17)
    S = list(inst.candidates)
    for i in range(30):
        small = sample_live_edge(inst, S[:1], i, cfg).live
        big = sample_live_edge(inst, S, i, cfg).live
        assert np.array_equal(big[:len(small)], small)


def test_reach_examples():
    inst = ProblemInstance(3, [Edge(0, 1, 1.0), Edge(1, 2, 1.0)], [0], [], 0)
    X = sample_live_edge(inst, [], 0, SamplingConfig(1))
    assert reach(X, [0]) == {0, 1, 2}
    none = ProblemInstance(3, [Edge(0, 1, 0.0)], [0, 2], [], 0)
    assert reach(sample_live_edge(none, [], 0, SamplingConfig(1)), [0, 2]) == {0, 2}


@given(st.integers(0, 2**32), st.integers(0, 1000))
@settings(max_examples=150, deadline=None)
def test_reach_matches_transitive_closure(seed, sample):
    rng = np.random.default_rng(seed)
    inst = tiny_instance(rng, n_max=8, free_max=20, cand_max=4)
    S = list(inst.candidates)
    X = sample_live_edge(inst, S, sample, SamplingConfig(1, base_seed=seed))
    adj = np.zeros((inst.n, inst.n), dtype=bool)
    for s, d in X.live_edges():
        adj[s, d] = True
    expected = set(np.flatnonzero(closure_reach(adj, inst.sorted_seeds)).tolist())
    got = reach(X, inst.seeds)
    assert got == expected
    assert set(inst.seeds) <= got


def test_estimate_seeds_only():
    inst = ProblemInstance(5, [], [0, 2, 4], [], 0)
    est = estimate_sigma(inst, [], SamplingConfig(1000, 5))
    assert est.value == 3.0 and est.variance == 0.0 and est.samples == 1000


def test_estimate_single_candidate():
    inst = ProblemInstance(2, [], [0], [CandidateEdge(0, 1, 0.7, 1.0)], 1)
    est = estimate_sigma(inst, list(inst.candidates), SamplingConfig(1_000_000, 11))
    # sd of the mean is sqrt(0.21 / 1e6) = 0.00046
    assert abs(est.value - 1.7) <= 0.003
    assert est.variance == pytest.approx(0.21, abs=0.005)


def test_estimate_chain():
    est = estimate_sigma(chain(), [], SamplingConfig(200_000, 3))
    assert abs(est.value - 1.7) <= 4 * est.stderr


def test_estimate_matches_mask_route_exactly():
    inst = tiny_instance(np.random.default_rng(8), n_max=8, cand_max=5)
    S = list(inst.candidates)
    cfg = SamplingConfig(400, base_seed=123)
    counts = [len(reach(sample_live_edge(inst, S, i, cfg), inst.seeds)) for i in range(400)]
    est = estimate_sigma(inst, S, cfg)
    assert est.value == sum(counts) / 400
    assert est.variance == pytest.approx(np.var(counts, ddof=1), rel=1e-12)


def test_estimate_deterministic_and_chunking_independent():
    inst = tiny_instance(np.random.default_rng(3), n_max=8, cand_max=5)
    S = list(inst.candidates)
    a = estimate_sigma(inst, S, SamplingConfig(5000, 42))
    b = estimate_sigma(inst, S, SamplingConfig(5000, 42))
    c = estimate_sigma(inst, S, SamplingConfig(5000, 42, parallel=False))
    assert a == b == c
    assert estimate_sigma(inst, S, SamplingConfig(5000, 43)) != a


@given(st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_estimate_bounds(seed):
    inst = tiny_instance(np.random.default_rng(seed))
    est = estimate_sigma(inst, list(inst.candidates), SamplingConfig(200, seed))
    assert len(inst.seeds) <= est.value <= inst.n
    assert est.variance >= 0


def test_marginal_gain_examples():
    # node 1 is already reached with probability 1 through 0 -> 1
    inst = ProblemInstance(3, [Edge(0, 1, 1.0)], [0, 2], [CandidateEdge(2, 1, 0.6, 1.0)], 1)
    assert marginal_gain(inst, [], inst.candidates[0], SamplingConfig(1000, 1)) == 0.0
    iso = ProblemInstance(3, [Edge(0, 1, 0.5)], [0], [CandidateEdge(0, 2, 1.0, 1.0)], 1)
    assert marginal_gain(iso, [], iso.candidates[0], SamplingConfig(1000, 1)) == 1.0
    with pytest.raises(ValueError):
        marginal_gain(iso, list(iso.candidates), iso.candidates[0], SamplingConfig(10))


@pytest.mark.parametrize("seed", range(6))
def test_marginal_gain_against_exact_delta(seed):
    rng = np.random.default_rng(100 + seed)
    inst = tiny_instance(rng, n_max=7, free_max=9, cand_max=4, certain_frac=0.0)
    while len(inst.candidates) < 2:
        inst = tiny_instance(rng, n_max=7, free_max=9, cand_max=4, certain_frac=0.0)
    S, e = list(inst.candidates[:-1]), inst.candidates[-1]
    N = 20_000
    cfg = SamplingConfig(N, base_seed=seed)
    gains = []
    for i in range(N):
        X = sample_live_edge(inst, S + [e], i, cfg)
        with_e = len(reach(X, inst.seeds))
        X.live[-1] = False
        gains.append(with_e - len(reach(X, inst.seeds)))
    gains = np.array(gains)
    assert (gains >= 0).all()
    est = marginal_gain(inst, S, e, cfg)
    assert est == gains.sum() / N
    exact = exact_delta(inst, S + [e], S)
    se = gains.std(ddof=1) / math.sqrt(N)
    assert abs(est - exact) <= 3 * se + 1e-12


@given(st.integers(0, 2**32), st.integers(0, 10_000))
@settings(max_examples=200, deadline=None)
def test_per_sample_monotone_and_submodular(seed, sample):
    rng = np.random.default_rng(seed)
    inst = tiny_instance(rng, n_max=8, free_max=14, cand_max=6, certain_frac=0.1)
    C = list(inst.candidates)
    if not C:
        return
    e = C[-1]
    T = [c for c in C[:-1] if rng.random() < 0.7]
    S = [c for c in T if rng.random() < 0.5]
    X = sample_live_edge(inst, T + [e], sample, SamplingConfig(1, base_seed=seed))
    m = len(inst.edges)
    pos = {c.pair: m + j for j, c in enumerate(T + [e])}

    def count(keep):
        live = X.live.copy()
        for c in T + [e]:
            if c.pair not in keep:
                live[pos[c.pair]] = False
        Y = type(X)(X.n, X.src, X.dst, live)
        return len(reach(Y, inst.seeds))

    s_keys = {c.pair for c in S}
    t_keys = {c.pair for c in T}
    gain_s = count(s_keys | {e.pair}) - count(s_keys)
    gain_t = count(t_keys | {e.pair}) - count(t_keys)
    assert gain_s >= 0 and gain_t >= 0
    assert gain_t <= gain_s


def test_simulate_extra_sums_match_separate_runs():
    inst = tiny_instance(np.random.default_rng(21), n_max=8, cand_max=6)
    C = list(inst.candidates)
    base, sums, _ = simulate(inst, C[:1], C[1:], 9, 3000)
    for j, e in enumerate(C[1:]):
        alone, _, _ = simulate(inst, C[:1] + [e], [], 9, 3000)
        assert int(alone.sum()) == int(sums[j])


def test_samples_for_accuracy():
    assert samples_for_accuracy(10, 0.5, 0.1) == math.ceil(100 / 0.25 * math.log(10))
    assert SamplingConfig(None, 0, lam=0.5, delta=0.1).samples(10) == 922
    with pytest.raises(ValueError):
        samples_for_accuracy(10, 0.0, 0.1)
    with pytest.raises(ValueError):
        SamplingConfig(None)
