import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from costima.graph import CandidateEdge, InstanceError, Solution
from costima.oracle import brute_force_opt, exact_sigma
from costima.reduction import MscInstance, ima_to_msc_solution, load_msc, msc_to_ima, random_msc
from costima.solvers import SolverConfig, greedy_ima

from oracles import greedy_msc, msc_brute_force

EXACT = SolverConfig("exact")


def test_single_element():
    msc = MscInstance(1, [{0}], 1)
    inst = msc_to_ima(msc)
    assert inst.n == 3 and inst.unit_cost
    assert brute_force_opt(inst).sigma == 3.0


def test_two_overlapping_sets():
    msc = MscInstance(3, [{0, 1}, {1, 2}], 1)
    inst = msc_to_ima(msc)
    assert [(e.src, e.dst) for e in inst.edges] == [(1, 3), (1, 4), (2, 4), (2, 5)]
    sol = brute_force_opt(inst)
    # a, one set node, two elements
    assert sol.sigma == 4.0 and ima_to_msc_solution(sol, msc) == [0]


@given(st.integers(0, 2**32))
@settings(max_examples=80, deadline=None)
def test_spread_is_seeds_plus_coverage(seed):
    rng = np.random.default_rng(seed)
    msc = random_msc(int(rng.integers(1, 12)), int(rng.integers(1, 7)), 1, seed,
                     float(rng.uniform(0.1, 0.6)))
    extra = int(rng.integers(0, 3))
    inst = msc_to_ima(msc, extra)
    fam = [j for j in range(len(msc.sets)) if rng.random() < 0.5]
    S = [inst.candidates[j] for j in fam]
    assert exact_sigma(inst, S) == 1 + extra + len(fam) + msc.coverage(fam)


@pytest.mark.parametrize("seed", range(15))
def test_optimum_and_greedy_correspond(seed):
    rng = np.random.default_rng(seed)
    msc = random_msc(int(rng.integers(3, 15)), int(rng.integers(2, 8)), 1, seed, 0.3)
    k = int(rng.integers(1, len(msc.sets) + 1))
    msc = MscInstance(msc.universe_size, msc.sets, k)
    inst = msc_to_ima(msc)
    sets = [sorted(s) for s in msc.sets]
    assert brute_force_opt(inst).sigma == 1 + k + msc_brute_force(sets, k)
    assert ima_to_msc_solution(greedy_ima(inst, EXACT), msc) == greedy_msc(sets, k)


def test_validation():
    with pytest.raises(InstanceError, match="empty"):
        MscInstance(2, [set()], 1)
    with pytest.raises(InstanceError, match="outside"):
        MscInstance(2, [{5}], 1)
    with pytest.raises(InstanceError, match="k must"):
        MscInstance(2, [{0}], 2)
    msc = MscInstance(2, [{0}], 1)
    assert ima_to_msc_solution(Solution([], 0.0, 1.0), msc) == []
    bad = Solution([CandidateEdge(0, 2, 1.0, 1.0)], 1.0, 0.0)
    with pytest.raises(InstanceError, match="form"):
        ima_to_msc_solution(bad, msc)


def test_random_msc_reproducible():
    assert random_msc(10, 5, 2, 3) == random_msc(10, 5, 2, 3)
    assert all(random_msc(4, 20, 1, 9, density=0.0).sets)


def test_load_msc(tmp_path):
    p = tmp_path / "sets.txt"
    p.write_text("# family\n0 1\n\n1 2  # second\n")
    msc = load_msc(p, None, 1)
    assert msc.universe_size == 3 and msc.sets == (frozenset({0, 1}), frozenset({1, 2}))
    p.write_text("0 x\n")
    with pytest.raises(InstanceError, match="sets.txt:1:"):
        load_msc(p, None, 1)
