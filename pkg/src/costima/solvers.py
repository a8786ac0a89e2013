"""Greedy edge-augmentation solvers and myopic baselines.

All solvers take the candidate pool of the instance, return a feasible
``Solution`` and break ties by lowest candidate index.

With ``sigma_mode="estimate"`` greedy iteration ``i`` draws its coins from
block ``base_seed + i``; every alternative compared inside one iteration
sees the same coins. The reported ``sigma`` of a solution comes from the
block after the last iteration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import diffusion
from .diffusion import SamplingConfig
from .graph import CandidateEdge, ProblemInstance, Solution, TraceStep
from .oracle import ExactEvaluator, brute_force_opt

BASELINES = ("random", "max_prob", "high_outdegree_target")


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    sigma_mode: str = "estimate"
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    M: int = 3
    stop_on_zero_gain: bool = False
    max_subsets: int = 200_000

    def __post_init__(self):
        if self.sigma_mode not in ("estimate", "exact"):
            raise ValueError(f"sigma_mode must be 'estimate' or 'exact', got {self.sigma_mode!r}")
        if self.M < 1:
            raise ValueError("M must be at least 1")


class Objective:
    """sigma over subsets of the candidate pool, exact or on shared sampled coins."""

    def __init__(self, inst: ProblemInstance, cfg: SolverConfig):
        self.inst = inst
        self.cfg = cfg
        self.exact = ExactEvaluator(inst) if cfg.sigma_mode == "exact" else None
        self.num_samples = cfg.sampling.samples(inst.n)

    def _edges(self, idx):
        return [self.inst.candidates[i] for i in idx]

    def with_each(self, S: Sequence[int], extra: Sequence[int], block: int):
        """``sigma(S)`` and the array of ``sigma(S + e)`` for ``e`` in ``extra``."""
        if self.exact is not None:
            return self.exact.sigma_with_each(S, extra)
        return diffusion.sigma_with_each(self.inst, self._edges(S), self._edges(extra),
                                         self.cfg.sampling.base_seed + block, self.num_samples,
                                         self.cfg.sampling.parallel)

    def values(self, sets: Sequence[Sequence[int]], block: int) -> list[float]:
        """sigma of several sets; in estimate mode all on the coins of one block."""
        if self.exact is not None:
            return [self.exact.sigma(s) for s in sets]
        return [diffusion.sigma_with_each(self.inst, self._edges(s), [],
                                          self.cfg.sampling.base_seed + block, self.num_samples,
                                          self.cfg.sampling.parallel)[0]
                for s in sets]

    def value(self, S: Sequence[int], block: int) -> float:
        return self.values([S], block)[0]


def _solution(inst, idx, sigma, trace, algo) -> Solution:
    idx = list(idx)
    chosen = [inst.candidates[i] for i in idx]
    return Solution(chosen, math.fsum(c.cost for c in chosen), float(sigma), trace, algo, idx)


def _fits(inst, idx, extra) -> bool:
    costs = [inst.candidates[i].cost for i in idx]
    costs.append(inst.candidates[extra].cost)
    return math.fsum(costs) <= inst.budget


# --------------------------------------------------------------- unit cost


def greedy_ima(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    """Add, ``k`` times, the candidate that maximises ``sigma(A, S + e)``."""
    cfg = cfg or SolverConfig()
    if not inst.unit_cost:
        raise SolverError("greedy_ima needs a unit-cost instance with an integral budget; "
                          "use cost_greedy or enum_greedy for general costs")
    obj = Objective(inst, cfg)
    k = int(inst.budget)
    S: list[int] = []
    remaining = list(range(len(inst.candidates)))
    trace = []
    it = 0
    while it < k and remaining:
        base, vals = obj.with_each(S, remaining, it)
        j = int(np.argmax(vals))  # first maximum -> lowest index
        gain = float(vals[j] - base)
        if cfg.stop_on_zero_gain and gain <= 0:
            break
        e = remaining.pop(j)
        S.append(e)
        c = inst.candidates[e]
        trace.append(TraceStep(it, e, c.src, c.dst, gain, True, float(vals[j])))
        it += 1
    return _solution(inst, S, obj.value(S, it), trace, "greedy")


# ---------------------------------------------------------------- budgeted


def _best_ratio(gains: np.ndarray, costs: np.ndarray) -> int:
    """Position of the best gain/cost ratio.

    Zero-cost edges rank above every positive-cost edge, by larger gain among
    themselves. Ties go to the earliest position.
    """
    free = costs == 0
    if free.any():
        pos = np.flatnonzero(free)
        return int(pos[np.argmax(gains[pos])])
    return int(np.argmax(gains / costs))


def _cost_ratio_completion(inst, obj, S, pool, block0, trace, label=""):
    """Cost-ratio greedy from ``S`` over ``pool`` until the pool is empty.

    Every iteration takes the best-ratio edge, keeps it if it fits the
    remaining budget, and drops it from the pool either way. Returns the
    completed index list and the number of coin blocks used.
    """
    S = list(S)
    pool = list(pool)
    costs_all = np.array([c.cost for c in inst.candidates], dtype=np.float64)
    it = 0
    while pool:
        if not any(_fits(inst, S, i) for i in pool):
            # nothing left fits; the remaining iterations would only reject
            for e in pool:
                c = inst.candidates[e]
                trace.append(TraceStep(block0 + it, e, c.src, c.dst, float("nan"), False,
                                       note=f"{label}budget exhausted"))
            break
        base, vals = obj.with_each(S, pool, block0 + it)
        gains = vals - base
        j = _best_ratio(gains, costs_all[pool])
        e = pool.pop(j)
        c = inst.candidates[e]
        if _fits(inst, S, e):
            S.append(e)
            trace.append(TraceStep(block0 + it, e, c.src, c.dst, float(gains[j]), True,
                                   float(vals[j]), note=label.rstrip()))
        else:
            trace.append(TraceStep(block0 + it, e, c.src, c.dst, float(gains[j]), False,
                                   float(base), note=f"{label}over budget"))
        it += 1
    return S, it


def cost_greedy(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    """Cost-ratio greedy, compared at the end against the best single edge.

    The single-edge alternative is only admitted when it fits the budget.
    """
    cfg = cfg or SolverConfig()
    obj = Objective(inst, cfg)
    C = len(inst.candidates)
    trace: list[TraceStep] = []
    if C == 0:
        return _solution(inst, [], obj.value([], 0), trace, "cost-greedy")

    _, singles = obj.with_each([], list(range(C)), 0)
    e_m = int(np.argmax(singles))
    S, used = _cost_ratio_completion(inst, obj, [], range(C), 1, trace)

    final = 1 + used
    cands = [S]
    if inst.candidates[e_m].cost <= inst.budget:
        cands.append([e_m])
    vals = obj.values(cands, final)
    if len(vals) == 2 and vals[1] > vals[0]:
        c = inst.candidates[e_m]
        trace.append(TraceStep(final, e_m, c.src, c.dst, vals[1] - vals[0], True, vals[1],
                               note="best single edge"))
        return _solution(inst, [e_m], vals[1], trace, "cost-greedy")
    return _solution(inst, S, vals[0], trace, "cost-greedy")


def _count_subsets(C: int, M: int) -> int:
    return sum(math.comb(C, r) for r in range(M + 1))


def enum_greedy(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    """Best small set (fewer than ``M`` edges) versus every feasible ``M``-edge
    set completed by the cost-ratio greedy on the remaining pool and budget."""
    cfg = cfg or SolverConfig()
    M = cfg.M
    C = len(inst.candidates)
    total = _count_subsets(C, M)
    if total > cfg.max_subsets:
        raise SolverError(f"enum_greedy would enumerate {total} subsets (cap {cfg.max_subsets}); "
                          "use a smaller M or cost_greedy")
    obj = Objective(inst, cfg)
    costs = [c.cost for c in inst.candidates]

    def feasible(idx):
        return math.fsum(costs[i] for i in idx) <= inst.budget

    small = [idx for r in range(min(M, C + 1)) for idx in itertools.combinations(range(C), r)
             if feasible(idx)]
    small_vals = obj.values(small, 0)
    s1, v1 = (), small_vals[0]
    for idx, v in zip(small, small_vals):
        if v > v1 or (v == v1 and idx < s1):
            s1, v1 = idx, v

    s2, v2, trace2 = None, -math.inf, []
    for Z in itertools.combinations(range(C), M):
        if not feasible(Z):
            continue
        trace: list[TraceStep] = []
        rest = [i for i in range(C) if i not in Z]
        S, _ = _cost_ratio_completion(inst, obj, list(Z), rest, 1, trace,
                                      label=f"prefix {list(Z)}: ")
        v = obj.value(S, 0)
        if v > v2:
            s2, v2, trace2 = S, v, trace

    if s2 is not None and v2 > v1:
        return _solution(inst, s2, v2, trace2, "enum-greedy")
    return _solution(inst, s1, v1, [], "enum-greedy")


# --------------------------------------------------------------- baselines


def baseline(inst: ProblemInstance, strategy: str, rng_seed: int = 0,
             cfg: SolverConfig | None = None) -> Solution:
    """Fill the budget in the order given by a myopic rule, skipping what does not fit.

    ``random`` shuffles with ``rng_seed``; ``max_prob`` prefers likely edges;
    ``high_outdegree_target`` prefers targets with many out-edges in ``E``.
    """
    cfg = cfg or SolverConfig()
    C = len(inst.candidates)
    if strategy == "random":
        order = list(np.random.default_rng(rng_seed).permutation(C))
    elif strategy == "max_prob":
        order = sorted(range(C), key=lambda i: (-inst.candidates[i].prob, i))
    elif strategy == "high_outdegree_target":
        deg = inst.out_degree()
        order = sorted(range(C), key=lambda i: (-int(deg[inst.candidates[i].dst]), i))
    else:
        raise SolverError(f"unknown baseline strategy {strategy!r}; choose from {BASELINES}")
    S: list[int] = []
    trace = []
    for it, e in enumerate(order):
        e = int(e)
        c = inst.candidates[e]
        ok = _fits(inst, S, e)
        if ok:
            S.append(e)
        trace.append(TraceStep(it, e, c.src, c.dst, float("nan"), ok,
                               note="" if ok else "over budget"))
    return _solution(inst, S, Objective(inst, cfg).value(S, 0), trace, f"baseline:{strategy}")


def brute(inst: ProblemInstance, cfg: SolverConfig | None = None) -> Solution:
    return brute_force_opt(inst)


def solve(inst: ProblemInstance, algo: str, cfg: SolverConfig | None = None) -> Solution:
    """Dispatch by CLI name: greedy, cost-greedy, enum-greedy, brute, baseline:<name>."""
    cfg = cfg or SolverConfig()
    if algo == "greedy":
        return greedy_ima(inst, cfg)
    if algo == "cost-greedy":
        return cost_greedy(inst, cfg)
    if algo == "enum-greedy":
        return enum_greedy(inst, cfg)
    if algo == "brute":
        return brute(inst, cfg)
    if algo.startswith("baseline:"):
        return baseline(inst, algo.split(":", 1)[1], cfg.sampling.base_seed, cfg)
    raise SolverError(f"unknown algorithm {algo!r}")
