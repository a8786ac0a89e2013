"""Exact influence by enumerating live-edge outcomes, for tiny instances.

Edges with probability 0 are dropped and probability-1 edges are always live,
so only genuinely random edges are enumerated. Outcomes are visited in mask
index order and accumulated sequentially; that order is the bit-stability
convention for every exact value returned here.

``exact_sigma`` enumerates only the coins of ``E`` (restricted to the part of
the graph reachable from the seeds and candidate targets). Given an outcome
``X`` of those coins the candidate coins are independent, so a node outside
``R(A, X)`` is reached with probability ``1 - prod(1 - p_e)`` over the chosen
candidates whose target reaches it. ``exact_delta`` instead enumerates every
coin of ``E ∪ S1`` and evaluates the difference of reach counts outcome by
outcome; the two routes are independent and checked against each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numba import njit

from .diffusion import universe
from .graph import CandidateEdge, InstanceError, ProblemInstance, Solution

MAX_FREE_EDGES = 24
MAX_BRUTE_CANDIDATES = 16
TABLE_LIMIT = 1 << 26  # cells of the per-outcome reach table


class OracleTooLarge(InstanceError):
    def __init__(self, what: str, count: int, limit: int):
        super().__init__(f"instance too large for exact enumeration: {count} {what} (limit {limit})")
        self.count = count
        self.limit = limit


# ------------------------------------------------------------------ kernels


@njit(cache=True)
def _outcome_weight(x, fprob):
    w = 1.0
    for j in range(fprob.shape[0]):
        if (x >> j) & 1:
            w *= fprob[j]
        else:
            w *= 1.0 - fprob[j]
    return w


@njit(cache=True)
def _fill_reach(x, n, indptr, dst, bit, seeds, targets, mark, queue, reach_x):
    """BFS from the seeds under outcome ``x``; then, for each target, the nodes it
    reaches outside ``R(A, X)``. Returns ``|R(A, X)|``."""
    for u in range(n):
        mark[u] = False
    tail = 0
    for a in seeds:
        if not mark[a]:
            mark[a] = True
            queue[tail] = a
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        for i in range(indptr[u], indptr[u + 1]):
            v = dst[i]
            if not mark[v] and (bit[i] < 0 or (x >> bit[i]) & 1):
                mark[v] = True
                queue[tail] = v
                tail += 1
    base = tail
    for t in range(targets.shape[0]):
        row = reach_x[t]
        for u in range(n):
            row[u] = False
        v0 = targets[t]
        if mark[v0]:
            continue
        row[v0] = True
        queue[0] = v0
        tail = 1
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            for i in range(indptr[u], indptr[u + 1]):
                v = dst[i]
                if not mark[v] and not row[v] and (bit[i] < 0 or (x >> bit[i]) & 1):
                    row[v] = True
                    queue[tail] = v
                    tail += 1
    return base


@njit(cache=True)
def _outcome_values(base, reach_x, s_t, s_q, e_t, e_q, prod, vals):
    n = prod.shape[0]
    for u in range(n):
        prod[u] = 1.0
    for j in range(s_t.shape[0]):
        row = reach_x[s_t[j]]
        q = s_q[j]
        for u in range(n):
            if row[u]:
                prod[u] *= q
    acc = 0.0
    for u in range(n):
        acc += 1.0 - prod[u]
    for j in range(e_t.shape[0]):
        row = reach_x[e_t[j]]
        q = e_q[j]
        a2 = 0.0
        for u in range(n):
            if row[u]:
                a2 += 1.0 - prod[u] * q
            else:
                a2 += 1.0 - prod[u]
        vals[j] = base + a2
    return base + acc


@njit(cache=True)
def _build_tables(n, indptr, dst, bit, fprob, seeds, targets):
    m = fprob.shape[0]
    nx = 1 << m
    weights = np.empty(nx, dtype=np.float64)
    base = np.empty(nx, dtype=np.int64)
    reach = np.zeros((nx, targets.shape[0], n), dtype=np.bool_)
    mark = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for x in range(nx):
        weights[x] = _outcome_weight(x, fprob)
        base[x] = _fill_reach(x, n, indptr, dst, bit, seeds, targets, mark, queue, reach[x])
    return weights, base, reach


@njit(cache=True)
def _eval_tables(weights, base, reach, s_t, s_q, e_t, e_q):
    n = reach.shape[2]
    prod = np.empty(n, dtype=np.float64)
    vals = np.empty(e_t.shape[0], dtype=np.float64)
    tot_s = 0.0
    tot_e = np.zeros(e_t.shape[0], dtype=np.float64)
    for x in range(weights.shape[0]):
        w = weights[x]
        vs = _outcome_values(base[x], reach[x], s_t, s_q, e_t, e_q, prod, vals)
        tot_s += w * vs
        for j in range(e_t.shape[0]):
            tot_e[j] += w * vals[j]
    return tot_s, tot_e


@njit(cache=True)
def _eval_direct(n, indptr, dst, bit, fprob, seeds, targets, s_t, s_q, e_t, e_q):
    m = fprob.shape[0]
    mark = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    reach_x = np.zeros((targets.shape[0], n), dtype=np.bool_)
    prod = np.empty(n, dtype=np.float64)
    vals = np.empty(e_t.shape[0], dtype=np.float64)
    tot_s = 0.0
    tot_e = np.zeros(e_t.shape[0], dtype=np.float64)
    for x in range(1 << m):
        w = _outcome_weight(x, fprob)
        b = _fill_reach(x, n, indptr, dst, bit, seeds, targets, mark, queue, reach_x)
        vs = _outcome_values(b, reach_x, s_t, s_q, e_t, e_q, prod, vals)
        tot_s += w * vs
        for j in range(e_t.shape[0]):
            tot_e[j] += w * vals[j]
    return tot_s, tot_e


@njit(cache=True)
def _count_live(n, indptr, dst, bit, fixed, skip, use_skip, x, seeds, mark, queue):
    for u in range(n):
        mark[u] = False
    tail = 0
    for a in seeds:
        if not mark[a]:
            mark[a] = True
            queue[tail] = a
            tail += 1
    head = 0
    while head < tail:
        u = queue[head]
        head += 1
        for i in range(indptr[u], indptr[u + 1]):
            if use_skip and skip[i]:
                continue
            live = fixed[i] if bit[i] < 0 else ((x >> bit[i]) & 1) == 1
            v = dst[i]
            if live and not mark[v]:
                mark[v] = True
                queue[tail] = v
                tail += 1
    return tail


@njit(cache=True)
def _delta_kernel(n, indptr, dst, bit, fixed, in_t, fprob, seeds):
    mark = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    tot = 0.0
    for x in range(1 << fprob.shape[0]):
        w = _outcome_weight(x, fprob)
        full = _count_live(n, indptr, dst, bit, fixed, in_t, False, x, seeds, mark, queue)
        cut = _count_live(n, indptr, dst, bit, fixed, in_t, True, x, seeds, mark, queue)
        tot += w * (full - cut)
    return tot


def _csr(n, src, dst):
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return order, indptr


# --------------------------------------------------------------- evaluator


def _check_pool(inst: ProblemInstance, pool: Sequence[CandidateEdge]) -> None:
    for c in pool:
        if c.src not in inst.seeds:
            raise InstanceError(f"candidate source not a seed: {c}")


class ExactEvaluator:
    """Exact ``sigma(A, S)`` for subsets ``S`` of a fixed candidate pool.

    The pool fixes which part of the graph matters (nodes reachable from the
    seeds or from a candidate target). Per-outcome reach tables are built
    once when they fit in ``table_limit`` cells, otherwise every query
    re-enumerates.
    """

    def __init__(self, inst: ProblemInstance, pool: Sequence[CandidateEdge] | None = None,
                 table_limit: int = TABLE_LIMIT):
        self.inst = inst
        self.pool = list(inst.candidates if pool is None else pool)
        _check_pool(inst, self.pool)
        n = inst.n
        src, dst, prob = inst.edge_arrays

        # only nodes reachable (over p > 0 edges) from seeds or candidate targets matter
        relevant = np.zeros(n, dtype=bool)
        starts = set(inst.seeds) | {c.dst for c in self.pool if c.prob > 0}
        adj: dict[int, list[int]] = {}
        for s, d, p in zip(src.tolist(), dst.tolist(), prob.tolist()):
            if p > 0:
                adj.setdefault(s, []).append(d)
        todo = list(starts)
        for v in todo:
            relevant[v] = True
        while todo:
            u = todo.pop()
            for v in adj.get(u, ()):
                if not relevant[v]:
                    relevant[v] = True
                    todo.append(v)
        keep = (prob > 0) & relevant[src] if len(src) else np.zeros(0, dtype=bool)
        ks, kd, kp = src[keep], dst[keep], prob[keep]
        free = kp < 1.0
        self.free_edges = int(free.sum())
        if self.free_edges > MAX_FREE_EDGES:
            raise OracleTooLarge("free edges", self.free_edges, MAX_FREE_EDGES)
        bit = np.full(len(ks), -1, dtype=np.int64)
        bit[free] = np.arange(self.free_edges)
        self.free_prob = kp[free].astype(np.float64)
        order, indptr = _csr(n, ks, kd)
        self.indptr = indptr
        self.dst = kd[order].astype(np.int64)
        self.bit = bit[order]
        self.seeds = np.array(inst.sorted_seeds, dtype=np.int64)

        self.targets = np.array(sorted({c.dst for c in self.pool}), dtype=np.int64)
        slot = {int(t): i for i, t in enumerate(self.targets)}
        self.cand_slot = np.array([slot[c.dst] for c in self.pool], dtype=np.int64)
        self.cand_q = np.array([1.0 - c.prob for c in self.pool], dtype=np.float64)

        self.num_outcomes = 1 << self.free_edges
        self._tables = None
        if self.num_outcomes * max(1, len(self.targets)) * max(1, n) <= table_limit:
            self._tables = _build_tables(n, self.indptr, self.dst, self.bit, self.free_prob,
                                         self.seeds, self.targets)

    def _run(self, s_idx, e_idx):
        s_idx = np.asarray(s_idx, dtype=np.int64)
        e_idx = np.asarray(e_idx, dtype=np.int64)
        s_t, s_q = self.cand_slot[s_idx], self.cand_q[s_idx]
        e_t, e_q = self.cand_slot[e_idx], self.cand_q[e_idx]
        if self._tables is not None:
            return _eval_tables(*self._tables, s_t, s_q, e_t, e_q)
        return _eval_direct(self.inst.n, self.indptr, self.dst, self.bit, self.free_prob,
                            self.seeds, self.targets, s_t, s_q, e_t, e_q)

    def sigma(self, idx: Sequence[int]) -> float:
        return float(self._run(list(idx), [])[0])

    def sigma_with_each(self, idx: Sequence[int], extra: Sequence[int]) -> tuple[float, np.ndarray]:
        """``sigma(S)`` and ``sigma(S + e)`` for each pool index ``e`` in ``extra``.

        Each ``sigma(S + e)`` is bit-identical to ``sigma(list(S) + [e])``.
        """
        tot_s, tot_e = self._run(list(idx), list(extra))
        return float(tot_s), tot_e


def exact_sigma(inst: ProblemInstance, S: Sequence[CandidateEdge]) -> float:
    """Exact expected number of active nodes with edge set ``S`` added."""
    S = list(S)
    ev = ExactEvaluator(inst, S, table_limit=0)
    return ev.sigma(range(len(S)))


# ------------------------------------------------------------ distribution


@dataclass(frozen=True)
class ExactDistribution:
    """All live-edge outcomes over ``E ∪ S``.

    Masks index the universe in ``diffusion.universe`` order (instance edges,
    then ``S``). Outcome ``i`` sets free edge ``j`` live iff bit ``j`` of ``i``
    is set; probability-1 edges are always live, probability-0 never.
    """

    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    free: np.ndarray  # universe positions of the free edges, bit order
    probabilities: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.prob)

    def mask(self, i: int) -> np.ndarray:
        live = self.prob >= 1.0
        bits = (i >> np.arange(len(self.free))) & 1
        live[self.free] = bits.astype(bool)
        return live

    def outcomes(self) -> Iterator[tuple[np.ndarray, float]]:
        for i, p in enumerate(self.probabilities):
            yield self.mask(i), float(p)


def exact_distribution(inst: ProblemInstance, S: Sequence[CandidateEdge]) -> ExactDistribution:
    src, dst, prob = universe(inst, list(S))
    free = np.flatnonzero((prob > 0) & (prob < 1))
    if len(free) > MAX_FREE_EDGES:
        raise OracleTooLarge("free edges", len(free), MAX_FREE_EDGES)
    fp = prob[free]
    probs = np.array([_outcome_weight(x, fp) for x in range(1 << len(free))])
    return ExactDistribution(src, dst, prob, free, probs)


def exact_delta(inst: ProblemInstance, S1: Sequence[CandidateEdge],
                S2: Sequence[CandidateEdge]) -> float:
    """Expected number of nodes reached with ``S1`` but not with ``S2`` (``S2 ⊆ S1``),
    summed outcome by outcome over the live-edge graphs of ``E ∪ S1``."""
    S1 = list(S1)
    s2 = {c.pair for c in S2}
    if not s2 <= {c.pair for c in S1}:
        raise ValueError("S2 must be a subset of S1")
    src, dst, prob = universe(inst, S1)
    m_e = len(inst.edges)
    in_t = np.zeros(len(src), dtype=bool)
    for j, c in enumerate(S1):
        in_t[m_e + j] = c.pair not in s2
    free_mask = (prob > 0) & (prob < 1)
    m = int(free_mask.sum())
    if m > MAX_FREE_EDGES:
        raise OracleTooLarge("free edges", m, MAX_FREE_EDGES)
    bit = np.full(len(src), -1, dtype=np.int64)
    bit[free_mask] = np.arange(m)
    order, indptr = _csr(inst.n, src, dst)
    return float(_delta_kernel(inst.n, indptr, dst[order], bit[order], (prob >= 1.0)[order],
                               in_t[order], prob[free_mask].astype(np.float64),
                               np.array(inst.sorted_seeds, dtype=np.int64)))


# -------------------------------------------------------------- brute force


def _lex_better(value, idx, best_value, best_idx) -> bool:
    return value > best_value or (value == best_value and idx < best_idx)


def brute_force_opt(inst: ProblemInstance, evaluator: ExactEvaluator | None = None) -> Solution:
    """Feasible candidate subset with the largest exact influence.

    Ties go to the lexicographically smallest sorted index tuple, so the empty
    set wins any tie it is part of.
    """
    C = len(inst.candidates)
    if C > MAX_BRUTE_CANDIDATES:
        raise OracleTooLarge("candidates", C, MAX_BRUTE_CANDIDATES)
    ev = evaluator or ExactEvaluator(inst)
    costs = [c.cost for c in inst.candidates]
    best_idx: tuple[int, ...] = ()
    best_val = ev.sigma(())
    for r in range(1, C + 1):
        any_feasible = False
        for idx in itertools.combinations(range(C), r):
            if math.fsum(costs[i] for i in idx) > inst.budget:
                continue
            any_feasible = True
            val = ev.sigma(idx)
            if _lex_better(val, idx, best_val, best_idx):
                best_val, best_idx = val, idx
        if not any_feasible:
            break  # every larger subset contains an infeasible one of this size
    chosen = [inst.candidates[i] for i in best_idx]
    return Solution(chosen, math.fsum(c.cost for c in chosen), best_val, [], "brute",
                    list(best_idx))
