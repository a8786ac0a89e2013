"""Independent Cascade simulation through live-edge sampling.

Every coin is a hash of ``(block seed, sample index, src, dst)``, so a coin
belongs to an edge identity rather than to a position in an RNG stream. Two
consequences the solvers rely on:

* adding candidate edges never perturbs the coins of existing edges, which
  gives common random numbers across all alternatives compared in one
  greedy iteration;
* the traversal can flip coins lazily, only for edges it actually touches.

Per-sample counts are integers and reductions are integer sums, so results
are bit-identical regardless of how many threads run the kernel.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np
from numba import njit, prange

from .graph import CandidateEdge, ProblemInstance

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53
_MASK64 = (1 << 64) - 1

WORKERS_ENV = "COSTIMA_WORKERS"


@njit(cache=True, inline="always")
def _mix(x):
    # splitmix64 finaliser
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True, inline="always")
def _sample_key(block_seed, sample):
    return _mix(block_seed + (np.uint64(sample) + np.uint64(1)) * _GOLDEN)


@njit(cache=True, inline="always")
def _coin(sample_key, edge_key):
    return np.float64(_mix(sample_key ^ edge_key) >> np.uint64(11)) * _TO_UNIT


@njit(cache=True)
def _edge_keys(src, dst):
    out = np.empty(src.shape[0], dtype=np.uint64)
    for i in range(src.shape[0]):
        out[i] = _mix((np.uint64(src[i]) << np.uint64(32)) | np.uint64(dst[i]))
    return out


@njit(cache=True)
def _uniforms(block_seed, sample, keys):
    sk = _sample_key(block_seed, sample)
    out = np.empty(keys.shape[0], dtype=np.float64)
    for i in range(keys.shape[0]):
        out[i] = _coin(sk, keys[i])
    return out


@njit(cache=True, parallel=True, nogil=True)
def _spread_kernel(n, indptr, dst, prob, ekey, seeds,
                   s_dst, s_prob, s_key, c_dst, c_prob, c_key,
                   block_seed, num_samples, nchunks):
    """Per-sample |R(A, X)| for E ∪ S, plus sums over samples of |R(A, X ∪ {e})|
    (and of its square) for every extra candidate e, all on shared coins."""
    ncand = c_dst.shape[0]
    base = np.zeros(num_samples, dtype=np.int64)
    csum = np.zeros((nchunks, ncand), dtype=np.int64)
    csq = np.zeros((nchunks, ncand), dtype=np.int64)
    per = (num_samples + nchunks - 1) // nchunks
    for ch in prange(nchunks):
        lo = ch * per
        hi = min(num_samples, lo + per)
        if lo >= hi:
            continue
        mark = np.zeros(n, dtype=np.int64)
        mark2 = np.zeros(n, dtype=np.int64)
        cache_at = np.zeros(n, dtype=np.int64)
        cache_val = np.zeros(n, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        queue2 = np.empty(n, dtype=np.int64)
        stamp2 = 0
        for s in range(lo, hi):
            stamp = s - lo + 1
            sk = _sample_key(block_seed, s)
            tail = 0
            for a in seeds:
                if mark[a] != stamp:
                    mark[a] = stamp
                    queue[tail] = a
                    tail += 1
            # solution edges all leave seeds, which are active from the start
            for j in range(s_dst.shape[0]):
                v = s_dst[j]
                if mark[v] != stamp and _coin(sk, s_key[j]) < s_prob[j]:
                    mark[v] = stamp
                    queue[tail] = v
                    tail += 1
            head = 0
            while head < tail:
                u = queue[head]
                head += 1
                for i in range(indptr[u], indptr[u + 1]):
                    v = dst[i]
                    if mark[v] != stamp and _coin(sk, ekey[i]) < prob[i]:
                        mark[v] = stamp
                        queue[tail] = v
                        tail += 1
            b = tail
            base[s] = b
            for c in range(ncand):
                v = c_dst[c]
                gain = 0
                if mark[v] != stamp and _coin(sk, c_key[c]) < c_prob[c]:
                    if cache_at[v] == s + 1:
                        gain = cache_val[v]
                    else:
                        stamp2 += 1
                        mark2[v] = stamp2
                        queue2[0] = v
                        t2 = 1
                        h2 = 0
                        while h2 < t2:
                            u = queue2[h2]
                            h2 += 1
                            for i in range(indptr[u], indptr[u + 1]):
                                w = dst[i]
                                if mark[w] != stamp and mark2[w] != stamp2 \
                                        and _coin(sk, ekey[i]) < prob[i]:
                                    mark2[w] = stamp2
                                    queue2[t2] = w
                                    t2 += 1
                        gain = t2
                        cache_at[v] = s + 1
                        cache_val[v] = gain
                tot = b + gain
                csum[ch, c] += tot
                csq[ch, c] += tot * tot
    return base, csum, csq


# ------------------------------------------------------------------ configs


def samples_for_accuracy(n: int, lam: float, delta: float) -> int:
    """Sample count ``ceil(n^2 / lam^2 * ln(1/delta))`` (constant factor taken as 1)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return max(1, math.ceil(n * n / (lam * lam) * math.log(1.0 / delta)))


@dataclass(frozen=True)
class SamplingConfig:
    num_samples: int | None = 1000
    base_seed: int = 0
    lam: float | None = None
    delta: float | None = None
    parallel: bool = True

    def __post_init__(self):
        if self.num_samples is None and (self.lam is None or self.delta is None):
            raise ValueError("give num_samples, or both lam and delta")
        if self.num_samples is not None and self.num_samples < 1:
            raise ValueError("num_samples must be positive")
        if not 0 <= self.base_seed <= _MASK64:
            raise ValueError("base_seed must fit in 64 unsigned bits")

    def samples(self, n: int) -> int:
        if self.num_samples is not None:
            return self.num_samples
        return samples_for_accuracy(n, self.lam, self.delta)


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    samples: int
    variance: float
    rng_seed: int
    edge_set_hash: str
    lam: float | None = None
    delta: float | None = None

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.samples)

    def to_dict(self) -> dict:
        return {
            "value": f"{self.value:.9f}",
            "samples": self.samples,
            "variance": f"{self.variance:.9f}",
            "stderr": f"{self.stderr:.9f}",
            "rng_seed": self.rng_seed,
            "edge_set_hash": self.edge_set_hash,
            "lambda": self.lam,
            "delta": self.delta,
        }


def edge_set_hash(S: Sequence[CandidateEdge]) -> str:
    text = ";".join(f"{c.src},{c.dst},{c.prob!r}" for c in sorted(S, key=lambda c: c.pair))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def configure_workers(workers: int | None = None) -> int:
    """Set the kernel thread count from ``workers`` or ``$COSTIMA_WORKERS``."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else numba.config.NUMBA_NUM_THREADS
    workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(workers)
    return workers


# ----------------------------------------------------------- kernel driver


class _Prepared:
    """Arrays the kernels need, built once per instance."""

    def __init__(self, inst: ProblemInstance):
        indptr, dst, prob = inst.csr
        src_sorted = np.repeat(np.arange(inst.n, dtype=np.int64), np.diff(indptr))
        self.n = inst.n
        self.indptr = indptr
        self.dst = dst
        self.prob = prob
        self.ekey = _edge_keys(src_sorted, dst)
        self.seeds = np.array(inst.sorted_seeds, dtype=np.int64)


def _prepared(inst: ProblemInstance) -> _Prepared:
    p = inst.__dict__.get("_prepared_sim")
    if p is None:
        p = _Prepared(inst)
        inst.__dict__["_prepared_sim"] = p
    return p


def _cand_arrays(edges: Sequence[CandidateEdge]):
    src = np.array([c.src for c in edges], dtype=np.int64)
    dst = np.array([c.dst for c in edges], dtype=np.int64)
    prob = np.array([c.prob for c in edges], dtype=np.float64)
    return dst, prob, _edge_keys(src, dst)


def _nchunks(num_samples: int, parallel: bool) -> int:
    if not parallel:
        return 1
    return max(1, min(num_samples, 4 * numba.get_num_threads()))


def simulate(inst: ProblemInstance, S: Sequence[CandidateEdge], extra: Sequence[CandidateEdge],
             block_seed: int, num_samples: int, parallel: bool = True):
    """Run the shared-coin kernel.

    Returns ``(base_counts, extra_sums, extra_sqsums)``: per-sample
    ``|R(A, X)|`` for ``E ∪ S`` and, for each ``e`` in ``extra``, the integer
    sums over samples of ``|R(A, X ∪ {e})|`` and of its square.
    """
    p = _prepared(inst)
    s_dst, s_prob, s_key = _cand_arrays(S)
    c_dst, c_prob, c_key = _cand_arrays(extra)
    nch = _nchunks(num_samples, parallel)
    base, csum, csq = _spread_kernel(
        p.n, p.indptr, p.dst, p.prob, p.ekey, p.seeds,
        s_dst, s_prob, s_key, c_dst, c_prob, c_key,
        np.uint64(block_seed & _MASK64), num_samples, nch)
    return base, csum.sum(axis=0), csq.sum(axis=0)


def _variance(total: int, sq: int, k: int) -> float:
    if k < 2:
        return 0.0
    # exact integer numerator, one rounding at the end
    return max(0.0, (sq * k - total * total) / (k * (k - 1)))


# ---------------------------------------------------------------- live edges


@dataclass(frozen=True)
class LiveEdgeGraph:
    """One coin outcome over ``E ∪ S``: positions ``0..|E|-1`` are the instance
    edges in their stored order, followed by the edges of ``S``."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    live: np.ndarray

    def live_edges(self) -> list[tuple[int, int]]:
        return [(int(s), int(d)) for s, d in zip(self.src[self.live], self.dst[self.live])]


def universe(inst: ProblemInstance, S: Sequence[CandidateEdge]):
    """``(src, dst, prob)`` arrays over ``E ∪ S`` in live-mask order."""
    src, dst, prob = inst.edge_arrays
    if S:
        src = np.concatenate([src, np.array([c.src for c in S], dtype=np.int64)])
        dst = np.concatenate([dst, np.array([c.dst for c in S], dtype=np.int64)])
        prob = np.concatenate([prob, np.array([c.prob for c in S], dtype=np.float64)])
    return src, dst, prob


def sample_live_edge(inst: ProblemInstance, S: Sequence[CandidateEdge], sample_index: int,
                     cfg: SamplingConfig) -> LiveEdgeGraph:
    src, dst, prob = universe(inst, S)
    u = _uniforms(np.uint64(cfg.base_seed & _MASK64), sample_index, _edge_keys(src, dst))
    return LiveEdgeGraph(inst.n, src, dst, u < prob)


def reach(X: LiveEdgeGraph, A) -> set[int]:
    """Nodes with a live directed path from some seed in ``A`` (including ``A``)."""
    adj: dict[int, list[int]] = {}
    for s, d in zip(X.src[X.live].tolist(), X.dst[X.live].tolist()):
        adj.setdefault(s, []).append(d)
    seen = set(int(a) for a in A)
    todo = deque(seen)
    while todo:
        u = todo.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


# ---------------------------------------------------------------- estimators


def estimate_sigma(inst: ProblemInstance, S: Sequence[CandidateEdge],
                   cfg: SamplingConfig) -> SigmaEstimate:
    """Monte Carlo mean of ``|R(A, X)|`` over sampled live-edge graphs of ``E ∪ S``."""
    k = cfg.samples(inst.n)
    base, _, _ = simulate(inst, S, [], cfg.base_seed, k, cfg.parallel)
    total = int(base.sum())
    sq = int((base * base).sum())
    return SigmaEstimate(total / k, k, _variance(total, sq, k), cfg.base_seed,
                         edge_set_hash(S), cfg.lam, cfg.delta)


def marginal_gain(inst: ProblemInstance, S: Sequence[CandidateEdge], e: CandidateEdge,
                  cfg: SamplingConfig) -> float:
    """Paired estimate of ``sigma(S + e) - sigma(S)`` on common coins; never negative."""
    if e in S:
        raise ValueError("edge already in S")
    k = cfg.samples(inst.n)
    base, csum, _ = simulate(inst, S, [e], cfg.base_seed, k, cfg.parallel)
    return (int(csum[0]) - int(base.sum())) / k


def sigma_with_each(inst: ProblemInstance, S: Sequence[CandidateEdge],
                    extra: Sequence[CandidateEdge], block_seed: int, num_samples: int,
                    parallel: bool = True) -> tuple[float, np.ndarray]:
    """Estimated ``sigma(S)`` and ``sigma(S + e)`` for each ``e`` in ``extra``,
    all from one block of shared coins."""
    base, csum, _ = simulate(inst, S, extra, block_seed, num_samples, parallel)
    return int(base.sum()) / num_samples, csum.astype(np.float64) / num_samples
