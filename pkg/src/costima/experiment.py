"""Random instance generation and the batch experiment runner.

All randomness flows from user-supplied 64-bit seeds. Repetition ``r`` of a
run uses ``base_seed + r`` for its sampling coins and, for the random
baseline, its shuffle.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import SamplingConfig
from .graph import (CandidateEdge, Edge, InstanceError, ProblemInstance, atomic_write_text,
                    default_candidates, load_instance)
from .solvers import SolverConfig, solve

log = logging.getLogger(__name__)


# ------------------------------------------------------------ distributions


def _draw(spec: str, rng: np.random.Generator, size: int, indeg: np.ndarray | None = None):
    """Draw ``size`` reals in [0,1] from a short spec string.

    ``const:p``, ``uniform`` / ``uniform:a:b``, ``trivalency`` (0.1, 0.01,
    0.001), ``wc`` (1 / in-degree of the target, needs ``indeg``), ``unit``.
    """
    kind, *args = spec.split(":")
    if kind in ("const", "unit"):
        return np.full(size, float(args[0]) if args else 1.0)
    if kind == "uniform":
        lo, hi = (float(args[0]), float(args[1])) if args else (0.0, 1.0)
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(f"uniform bounds must satisfy 0 <= a <= b <= 1: {spec}")
        return rng.uniform(lo, hi, size)
    if kind == "trivalency":
        return rng.choice(np.array([0.1, 0.01, 0.001]), size)
    if kind == "wc":
        if indeg is None:
            raise ValueError("'wc' needs target in-degrees")
        return 1.0 / np.maximum(indeg, 1)
    raise ValueError(f"unknown distribution {spec!r}")


def _random_pairs(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` distinct ordered pairs without self-loops, as a sorted (m, 2) array."""
    if m > n * (n - 1):
        raise ValueError(f"cannot place {m} edges on {n} nodes")
    keys = np.empty(0, dtype=np.int64)
    while len(keys) < m:
        need = m - len(keys)
        src = rng.integers(0, n, size=2 * need + 16)
        dst = rng.integers(0, n, size=2 * need + 16)
        ok = src != dst
        new = src[ok] * n + dst[ok]
        keys = np.unique(np.concatenate([keys, new]))
        if len(keys) > m:
            keys = np.sort(rng.choice(keys, size=m, replace=False))
    return np.stack([keys // n, keys % n], axis=1)


def gen_random_instance(
    n: int,
    density: float | None = 0.2,
    prob: str = "uniform:0:1",
    num_seeds: int = 1,
    candidates: str = "all",
    candidate_prob: str | None = None,
    cost: str = "unit",
    budget: float = 1.0,
    rng_seed: int = 0,
    num_edges: int | None = None,
) -> ProblemInstance:
    """Reproducible random instance.

    Edges: every ordered pair independently with probability ``density``, or
    exactly ``num_edges`` uniformly chosen pairs when given (needed for large
    ``n``). Candidates: ``all`` of the pool, or ``sample:K`` distinct ones.
    ``candidate_prob`` defaults to ``prob`` (``wc`` is computed from the
    in-degree in ``E``).
    """
    if n <= 0:
        raise InstanceError("random instance needs n >= 1")
    if not 1 <= num_seeds <= n:
        raise InstanceError(f"num_seeds must lie in [1, {n}]")
    rng = np.random.default_rng(rng_seed)
    if num_edges is not None:
        pairs = _random_pairs(n, num_edges, rng)
    else:
        if density is None or not 0.0 <= density <= 1.0:
            raise InstanceError("density must lie in [0, 1]")
        adj = rng.random((n, n)) < density
        np.fill_diagonal(adj, False)
        pairs = np.argwhere(adj)
    indeg = np.bincount(pairs[:, 1], minlength=n) if len(pairs) else np.zeros(n, dtype=int)
    p = _draw(prob, rng, len(pairs), indeg[pairs[:, 1]] if len(pairs) else indeg[:0])
    edges = [Edge(int(s), int(d), float(q)) for (s, d), q in zip(pairs.tolist(), p.tolist())]
    seeds = sorted(int(a) for a in rng.choice(n, size=num_seeds, replace=False))

    existing = {(e.src, e.dst) for e in edges}
    if candidates == "all":
        pool = [(c.src, c.dst) for c in default_candidates(n, edges, seeds)]
    elif candidates.startswith("sample:"):
        want = int(candidates.split(":", 1)[1])
        pool = _sample_candidate_pairs(n, seeds, edges, existing, want, rng)
    else:
        raise ValueError(f"unknown candidate policy {candidates!r}")
    cprob = candidate_prob or prob
    tgt = np.array([v for _, v in pool], dtype=np.int64)
    cp = _draw(cprob, rng, len(pool), indeg[tgt] if len(pool) else indeg[:0])
    cc = _draw(cost, rng, len(pool))
    cands = [CandidateEdge(a, v, float(q), float(c))
             for (a, v), q, c in zip(pool, cp.tolist(), cc.tolist())]
    return ProblemInstance(n, edges, seeds, cands, budget)


def _sample_candidate_pairs(n, seeds, edges, existing, want, rng):
    seed_set = set(seeds)
    total = len(seeds) * (n - 1) - sum(1 for (s, _) in existing if s in seed_set)
    if want >= total or total <= 200_000:
        pool = [(c.src, c.dst) for c in default_candidates(n, edges, seeds)]
        if want >= len(pool):
            return pool
        pick = np.sort(rng.choice(len(pool), size=want, replace=False))
        return [pool[i] for i in pick]
    chosen: set[tuple[int, int]] = set()
    seed_arr = np.array(seeds)
    while len(chosen) < want:
        a = int(seed_arr[rng.integers(len(seed_arr))])
        v = int(rng.integers(n))
        if v != a and (a, v) not in existing:
            chosen.add((a, v))
    return sorted(chosen)


# -------------------------------------------------------------- experiments


@dataclass
class RunSpec:
    algo: str
    sigma: str = "estimate"
    samples: int = 1000
    M: int = 3
    budget: float | None = None
    stop_on_zero_gain: bool = False


@dataclass
class ExperimentSpec:
    """``instances`` entries are paths to JSON instances or ``{"generator": {...}}``
    keyword dicts for ``gen_random_instance`` (optionally with an ``id``)."""

    instances: list
    runs: list[RunSpec]
    repetitions: int = 1
    base_seed: int = 0
    out_dir: str = "results"
    timings: bool = False

    def __post_init__(self):
        self.runs = [r if isinstance(r, RunSpec) else RunSpec(**r) for r in self.runs]
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        for r in self.runs:
            if not (r.algo in ("greedy", "cost-greedy", "enum-greedy", "brute")
                    or r.algo.startswith("baseline:")):
                raise ValueError(f"unknown algorithm {r.algo!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentSpec":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class ResultRecord:
    instance: str
    algo: str
    repetition: int
    budget: float
    sigma: float
    total_cost: float
    num_edges: int
    rng_seed: int
    samples: int
    sigma_mode: str
    ratio: float | None = None
    error: str = ""
    wall_ms: float = field(default=0.0, compare=False)


CSV_COLUMNS = ["instance", "algo", "repetition", "budget", "sigma", "total_cost", "num_edges",
               "rng_seed", "samples", "sigma_mode", "ratio", "error"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.9f}"
    return str(x)


def records_csv(records: list[ResultRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _load(entry, idx: int) -> tuple[str, ProblemInstance]:
    if isinstance(entry, str):
        return Path(entry).stem, load_instance(entry)
    if isinstance(entry, dict) and "generator" in entry:
        gen = dict(entry["generator"])
        return entry.get("id", f"random{idx}"), gen_random_instance(**gen)
    if isinstance(entry, dict) and "path" in entry:
        return entry.get("id", Path(entry["path"]).stem), load_instance(entry["path"])
    raise ValueError(f"cannot interpret instance entry {entry!r}")


def run_experiment(spec: ExperimentSpec) -> tuple[list[ResultRecord], bool]:
    """Run every (instance, repetition, run); write ``results.csv`` and
    ``results.json`` (and ``timings.csv`` when asked) into ``spec.out_dir``.

    Returns the records and whether every run succeeded. The result files
    hold no wall-clock data, so reruns are byte-identical.
    """
    records: list[ResultRecord] = []
    ok = True
    for idx, entry in enumerate(spec.instances):
        try:
            name, inst = _load(entry, idx)
        except Exception as exc:  # noqa: BLE001 - surfaced in the results
            log.error("instance %s failed to load: %s", entry, exc)
            records.append(ResultRecord(str(entry), "-", 0, math.nan, math.nan, math.nan, 0,
                                        spec.base_seed, 0, "-", error=str(exc)))
            ok = False
            continue
        for rep in range(spec.repetitions):
            seed = spec.base_seed + rep
            batch = []
            for run in spec.runs:
                local = inst if run.budget is None else inst.with_budget(run.budget)
                cfg = SolverConfig(run.sigma, SamplingConfig(run.samples, seed), run.M,
                                   run.stop_on_zero_gain)
                t0 = time.perf_counter()
                try:
                    sol = solve(local, run.algo, cfg)
                    sol.check(local)
                    rec = ResultRecord(name, run.algo, rep, local.budget, sol.sigma,
                                       sol.total_cost, len(sol.chosen), seed, run.samples,
                                       run.sigma)
                except Exception as exc:  # noqa: BLE001
                    log.error("%s/%s rep %d failed: %s", name, run.algo, rep, exc)
                    rec = ResultRecord(name, run.algo, rep, local.budget, math.nan, math.nan, 0,
                                       seed, run.samples, run.sigma, error=str(exc))
                    ok = False
                rec.wall_ms = (time.perf_counter() - t0) * 1000.0
                batch.append(rec)
            opt = {r.budget: r.sigma for r in batch if r.algo == "brute" and not r.error}
            for r in batch:
                if r.budget in opt and not r.error and opt[r.budget] > 0:
                    r.ratio = r.sigma / opt[r.budget]
            records.extend(batch)

    out = Path(spec.out_dir)
    atomic_write_text(out / "results.csv", records_csv(records))
    rows = [{c: _fmt(asdict(r)[c]) for c in CSV_COLUMNS} for r in records]
    atomic_write_text(out / "results.json", json.dumps(rows, sort_keys=True, indent=2) + "\n")
    if spec.timings:
        text = "instance,algo,repetition,wall_ms\n" + "".join(
            f"{r.instance},{r.algo},{r.repetition},{r.wall_ms:.3f}\n" for r in records)
        atomic_write_text(out / "timings.csv", text)
    return records, ok
