"""Problem instances: directed probabilistic graph, seeds, candidate edges, budget.

Nodes are dense integers in ``[0, n)``. String labels from external data are
kept in an optional sidecar (``labels``) and never used for indexing.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised when an instance file cannot be parsed or violates an invariant."""


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    prob: float


@dataclass(frozen=True)
class CandidateEdge:
    src: int
    dst: int
    prob: float
    cost: float

    @property
    def pair(self) -> tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class ProblemInstance:
    """Graph ``G=(V,E,p)``, seed set ``A``, candidate pool with costs, budget ``k``.

    ``unit_cost`` marks the unit-cost special case; when left as ``None`` it is
    inferred (all costs 1 and an integral budget).
    """

    n: int
    edges: tuple[Edge, ...]
    seeds: frozenset[int]
    candidates: tuple[CandidateEdge, ...]
    budget: float
    unit_cost: bool | None = None
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "seeds", frozenset(int(a) for a in self.seeds))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "budget", float(self.budget))
        if self.unit_cost is None:
            inferred = all(c.cost == 1.0 for c in self.candidates) and self.budget.is_integer()
            object.__setattr__(self, "unit_cost", inferred)
        validate(self)

    @property
    def sorted_seeds(self) -> list[int]:
        return sorted(self.seeds)

    @cached_property
    def edge_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((e.src, e.dst) for e in self.edges)

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(src, dst, prob)`` arrays in edge order."""
        m = len(self.edges)
        src = np.fromiter((e.src for e in self.edges), dtype=np.int64, count=m)
        dst = np.fromiter((e.dst for e in self.edges), dtype=np.int64, count=m)
        prob = np.fromiter((e.prob for e in self.edges), dtype=np.float64, count=m)
        return src, dst, prob

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Out-adjacency in CSR form: ``(indptr, dst, prob)``, stable by edge order."""
        src, dst, prob = self.edge_arrays
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, dst[order].copy(), prob[order].copy()

    @cached_property
    def candidate_index(self) -> dict[tuple[int, int], int]:
        return {c.pair: i for i, c in enumerate(self.candidates)}

    def out_degree(self) -> np.ndarray:
        src = self.edge_arrays[0]
        return np.bincount(src, minlength=self.n)

    def with_candidates(self, candidates: Iterable[CandidateEdge]) -> "ProblemInstance":
        return ProblemInstance(self.n, self.edges, self.seeds, tuple(candidates), self.budget,
                               labels=self.labels)

    def with_budget(self, budget: float) -> "ProblemInstance":
        return ProblemInstance(self.n, self.edges, self.seeds, self.candidates, budget,
                               labels=self.labels)


def validate(inst: ProblemInstance) -> None:
    if inst.n < 0:
        raise InstanceError(f"node count must be non-negative, got {inst.n}")
    n = inst.n
    pairs: set[tuple[int, int]] = set()
    for e in inst.edges:
        _check_node(e.src, n, e)
        _check_node(e.dst, n, e)
        if e.src == e.dst:
            raise InstanceError(f"self-loop edge {e}")
        if not 0.0 <= e.prob <= 1.0:
            raise InstanceError(f"edge probability outside [0,1]: {e}")
        if (e.src, e.dst) in pairs:
            raise InstanceError(f"duplicate edge ({e.src},{e.dst})")
        pairs.add((e.src, e.dst))
    for a in inst.seeds:
        if not 0 <= a < n:
            raise InstanceError(f"seed {a} outside [0,{n})")
    if not inst.budget >= 0.0 or math.isinf(inst.budget):
        raise InstanceError(f"budget must be a finite non-negative number, got {inst.budget}")
    seen: set[tuple[int, int]] = set()
    for c in inst.candidates:
        _check_node(c.src, n, c)
        _check_node(c.dst, n, c)
        if c.src not in inst.seeds:
            raise InstanceError(f"candidate source not a seed: {c}")
        if c.src == c.dst:
            raise InstanceError(f"self-loop candidate {c}")
        if (c.src, c.dst) in pairs:
            raise InstanceError(f"candidate duplicates an existing edge: {c}")
        if (c.src, c.dst) in seen:
            raise InstanceError(f"duplicate candidate ({c.src},{c.dst})")
        if not 0.0 <= c.prob <= 1.0:
            raise InstanceError(f"candidate probability outside [0,1]: {c}")
        if not 0.0 <= c.cost <= 1.0:
            raise InstanceError(f"candidate cost outside [0,1]: {c}")
        seen.add((c.src, c.dst))
    if inst.unit_cost:
        if any(c.cost != 1.0 for c in inst.candidates):
            raise InstanceError("unit_cost instance has a candidate with cost != 1")
        if not inst.budget.is_integer():
            raise InstanceError(f"unit_cost instance needs an integral budget, got {inst.budget}")
    if inst.labels is not None and len(inst.labels) != n:
        raise InstanceError(f"labels sidecar has {len(inst.labels)} entries for {n} nodes")


def _check_node(v: int, n: int, where) -> None:
    if not 0 <= v < n:
        raise InstanceError(f"node {v} outside [0,{n}) in {where}")


def default_candidates(
    n: int,
    edges: Sequence[Edge],
    seeds: Iterable[int],
    prob: float = 1.0,
    cost: float | Sequence[float] = 1.0,
) -> list[CandidateEdge]:
    """All ``(a, v)`` with ``a`` a seed, ``v != a`` and ``(a, v)`` not already an edge.

    ``cost`` is either a scalar or a per-target-node table of length ``n``.
    Self-loops are left out: they never change reachability. Seed-to-seed
    pairs stay in even though seeds are always active, so they never add
    anything to the spread.
    """
    existing = {(e.src, e.dst) for e in edges}
    per_node = not np.isscalar(cost)
    if per_node and len(cost) != n:
        raise InstanceError(f"cost table has {len(cost)} entries for {n} nodes")
    out = []
    for a in sorted(set(seeds)):
        for v in range(n):
            if v == a or (a, v) in existing:
                continue
            c = float(cost[v]) if per_node else float(cost)
            out.append(CandidateEdge(a, v, float(prob), c))
    return out


# ---------------------------------------------------------------- solutions


@dataclass(frozen=True)
class TraceStep:
    """One greedy decision: the edge looked at, its value, and what happened to it."""

    iteration: int
    candidate: int
    src: int
    dst: int
    value: float
    accepted: bool
    sigma: float = float("nan")
    note: str = ""


@dataclass
class Solution:
    chosen: list[CandidateEdge]
    total_cost: float
    sigma: float
    trace: list[TraceStep] = field(default_factory=list)
    algo: str = ""
    indices: list[int] = field(default_factory=list)

    def check(self, inst: ProblemInstance) -> None:
        """Assert feasibility against ``inst``; raises ``InstanceError`` otherwise."""
        pool = set(inst.candidates)
        if len(set(self.chosen)) != len(self.chosen):
            raise InstanceError("solution contains duplicate edges")
        if any(c not in pool for c in self.chosen):
            raise InstanceError("solution edge not among the candidates")
        if self.total_cost > inst.budget:
            raise InstanceError(f"solution cost {self.total_cost} exceeds budget {inst.budget}")
        if not math.isclose(self.total_cost, math.fsum(c.cost for c in self.chosen),
                            rel_tol=0.0, abs_tol=1e-12):
            raise InstanceError("total_cost does not match chosen edges")


def total_cost(edges: Iterable[CandidateEdge]) -> float:
    return math.fsum(c.cost for c in edges)


# ---------------------------------------------------------------------- I/O

_FMT = "{:.9f}"


def _fixed(x: float) -> str:
    return _FMT.format(x)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solution_to_dict(sol: Solution) -> dict:
    # reals go out as fixed 9-digit strings, so the JSON text is bit-stable
    return {
        "algo": sol.algo,
        "chosen": [
            {"src": c.src, "dst": c.dst, "prob": _fixed(c.prob), "cost": _fixed(c.cost)}
            for c in sol.chosen
        ],
        "indices": list(sol.indices),
        "sigma": _fixed(sol.sigma),
        "total_cost": _fixed(sol.total_cost),
        "trace": [
            {
                "iteration": t.iteration,
                "candidate": t.candidate,
                "src": t.src,
                "dst": t.dst,
                "value": _fixed(t.value),
                "sigma": _fixed(t.sigma),
                "accepted": t.accepted,
                "note": t.note,
            }
            for t in sol.trace
        ],
    }


def write_solution(sol: Solution, path: str | os.PathLike, format: str = "json") -> None:
    if format == "json":
        text = json.dumps(solution_to_dict(sol), sort_keys=True, indent=2) + "\n"
    elif format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "candidate", "src", "dst", "value", "sigma", "status", "note"])
        for t in sol.trace:
            w.writerow([t.iteration, t.candidate, t.src, t.dst, _fixed(t.value), _fixed(t.sigma),
                        "accepted" if t.accepted else "rejected", t.note])
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown solution format {format!r}")
    atomic_write_text(path, text)


def instance_to_dict(inst: ProblemInstance) -> dict:
    d = {
        "n": inst.n,
        "edges": [[e.src, e.dst, e.prob] for e in inst.edges],
        "seeds": inst.sorted_seeds,
        "candidates": [[c.src, c.dst, c.prob, c.cost] for c in inst.candidates],
        "budget": inst.budget,
        "unit_cost": inst.unit_cost,
    }
    if inst.labels is not None:
        d["labels"] = list(inst.labels)
    return d


def save_instance(inst: ProblemInstance, path: str | os.PathLike) -> None:
    # repr-exact floats (json uses repr) so a reload is field-identical
    atomic_write_text(path, json.dumps(instance_to_dict(inst), sort_keys=True) + "\n")


def instance_from_dict(d: dict) -> ProblemInstance:
    try:
        n = int(d["n"])
        edges = [Edge(int(s), int(t), float(p)) for s, t, p in d.get("edges", [])]
        seeds = [int(a) for a in d.get("seeds", [])]
        cands = [CandidateEdge(int(s), int(t), float(p), float(c))
                 for s, t, p, c in d.get("candidates", [])]
        budget = float(d.get("budget", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance document: {exc}") from exc
    labels = d.get("labels")
    return ProblemInstance(n, edges, seeds, cands, budget, unit_cost=d.get("unit_cost"),
                           labels=tuple(labels) if labels is not None else None)


def _data_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_row(path, lineno, fields, types):
    if len(fields) != len(types):
        raise InstanceError(f"{path}:{lineno}: expected {len(types)} fields, got {len(fields)}")
    try:
        return [t(f) for t, f in zip(types, fields)]
    except ValueError as exc:
        raise InstanceError(f"{path}:{lineno}: {exc}") from exc


def load_instance(
    path: str | os.PathLike,
    format: str = "json",
    *,
    seeds: str | os.PathLike | None = None,
    candidates: str | os.PathLike | None = None,
    budget: float | None = None,
    n: int | None = None,
) -> ProblemInstance:
    """Load and validate an instance.

    ``json``: one document with ``n, edges, seeds, candidates, budget``.
    ``edgelist``: ``path`` holds ``src dst prob`` lines; ``seeds`` is a file
    with one id per line, ``candidates`` a file of ``src dst prob cost``
    lines, ``budget`` comes from the caller. ``n`` defaults to one past the
    largest id seen.
    """
    path = Path(path)
    if format == "json":
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        if budget is not None:
            doc["budget"] = budget
        return instance_from_dict(doc)
    if format != "edgelist":
        raise ValueError(f"unknown instance format {format!r}")

    edges = [Edge(*_parse_row(path, ln, f, (int, int, float))) for ln, f in _data_lines(path)]
    seed_ids: list[int] = []
    if seeds is not None:
        seed_ids = [_parse_row(seeds, ln, f, (int,))[0] for ln, f in _data_lines(Path(seeds))]
    cands: list[CandidateEdge] = []
    if candidates is not None:
        cands = [CandidateEdge(*_parse_row(candidates, ln, f, (int, int, float, float)))
                 for ln, f in _data_lines(Path(candidates))]
    if n is None:
        ids = [v for e in edges for v in (e.src, e.dst)] + seed_ids
        ids += [v for c in cands for v in (c.src, c.dst)]
        n = max(ids) + 1 if ids else 0
    return ProblemInstance(n, edges, seed_ids, cands, 0.0 if budget is None else budget)


def write_edgelist(inst: ProblemInstance, directory: str | os.PathLike, stem: str = "instance"):
    """Write ``<stem>.edges``, ``<stem>.seeds``, ``<stem>.cands``; returns the three paths."""
    d = Path(directory)
    paths = d / f"{stem}.edges", d / f"{stem}.seeds", d / f"{stem}.cands"
    atomic_write_text(paths[0], "".join(f"{e.src}\t{e.dst}\t{e.prob!r}\n" for e in inst.edges))
    atomic_write_text(paths[1], "".join(f"{a}\n" for a in inst.sorted_seeds))
    atomic_write_text(paths[2], "".join(f"{c.src}\t{c.dst}\t{c.prob!r}\t{c.cost!r}\n"
                                        for c in inst.candidates))
    return paths
