"""Maximum Set Coverage instances as deterministic unit-cost augmentation instances.

Layout of the generated graph: node 0 is the seed ``a``, nodes ``1..|F|`` are
the set nodes ``v_S``, nodes ``|F|+1..|F|+|X|`` the element nodes ``v_x``, and
any extra isolated seeds come last. Every edge and candidate has
probability 1, so spread is a plain reachability count.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import CandidateEdge, Edge, InstanceError, ProblemInstance, Solution


@dataclass(frozen=True)
class MscInstance:
    universe_size: int
    sets: tuple[frozenset[int], ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        if self.universe_size < 0:
            raise InstanceError("universe size must be non-negative")
        for j, s in enumerate(self.sets):
            if not s:
                raise InstanceError(f"set {j} is empty")
            if not all(0 <= x < self.universe_size for x in s):
                raise InstanceError(f"set {j} has elements outside [0,{self.universe_size})")
        if not 0 < self.k <= len(self.sets):
            raise InstanceError(f"k must lie in [1, {len(self.sets)}], got {self.k}")

    def coverage(self, family) -> int:
        return len(set().union(*(self.sets[j] for j in family)))


def set_node(j: int) -> int:
    return 1 + j


def element_node(msc: MscInstance, x: int) -> int:
    return 1 + len(msc.sets) + x


def msc_to_ima(msc: MscInstance, extra_seeds: int = 0) -> ProblemInstance:
    """Seed ``a`` may link to any set node; set nodes point at their elements."""
    F = len(msc.sets)
    n = 1 + F + msc.universe_size + extra_seeds
    edges = [Edge(set_node(j), element_node(msc, x), 1.0)
             for j, s in enumerate(msc.sets) for x in sorted(s)]
    cands = [CandidateEdge(0, set_node(j), 1.0, 1.0) for j in range(F)]
    seeds = [0] + list(range(1 + F + msc.universe_size, n))
    return ProblemInstance(n, edges, seeds, cands, msc.k, unit_cost=True)


def ima_to_msc_solution(sol: Solution, msc: MscInstance) -> list[int]:
    """Indices of the sets whose ``(a, v_S)`` edge is in the solution."""
    F = len(msc.sets)
    out = []
    for c in sol.chosen:
        if c.src != 0 or not 1 <= c.dst <= F:
            raise InstanceError(f"edge ({c.src},{c.dst}) is not of the form (a, v_S)")
        out.append(c.dst - 1)
    return out


def random_msc(universe_size: int, num_sets: int, k: int, rng_seed: int,
               density: float = 0.3) -> MscInstance:
    """Each element joins each set with probability ``density``; empty sets get one
    uniformly chosen element."""
    rng = np.random.default_rng(rng_seed)
    sets = []
    for _ in range(num_sets):
        members = np.flatnonzero(rng.random(universe_size) < density)
        if len(members) == 0:
            members = [int(rng.integers(universe_size))]
        sets.append(frozenset(int(x) for x in members))
    return MscInstance(universe_size, tuple(sets), k)


def load_msc(path: str | Path, universe_size: int | None, k: int) -> MscInstance:
    """One set per line, space-separated element ids; ``#`` starts a comment."""
    sets = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                sets.append(frozenset(int(t) for t in line.split()))
            except ValueError as exc:
                raise InstanceError(f"{path}:{lineno}: {exc}") from exc
    if universe_size is None:
        universe_size = 1 + max((max(s) for s in sets if s), default=-1)
    return MscInstance(universe_size, tuple(sets), k)
