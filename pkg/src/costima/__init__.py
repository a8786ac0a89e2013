"""Budgeted edge augmentation for influence maximisation under Independent Cascade."""

import numba

# the bundled TBB is too old for numba; skip it rather than warn on every import
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .graph import (  # noqa: E402
    CandidateEdge,
    Edge,
    InstanceError,
    ProblemInstance,
    Solution,
    TraceStep,
    default_candidates,
    load_instance,
    save_instance,
    write_solution,
)
from .diffusion import SamplingConfig, SigmaEstimate, estimate_sigma, marginal_gain  # noqa: E402
from .oracle import brute_force_opt, exact_delta, exact_sigma  # noqa: E402

__all__ = [
    "CandidateEdge",
    "Edge",
    "InstanceError",
    "ProblemInstance",
    "SamplingConfig",
    "SigmaEstimate",
    "Solution",
    "TraceStep",
    "brute_force_opt",
    "default_candidates",
    "estimate_sigma",
    "exact_delta",
    "exact_sigma",
    "load_instance",
    "marginal_gain",
    "save_instance",
    "write_solution",
]
