"""Impairment-aware routing and spectrum allocation for elastic optical networks.

The package plans demand sets onto a flexgrid network under spectrum
continuity, contiguity, and non-overlap, with admission controlled by a
coherent-receiver interference budget (switch crosstalk, fiber nonlinear
interference, amplifier noise). It ships a sequential planner with
exchangeable orderings and path policies, an exact branch-and-bound solver
for small instances, and an experiment harness with a CLI.
"""

from ._kernels import available_backends, backend_name, get_backend, set_backend
from .grid import Assignment, SpectrumConflictError, SpectrumState
from .net import (
    CandidatePath,
    Demand,
    Topology,
    k_shortest_paths,
    load_demands,
    load_topology,
    normalize_distances,
    path_delay,
    span_count,
)
from .ordering import mcdf_order, msf_order, order_demands
from .params import ImpairmentParams, load_params
from .phys import SinrBreakdown, sinr, symbol_error_prob
from .planner import PlanResult, allocate_demand, final_sinr_audit, run_plan, sa_select

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CandidatePath",
    "Demand",
    "ImpairmentParams",
    "PlanResult",
    "SinrBreakdown",
    "SpectrumConflictError",
    "SpectrumState",
    "Topology",
    "allocate_demand",
    "available_backends",
    "backend_name",
    "final_sinr_audit",
    "get_backend",
    "k_shortest_paths",
    "load_demands",
    "load_params",
    "load_topology",
    "mcdf_order",
    "msf_order",
    "normalize_distances",
    "order_demands",
    "path_delay",
    "run_plan",
    "sa_select",
    "set_backend",
    "sinr",
    "span_count",
    "symbol_error_prob",
    "__version__",
]
