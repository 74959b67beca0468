"""Exact minimum-objective solver for small instances.

Explicit depth-first branch and bound over every (path, start-slot) choice
per demand, under the same constraint set the planner enforces: spectrum
continuity/contiguity/non-overlap plus, when impairments are on, the mutual
inverse-SINR budget of every placed demand. The objective is the same
distance-weighted congestion sum the planner reports
(:meth:`SpectrumState.objective_value` semantics, normalized distances).

Soundness of the pruning relies on monotonicity: placing another demand can
only raise any link's demand count and top slot (so the partial objective
never decreases) and can only add interference to the already placed
demands (so an infeasible partial assignment cannot become feasible).

Instances are capped at 8 demands; the search tree is otherwise open-ended
and both a node budget and a wall-clock budget can stop it early, in which
case the best incumbent is returned unproven.
"""

import time
from dataclasses import dataclass

from . import phys
from .grid import SpectrumState
from .net import Topology, k_shortest_paths, normalize_distances
from .params import ImpairmentParams

MAX_EXACT_DEMANDS = 8

_PENALTY = 1e6
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class ExactLimits:
    max_demands: int = MAX_EXACT_DEMANDS
    max_nodes: int | None = None
    max_seconds: float | None = None


@dataclass
class ExactResult:
    status: str  # "optimal" | "infeasible" | "node_limit" | "time_limit"
    objective: float | None
    assignment: dict  # demand id -> {"path_rank", "start_slot", "width"}
    nodes_explored: int
    proven_optimal: bool
    elapsed_s: float
    impairments: bool
    n_slots: int


class _Placement:
    __slots__ = ("model", "rows", "lo", "hi", "center", "counts", "nli")

    def __init__(self, model: phys.ChannelModel, rows: tuple, lo: int,
                 params: ImpairmentParams):
        self.model = model
        self.rows = rows
        self.lo = lo
        self.hi = lo + model.width - 1
        self.center = model.center_hz(lo + 1, params)
        self.counts = [0] * model.width
        self.nli = model.self_nli


def exact_solve(topology: Topology, demands, params: ImpairmentParams, n_slots: int,
                *, k_paths: int = 3, impairments: bool = True,
                limits: ExactLimits | None = None,
                seed_assignment: dict | None = None) -> ExactResult:
    """Minimize the congestion objective over all complete assignments.

    Every demand must be served (there is no blocking branch); an instance
    where no complete feasible assignment exists reports "infeasible".
    ``seed_assignment`` (demand id -> {"path_rank", "start_slot"}) primes the
    incumbent, typically from a heuristic plan; it is replayed through the
    solver's own constraint checks first and silently dropped if it is not
    mutually feasible, since an invalid upper bound could prune the optimum.
    """
    limits = limits or ExactLimits()
    if len(demands) > min(limits.max_demands, MAX_EXACT_DEMANDS):
        raise ValueError(
            f"exact solver accepts at most {min(limits.max_demands, MAX_EXACT_DEMANDS)} "
            f"demands, got {len(demands)}"
        )
    if len(set(d.id for d in demands)) != len(demands):
        raise ValueError("duplicate demand ids")

    link_rows = {link: i for i, link in enumerate(topology.directed_links)}
    distances = normalize_distances(topology)
    dist = [distances[link] for link in topology.directed_links]
    n_links = len(dist)

    options_per_demand = []
    for demand in demands:
        options = []
        for path in k_shortest_paths(topology, demand, k_paths, params.span_length_km):
            model = phys.ChannelModel(demand, path, params)
            if model.width > n_slots:
                continue
            if impairments and model.clean_inverse > params.sis:
                continue  # never feasible, even alone on the grid
            options.append((model, tuple(link_rows[link] for link in path.links)))
        options_per_demand.append(options)

    # Additive lower bound on how much any future placement of demand i must
    # raise the objective: one more demand on every link of its cheapest
    # path, each worth at least d/N.
    lb_inc = []
    for options in options_per_demand:
        if options:
            lb_inc.append(min(sum(dist[r] for r in rows) / n_slots for _, rows in options))
        else:
            lb_inc.append(0.0)
    suffix_lb = [0.0] * (len(demands) + 1)
    for i in range(len(demands) - 1, -1, -1):
        suffix_lb[i] = suffix_lb[i + 1] + lb_inc[i]

    intervals: list = [[] for _ in range(n_links)]
    r_count = [0] * n_links
    k_max = [0] * n_links
    contrib = [0.0] * n_links
    placed: list = []

    eps = params.eps_xtalk
    p_r = params.p_r_w
    sis = params.sis

    def link_contrib(row: int) -> float:
        r = r_count[row]
        if r == 0:
            return 0.0
        if k_max[row] >= n_slots:
            return _PENALTY * r * dist[row]
        return r / (n_slots - k_max[row]) * dist[row]

    def feasible(placement: _Placement) -> bool:
        inverse = (
            placement.model.ase_inverse
            + max(placement.counts) * eps
            + placement.nli / p_r
        )
        return inverse <= sis

    def place(model: phys.ChannelModel, rows: tuple, lo: int, objective: float):
        """Try to place; returns (placement, new_objective, undo) or None."""
        hi = lo + model.width - 1
        for row in rows:
            for ilo, ihi in intervals[row]:
                if not (ihi < lo or ilo > hi):
                    return None
        placement = _Placement(model, rows, lo, params)
        undo_links = []
        for row in rows:
            undo_links.append((row, k_max[row], contrib[row]))
            intervals[row].append((lo, hi))
            r_count[row] += 1
            k_max[row] = max(k_max[row], hi + 1)
            new_contrib = link_contrib(row)
            objective += new_contrib - contrib[row]
            contrib[row] = new_contrib
        undo_xt = []
        undo_nli = []
        if impairments:
            touched = [placement]
            for other in placed:
                o_model = other.model
                olo, ohi = max(lo, other.lo), min(hi, other.hi)
                if olo <= ohi:
                    hits = phys.crosstalk_hits(model, o_model)
                    if hits:
                        for s in range(olo - lo, ohi - lo + 1):
                            placement.counts[s] += hits
                    hits = phys.crosstalk_hits(o_model, model)
                    if hits:
                        undo_xt.append((other, olo - other.lo, ohi - other.lo, hits))
                        for s in range(olo - other.lo, ohi - other.lo + 1):
                            other.counts[s] += hits
                        if other not in touched:
                            touched.append(other)
                shared = phys.shared_span_count(model, o_model)
                if shared:
                    delta_hz = abs(placement.center - other.center)
                    placement.nli += phys.pairwise_nli_power(model, o_model, delta_hz, shared)
                    undo_nli.append((other, other.nli))
                    other.nli += phys.pairwise_nli_power(o_model, model, delta_hz, shared)
                    if other not in touched:
                        touched.append(other)
            for entry in touched:
                if not feasible(entry):
                    _undo(placement, undo_links, undo_xt, undo_nli)
                    return None
        placed.append(placement)
        return placement, objective, (undo_links, undo_xt, undo_nli)

    def _undo(placement: _Placement, undo_links, undo_xt, undo_nli):
        lo, hi = placement.lo, placement.hi
        for row, old_kmax, old_contrib in undo_links:
            intervals[row].remove((lo, hi))
            r_count[row] -= 1
            k_max[row] = old_kmax
            contrib[row] = old_contrib
        for other, slo, shi, hits in undo_xt:
            for s in range(slo, shi + 1):
                other.counts[s] -= hits
        for other, old_nli in undo_nli:
            other.nli = old_nli

    def unplace(placement: _Placement, undo):
        placed.pop()
        _undo(placement, *undo)

    best: dict = {"objective": None, "assignment": None}

    def record_best(objective: float) -> None:
        best["objective"] = objective
        best["assignment"] = {
            placement.model.demand_id: {
                "path_rank": placement.model.rank,
                "start_slot": placement.lo + 1,
                "width": placement.model.width,
            }
            for placement in placed
        }

    started = time.monotonic()
    stop_reason: list = []
    nodes = [0]

    def replay_seed() -> None:
        if not seed_assignment:
            return
        stack = []
        objective = 0.0
        ok = True
        for demand, options in zip(demands, options_per_demand):
            entry = seed_assignment.get(demand.id)
            chosen = None
            if entry is not None:
                chosen = next(
                    (opt for opt in options if opt[0].rank == entry["path_rank"]), None
                )
            if chosen is None:
                ok = False
                break
            outcome = place(chosen[0], chosen[1], entry["start_slot"] - 1, objective)
            if outcome is None:
                ok = False
                break
            placement, objective, undo = outcome
            stack.append((placement, undo))
        if ok:
            record_best(objective)
        while stack:
            placement, undo = stack.pop()
            unplace(placement, undo)

    def search(depth: int, objective: float) -> None:
        if stop_reason:
            return
        nodes[0] += 1
        if limits.max_nodes is not None and nodes[0] > limits.max_nodes:
            stop_reason.append("node_limit")
            return
        if limits.max_seconds is not None and nodes[0] % 2048 == 0:
            if time.monotonic() - started > limits.max_seconds:
                stop_reason.append("time_limit")
                return
        if depth == len(demands):
            if best["objective"] is None or objective < best["objective"] - _TIE_EPS:
                record_best(objective)
            return
        bound = best["objective"]
        for model, rows in options_per_demand[depth]:
            for lo in range(0, n_slots - model.width + 1):
                outcome = place(model, rows, lo, objective)
                if outcome is None:
                    continue
                placement, new_objective, undo = outcome
                if bound is None or new_objective + suffix_lb[depth + 1] < bound - _TIE_EPS:
                    search(depth + 1, new_objective)
                    bound = best["objective"]
                unplace(placement, undo)
                if stop_reason:
                    return

    replay_seed()
    search(0, 0.0)
    elapsed = time.monotonic() - started

    if stop_reason:
        status = stop_reason[0]
        proven = False
    elif best["objective"] is None:
        status = "infeasible"
        proven = False
    else:
        status = "optimal"
        proven = True
    return ExactResult(
        status=status,
        objective=best["objective"],
        assignment=best["assignment"] or {},
        nodes_explored=nodes[0],
        proven_optimal=proven,
        elapsed_s=elapsed,
        impairments=impairments,
        n_slots=n_slots,
    )


def materialize(topology: Topology, demands, params: ImpairmentParams,
                result: ExactResult, k_paths: int = 3) -> SpectrumState:
    """Rebuild the solver's best assignment as a SpectrumState for auditing."""
    state = SpectrumState(topology, result.n_slots)
    for demand in demands:
        entry = result.assignment.get(demand.id)
        if entry is None:
            raise ValueError(f"no assignment for demand {demand.id!r}")
        paths = k_shortest_paths(topology, demand, k_paths, params.span_length_km)
        path = next(p for p in paths if p.rank == entry["path_rank"])
        state.occupy(demand, path, entry["start_slot"], entry["width"],
                     phys.guard_slots(path, params))
    return state


def optimality_gap(heuristic_objective: float, exact_objective: float) -> float:
    """Relative heuristic excess over the proven optimum, in percent."""
    if exact_objective <= 0.0:
        raise ValueError("exact objective must be positive")
    return (heuristic_objective - exact_objective) / exact_objective * 100.0
