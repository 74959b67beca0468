"""Sequential impairment-aware planner.

Demands are served one at a time in the chosen order. For each demand the
active policy ranks its candidate paths, then the planner scans each path
low-to-high for the first start slot that is spectrally free on every link
and, when impairments are on, admissible against the interference budget.

Admission is mutual: a placement must itself pass the SINR test against
everything already on the grid, and it must not push any previously served
demand over its own budget. The final grid therefore satisfies the
interference constraint for every served demand, the same global condition
the exact solver enforces, which keeps heuristic plans inside the exact
solver's feasible set.

The position scan runs on the kernel backend (compiled or numpy) as a
vectorized prefilter over all free positions; any position within a
relative 1e-9 band of the budget goes to the reference model in
:mod:`eonplan.phys` for the authoritative decision, so the recorded
breakdown always matches an after-the-fact audit of that placement.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import phys
from ._kernels import get_backend
from .grid import SpectrumState
from .net import Demand, Topology, k_shortest_paths, normalize_distances
from .ordering import order_demands
from .params import ImpairmentParams

POLICIES = ("proposed", "dbp-only", "blsa")

# Kernel prefilter slack: positions whose kernel-side budget lands within
# this relative band of the limit are still checked by the reference model.
_SCAN_SLACK = 1e-9


@dataclass(frozen=True)
class DemandOutcome:
    demand_id: object
    assigned: bool
    path_rank: int | None = None
    start_slot: int | None = None
    width: int | None = None
    reason: str | None = None
    breakdown: phys.SinrBreakdown | None = None


@dataclass
class PlanResult:
    policy: str
    ordering: str
    impairments: bool
    n_slots: int
    k_paths: int
    order: list
    outcomes: dict
    state: SpectrumState
    metrics: dict
    counters: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.metrics["objective"]


class _LedgerEntry:
    __slots__ = ("model", "start_slot", "lo", "hi", "center", "counts", "nli")

    def __init__(self, model: phys.ChannelModel, start_slot: int, params: ImpairmentParams):
        self.model = model
        self.start_slot = start_slot
        self.lo = start_slot
        self.hi = start_slot + model.width - 1
        self.center = model.center_hz(start_slot, params)
        self.counts = [0] * model.width
        self.nli = model.self_nli

    def inverse(self, params: ImpairmentParams) -> float:
        return (
            self.model.ase_inverse
            + max(self.counts) * params.eps_xtalk
            + self.nli / params.p_r_w
        )


class InterferenceLedger:
    """Running per-demand interference totals on the evolving grid.

    Mirrors, incrementally, what a from-scratch audit would compute for each
    served demand, so the mutual admission check costs one pass over the
    served set instead of a full recomputation.
    """

    def __init__(self, params: ImpairmentParams):
        self.params = params
        self.entries: dict = {}

    def admit(self, model: phys.ChannelModel, start_slot: int) -> bool:
        """Check the mutual constraint and, if it holds, book the placement."""
        params = self.params
        candidate = _LedgerEntry(model, start_slot, params)
        deltas = []
        for entry in self.entries.values():
            other = entry.model
            olo, ohi = max(candidate.lo, entry.lo), min(candidate.hi, entry.hi)
            if olo <= ohi:
                hits_on_candidate = phys.crosstalk_hits(model, other)
                if hits_on_candidate:
                    for s in range(olo - candidate.lo, ohi - candidate.lo + 1):
                        candidate.counts[s] += hits_on_candidate
                hits_on_other = phys.crosstalk_hits(other, model)
            else:
                hits_on_other = 0
            shared = phys.shared_span_count(model, other)
            nli_on_candidate = nli_on_other = 0.0
            if shared:
                delta_hz = abs(candidate.center - entry.center)
                nli_on_candidate = phys.pairwise_nli_power(model, other, delta_hz, shared)
                nli_on_other = phys.pairwise_nli_power(other, model, delta_hz, shared)
                candidate.nli += nli_on_candidate
            if hits_on_other or nli_on_other:
                deltas.append((entry, olo, ohi, hits_on_other, nli_on_other))
        if candidate.inverse(params) > params.sis:
            return False
        for entry, olo, ohi, hits, nli_add in deltas:
            worst = max(entry.counts) if not hits else max(
                entry.counts[s] + hits if olo - entry.lo <= s <= ohi - entry.lo else entry.counts[s]
                for s in range(len(entry.counts))
            )
            inverse = (
                entry.model.ase_inverse
                + worst * params.eps_xtalk
                + (entry.nli + nli_add) / params.p_r_w
            )
            if inverse > params.sis:
                return False
        for entry, olo, ohi, hits, nli_add in deltas:
            if hits:
                for s in range(olo - entry.lo, ohi - entry.lo + 1):
                    entry.counts[s] += hits
            entry.nli += nli_add
        self.entries[model.demand_id] = candidate
        return True

    def inverse_of(self, demand_id) -> float:
        return self.entries[demand_id].inverse(self.params)


def sa_select(demand: Demand, paths, state: SpectrumState) -> list:
    """Spectrum-aware path ranking: ascending sum of psi x link length (km).

    Links that are empty contribute nothing, so an unloaded detour always
    outranks a loaded short route; among loaded options the score trades
    congestion pressure against route length. Ties fall back to path rank.
    """
    topology = state.topology

    def score(path):
        return sum(
            state.psi(link, topology.link_length(*link)) for link in path.links
        )

    return sorted(paths, key=lambda p: (score(p), p.rank))


def rank_paths(policy: str, demand: Demand, paths, state: SpectrumState) -> list:
    """Candidate paths in the order the policy wants them tried."""
    if policy == "proposed":
        return sa_select(demand, paths, state)
    if policy == "dbp-only":
        return sorted(paths, key=lambda p: (p.total_km, p.rank))
    if policy == "blsa":
        # Balance-load spectrum assignment: least-loaded route first, load
        # being the busiest link's occupied-slot count.
        def load(path):
            return max(state.occupied_count(link) for link in path.links)

        return sorted(paths, key=lambda p: (load(p), p.rank))
    raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def scan_positions(demand: Demand, path, state: SpectrumState,
                   params: ImpairmentParams, impairments: bool,
                   counters: dict | None = None):
    """All start slots worth trying on one path, ascending.

    Returns (candidates, had_spectrum): 1-based starts that are spectrally
    free and, with impairments on, within the prefilter band of the
    admission budget. ``had_spectrum`` distinguishes "no contiguous window"
    from "windows exist but none pass".
    """
    kernel = get_backend()
    width = phys.reserved_width(demand, path, params)
    starts0 = kernel.feasible_starts(state.occupancy_rows(path), width)
    if counters is not None:
        counters["positions_scanned"] = counters.get("positions_scanned", 0) + int(starts0.size)
        counters["scan_calls"] = counters.get("scan_calls", 0) + 1
    if starts0.size == 0:
        return [], False
    if not impairments:
        return [int(s) + 1 for s in starts0], True

    inverse = np.full(starts0.shape[0], phys.ase_inverse_snr(path.edfa_count, params))

    segments = state.xt_segment_table(path)
    if counters is not None:
        counters["xt_rows"] = counters.get("xt_rows", 0) + int(segments.shape[0])
    if segments.shape[0]:
        counts = kernel.xt_counts(segments, state.demand_row(demand.id), state.n_slots)
        worst = kernel.window_max(counts, width)
        inverse += worst[starts0] * params.eps_xtalk

    bandwidth = demand.rho * params.slot_width_hz
    g_self = params.p_r_w / bandwidth
    prefactor = (
        3.0 * params.gamma_per_w_m**2 * g_self
        / (2.0 * math.pi * params.alpha_per_m * abs(params.beta2_s2_per_m))
    )
    self_term = g_self**2 * math.log(
        abs(math.pi**2 * params.beta2_s2_per_m * bandwidth**2 / params.alpha_per_m)
    )
    nbr_center, nbr_half, nbr_weight = [], [], []
    for link, spans in zip(path.links, path.span_counts):
        for other in state.channels_on_link(link):
            if other.demand.id == demand.id:
                continue
            other_bw = other.demand.rho * params.slot_width_hz
            nbr_center.append(phys.channel_center_hz(other.start_slot, other.width, params))
            nbr_half.append(other_bw / 2.0)
            nbr_weight.append(spans * (params.p_r_w / other_bw) ** 2)
    if counters is not None:
        counters["nli_terms"] = counters.get("nli_terms", 0) + len(nbr_center) * int(starts0.size)
    lnsum = np.zeros(starts0.shape[0])
    if nbr_center:
        centers = (starts0 + width / 2.0) * params.slot_width_hz
        lnsum = kernel.nli_neighbor_lnsum(
            centers,
            np.asarray(nbr_center),
            np.asarray(nbr_half),
            np.asarray(nbr_weight),
        )
    p_nli = prefactor * (g_self**2 * self_term * path.edfa_count + lnsum) * bandwidth
    inverse += p_nli / params.p_r_w

    budget = params.sis * (1.0 + _SCAN_SLACK)
    keep = np.nonzero(inverse <= budget)[0]
    return [int(starts0[i]) + 1 for i in keep], True


def allocate_demand(demand: Demand, paths, state: SpectrumState,
                    params: ImpairmentParams, *, policy: str = "proposed",
                    impairments: bool = True,
                    ledger: InterferenceLedger | None = None,
                    counters: dict | None = None) -> DemandOutcome:
    """Serve one demand: rank paths, scan positions, admit, occupy.

    On failure the demand is marked blocked on the state with reason
    "no_spectrum" (no contiguous window on any path) or "sinr" (windows
    existed but none passed the mutual admission test).
    """
    if impairments and ledger is None:
        ledger = InterferenceLedger(params)
        for assignment in state.assignments.values():
            model = phys.ChannelModel(assignment.demand, assignment.path, params)
            if not ledger.admit(model, assignment.start_slot):
                raise ValueError(
                    f"existing grid violates the interference budget at "
                    f"demand {assignment.demand.id!r}"
                )
    had_spectrum = False
    for path in rank_paths(policy, demand, paths, state):
        candidates, any_window = scan_positions(
            demand, path, state, params, impairments, counters
        )
        had_spectrum = had_spectrum or any_window
        width = phys.reserved_width(demand, path, params)
        guards = phys.guard_slots(path, params)
        model = phys.ChannelModel(demand, path, params) if impairments else None
        for start in candidates:
            if impairments:
                breakdown = phys.sinr(demand, path, start, state, params)
                if counters is not None:
                    counters["reference_checks"] = counters.get("reference_checks", 0) + 1
                if not phys.admissible(breakdown, params):
                    continue
                if not ledger.admit(model, start):
                    continue
            else:
                breakdown = None
            state.occupy(demand, path, start, width, guards)
            return DemandOutcome(
                demand_id=demand.id,
                assigned=True,
                path_rank=path.rank,
                start_slot=start,
                width=width,
                breakdown=breakdown,
            )
    reason = "sinr" if had_spectrum else "no_spectrum"
    state.mark_blocked(demand, reason)
    return DemandOutcome(demand_id=demand.id, assigned=False, reason=reason)


def run_plan(topology: Topology, demands, params: ImpairmentParams, n_slots: int,
             *, k_paths: int = 3, ordering: str = "msf", policy: str = "proposed",
             impairments: bool = True, strict_k: int | None = None) -> PlanResult:
    """Plan a whole demand set and report the resulting grid and metrics."""
    paths_by_demand = {
        demand.id: k_shortest_paths(topology, demand, k_paths, params.span_length_km)
        for demand in demands
    }
    order = order_demands(ordering, demands, paths_by_demand, strict_k=strict_k)
    state = SpectrumState(topology, n_slots)
    ledger = InterferenceLedger(params) if impairments else None
    counters: dict = {}
    outcomes = {}
    for demand in order:
        outcomes[demand.id] = allocate_demand(
            demand,
            paths_by_demand[demand.id],
            state,
            params,
            policy=policy,
            impairments=impairments,
            ledger=ledger,
            counters=counters,
        )
    metrics = state.metrics(normalize_distances(topology))
    return PlanResult(
        policy=policy,
        ordering=ordering,
        impairments=impairments,
        n_slots=n_slots,
        k_paths=k_paths,
        order=[demand.id for demand in order],
        outcomes=outcomes,
        state=state,
        metrics=metrics,
        counters=counters,
    )


def final_sinr_audit(result: PlanResult, params: ImpairmentParams) -> dict:
    """Recompute every served demand's SINR against the final grid.

    With impairments on, mutual admission keeps every served demand within
    budget, so the audit is a consistency check; with impairments off it
    measures how badly an interference-blind plan violates the budget.
    """
    out = {}
    for demand_id, assignment in result.state.assignments.items():
        out[demand_id] = phys.sinr(
            assignment.demand,
            assignment.path,
            assignment.start_slot,
            result.state,
            params,
        )
    return out
