"""Coherent-receiver impairment model: switch crosstalk, fiber nonlinear
interference, beat-noise variances, and the SINR admission test.

Conventions
-----------
* Frequencies are offsets from the low edge of the flexgrid band; only
  differences enter any formula. A block of ``width`` slots starting at
  1-based slot ``f`` spans ``[(f-1)*slot, (f-1+width)*slot]`` Hz.
* Every channel launches at the same received power ``p_r_w``, so a channel
  occupying ``rho`` signal slots has PSD ``p_r_w / (rho * slot_width_hz)``.
* The decision metric is the inverse-SINR budget
  ``P_nli/P_r + P_xt/P_r + 1/SNR_ase``: each ratio is the fraction of the
  self-interference budget the term consumes. The beat variances of the
  receiver analysis are reported alongside for diagnosis; in the default
  "consistent" mode ``sinr`` is exactly the reciprocal of that budget, while
  "paper-literal" mode instead forms d^2 over the summed variances with the
  crosstalk and NLI beats written as sqrt terms (kept only for fidelity
  studies; the sqrt forms are not dimensionally consistent).
"""

import math
import warnings
from dataclasses import dataclass

from .grid import SpectrumState
from .net import CandidatePath, Demand
from .params import ImpairmentParams, linear_to_db

# Below this signal bandwidth the incoherent-accumulation model underpinning
# the nonlinear-interference formula starts to lose validity.
NLI_BANDWIDTH_FLOOR_HZ = 28e9


@dataclass(frozen=True)
class InterfererRecord:
    """One crosstalk incidence: who leaks, where, and on which slot."""

    demand_id: object
    node: str
    slot: int


@dataclass(frozen=True)
class SinrBreakdown:
    """Everything the admission decision saw for one candidate placement."""

    mode: str
    m_edfa: int
    p_ch_w: float
    d_squared: float
    p_xtalk_w: float
    p_nli_w: float
    snr_ase: float
    var_lo_ase: float
    var_lo_xtalk: float
    var_lo_nli: float
    var_shot: float
    inverse_sinr_ratio_form: float
    sinr: float

    @property
    def sinr_db(self) -> float:
        return linear_to_db(self.sinr)


def crosstalk_power(params: ImpairmentParams) -> float:
    """In-band leakage power of one interferer through a switch port."""
    return params.p_r_w * params.eps_xtalk


def is_interferer(primary_demand_id, egress_node, other_demand_id,
                  other_prev, other_next) -> bool:
    """Whether a lightpath present at a crossconnect leaks into the primary.

    ``egress_node`` is the primary's next hop at the crossconnect;
    ``other_prev``/``other_next`` are the other lightpath's neighbor nodes on
    its own route there (None at an add/drop end). Anything routed through
    the same egress port rides along instead of leaking, and a demand never
    interferes with itself. Slot overlap is the caller's concern.
    """
    if other_demand_id == primary_demand_id:
        return False
    return other_prev != egress_node and other_next != egress_node


def guard_slots(path: CandidatePath, params: ImpairmentParams) -> int:
    """Guard-band slots added for filter narrowing: per-WSS allowance x hops."""
    return params.guard_slots_per_wss * path.hop_count


def reserved_width(demand: Demand, path: CandidatePath, params: ImpairmentParams) -> int:
    """Slots actually blocked on the grid: signal slots plus guards."""
    return demand.rho + guard_slots(path, params)


def channel_center_hz(start_slot: int, width: int, params: ImpairmentParams) -> float:
    """Center frequency of a block of ``width`` slots starting at ``start_slot``."""
    return (start_slot - 1 + width / 2.0) * params.slot_width_hz


def interferer_records(path: CandidatePath, start_slot: int, width: int,
                       state: SpectrumState, params: ImpairmentParams) -> list:
    """All crosstalk incidences onto the given placement, one per slot hit.

    Walks the path's crossconnects (add node and transits) and applies
    :func:`is_interferer` to every other lightpath present there, restricted
    to slots inside ``[start_slot, start_slot + width - 1]``.
    """
    lo, hi = start_slot, start_slot + width - 1
    records = []
    nodes = path.nodes
    for i in range(len(nodes) - 1):
        node, egress = nodes[i], nodes[i + 1]
        for other_id, prev_node, next_node, seg_lo, seg_hi in state.segments_at(node):
            if not is_interferer(path.demand_id, egress, other_id, prev_node, next_node):
                continue
            for slot in range(max(lo, seg_lo), min(hi, seg_hi) + 1):
                records.append(InterfererRecord(other_id, node, slot))
    return records


def crosstalk_slot_counts(path: CandidatePath, start_slot: int, width: int,
                          state: SpectrumState, params: ImpairmentParams) -> list:
    """Interferer incidence count per slot of the placement window."""
    counts = [0] * width
    for record in interferer_records(path, start_slot, width, state, params):
        counts[record.slot - start_slot] += 1
    return counts


def accumulated_crosstalk(path: CandidatePath, start_slot: int, width: int,
                          state: SpectrumState, params: ImpairmentParams) -> float:
    """Worst per-slot crosstalk power across the placement window.

    Incidences accumulate per slot; the admission constraint is governed by
    the worst slot of the block, each incidence contributing one
    :func:`crosstalk_power` quantum.
    """
    counts = crosstalk_slot_counts(path, start_slot, width, state, params)
    return max(counts, default=0) * crosstalk_power(params)


def nli_psd(params: ImpairmentParams, center_hz: float, bandwidth_hz: float,
            neighbors) -> float:
    """Single-span nonlinear-interference PSD at a channel's center frequency.

    ``neighbors`` iterates (center_hz, bandwidth_hz) of co-propagating
    channels on the same fiber; all channels launch at ``p_r_w``. The self
    term integrates the channel's own band, each neighbor adds its
    log-ratio term weighted by its squared PSD.
    """
    if bandwidth_hz < NLI_BANDWIDTH_FLOOR_HZ:
        warnings.warn(
            f"signal bandwidth {bandwidth_hz / 1e9:.3g} GHz is below the "
            f"{NLI_BANDWIDTH_FLOOR_HZ / 1e9:.0f} GHz validity floor of the "
            "nonlinear-interference model",
            stacklevel=2,
        )
    alpha = params.alpha_per_m
    beta2 = params.beta2_s2_per_m
    gamma = params.gamma_per_w_m
    g_self = params.p_r_w / bandwidth_hz
    prefactor = 3.0 * gamma**2 * g_self / (2.0 * math.pi * alpha * abs(beta2))
    total = g_self**2 * math.log(abs(math.pi**2 * beta2 * bandwidth_hz**2 / alpha))
    for other_center, other_bw in neighbors:
        delta = abs(center_hz - other_center)
        half = other_bw / 2.0
        if delta <= half:
            raise ValueError(
                "neighbor channel overlaps the primary in frequency; "
                "co-link channels must be spectrally disjoint"
            )
        g_other = params.p_r_w / other_bw
        total += g_other**2 * math.log((delta + half) / (delta - half))
    return prefactor * total


def nli_path_power(path: CandidatePath, start_slot: int, rho: int,
                   state: SpectrumState, params: ImpairmentParams,
                   guards: int = 0) -> float:
    """Accumulated nonlinear-interference power over all spans of a route.

    Each link contributes span_count x PSD x signal bandwidth, with the PSD
    evaluated against that link's own co-propagating channel set (the
    placement's own assignment, if already on the grid, is excluded). Guard
    slots widen the reserved block but carry no power.
    """
    width = rho + guards
    bandwidth = rho * params.slot_width_hz
    center = channel_center_hz(start_slot, width, params)
    total = 0.0
    for link, spans in zip(path.links, path.span_counts):
        neighbors = []
        for other in state.channels_on_link(link):
            if other.demand.id == path.demand_id:
                continue
            neighbors.append(
                (
                    channel_center_hz(other.start_slot, other.width, params),
                    other.demand.rho * params.slot_width_hz,
                )
            )
        total += spans * nli_psd(params, center, bandwidth, neighbors) * bandwidth
    return total


def ase_inverse_snr(m_edfa: int, params: ImpairmentParams) -> float:
    """1/SNR against local-oscillator-ASE beat noise after ``m_edfa`` amplifiers."""
    return 4.0 * m_edfa * params.ase_psd_w_per_hz * params.electrical_bandwidth_hz / params.p_r_w


def sinr(demand: Demand, path: CandidatePath, start_slot: int,
         state: SpectrumState, params: ImpairmentParams) -> SinrBreakdown:
    """Full admission evaluation of one placement against the current grid.

    Valid both before placement (the demand is not on the grid) and after
    (its own channel and segments are excluded from the interference sets).
    """
    r = params.responsivity_a_per_w
    p_lo = params.p_lo_w
    p_r = params.p_r_w
    guards = guard_slots(path, params)
    width = demand.rho + guards
    p_xt = accumulated_crosstalk(path, start_slot, width, state, params)
    p_nli = nli_path_power(path, start_slot, demand.rho, state, params, guards)
    m_edfa = path.edfa_count

    d_squared = r**2 * p_r * p_lo / 8.0
    p_ch = r**2 * p_lo * p_r / 2.0
    var_lo_ase = (r**2 / 2.0) * p_lo * m_edfa * params.ase_psd_w_per_hz * params.electrical_bandwidth_hz
    if params.beat_variance_mode == "consistent":
        var_lo_xtalk = (r**2 / 2.0) * p_lo * p_xt
        var_lo_nli = (r**2 / 2.0) * p_lo * p_nli
    else:
        var_lo_xtalk = (r**2 / 2.0) * math.sqrt(p_lo * p_xt)
        var_lo_nli = (r**2 / 2.0) * math.sqrt(p_lo * p_nli)
    var_shot = (params.electron_charge_c * r / 2.0) * (
        p_r + p_lo + p_xt + 2.0 * params.ase_psd_w_per_hz * params.optical_bandwidth_effective_hz
    )
    snr_ase = d_squared / var_lo_ase
    inverse = p_nli / p_r + p_xt / p_r + 1.0 / snr_ase
    if params.beat_variance_mode == "consistent":
        sinr_value = 1.0 / inverse
    else:
        sinr_value = d_squared / (var_lo_ase + var_lo_xtalk + var_lo_nli + var_shot)
    return SinrBreakdown(
        mode=params.beat_variance_mode,
        m_edfa=m_edfa,
        p_ch_w=p_ch,
        d_squared=d_squared,
        p_xtalk_w=p_xt,
        p_nli_w=p_nli,
        snr_ase=snr_ase,
        var_lo_ase=var_lo_ase,
        var_lo_xtalk=var_lo_xtalk,
        var_lo_nli=var_lo_nli,
        var_shot=var_shot,
        inverse_sinr_ratio_form=inverse,
        sinr=sinr_value,
    )


def admissible(breakdown: SinrBreakdown, params: ImpairmentParams) -> bool:
    return breakdown.sinr >= params.sinr_threshold


class ChannelModel:
    """Per-(demand, path) constants for incremental interference accounting.

    The sequential planner and the exact solver both need to know, for every
    pair of co-existing lightpaths, how much crosstalk and nonlinear
    interference one adds to the other. Everything position-independent is
    precomputed here once per candidate path.
    """

    __slots__ = (
        "demand_id", "rho", "width", "guards", "rank", "links",
        "ase_inverse", "self_nli", "nbr_coef", "psd_sq", "half_bw",
        "xcs", "membership", "link_spans", "clean_inverse",
    )

    def __init__(self, demand: Demand, path: CandidatePath, params: ImpairmentParams):
        self.demand_id = demand.id
        self.rho = demand.rho
        self.guards = guard_slots(path, params)
        self.width = demand.rho + self.guards
        self.rank = path.rank
        self.links = path.links
        self.ase_inverse = ase_inverse_snr(path.edfa_count, params)
        bandwidth = demand.rho * params.slot_width_hz
        g_self = params.p_r_w / bandwidth
        prefactor = (
            3.0 * params.gamma_per_w_m**2 * g_self
            / (2.0 * math.pi * params.alpha_per_m * abs(params.beta2_s2_per_m))
        )
        self_ln = math.log(
            abs(math.pi**2 * params.beta2_s2_per_m * bandwidth**2 / params.alpha_per_m)
        )
        # Position-independent own-channel NLI power over the whole route.
        self.self_nli = prefactor * g_self**2 * self_ln * path.edfa_count * bandwidth
        # Scales a neighbor's psd^2 x span-weighted log term into this
        # channel's NLI power.
        self.nbr_coef = prefactor * bandwidth
        self.psd_sq = g_self**2
        self.half_bw = bandwidth / 2.0
        self.xcs = tuple(
            (path.nodes[i], path.nodes[i + 1]) for i in range(len(path.nodes) - 1)
        )
        self.membership = {}
        for i, node in enumerate(path.nodes):
            prev_node = path.nodes[i - 1] if i > 0 else None
            next_node = path.nodes[i + 1] if i < len(path.nodes) - 1 else None
            self.membership[node] = (prev_node, next_node)
        self.link_spans = dict(zip(path.links, path.span_counts))
        self.clean_inverse = self.ase_inverse + self.self_nli / params.p_r_w

    def center_hz(self, start_slot: int, params: ImpairmentParams) -> float:
        return channel_center_hz(start_slot, self.width, params)


def crosstalk_hits(primary: ChannelModel, other: ChannelModel) -> int:
    """How many of the primary's crossconnects the other lightpath leaks at.

    Each hit contributes one incidence to every slot where the two blocks
    overlap (the caller intersects the slot ranges).
    """
    hits = 0
    for node, egress in primary.xcs:
        m = other.membership.get(node)
        if m is not None and is_interferer(primary.demand_id, egress,
                                           other.demand_id, m[0], m[1]):
            hits += 1
    return hits


def shared_span_count(a: ChannelModel, b: ChannelModel) -> int:
    """Total amplified spans of the directed links both routes traverse."""
    if len(a.link_spans) > len(b.link_spans):
        a, b = b, a
    return sum(spans for link, spans in a.link_spans.items() if link in b.link_spans)


def pairwise_nli_power(primary: ChannelModel, other: ChannelModel,
                       delta_hz: float, shared_spans: int) -> float:
    """NLI power the other channel adds onto the primary over shared spans.

    ``delta_hz`` is the center-frequency separation; co-link channels are
    spectrally disjoint, so it always exceeds the other's half bandwidth.
    """
    return (
        primary.nbr_coef * other.psd_sq * shared_spans
        * math.log((delta_hz + other.half_bw) / (delta_hz - other.half_bw))
    )


def symbol_error_prob(sinr_linear: float) -> float:
    """QPSK symbol error probability 2Q(sqrt(SINR)) (1 - Q(sqrt(SINR))/2)."""
    if sinr_linear < 0.0:
        raise ValueError("SINR must be non-negative")
    q = 0.5 * math.erfc(math.sqrt(sinr_linear) / math.sqrt(2.0))
    return 2.0 * q * (1.0 - 0.5 * q)
