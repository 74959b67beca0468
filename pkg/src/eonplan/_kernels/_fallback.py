"""Pure numpy implementations of the planner's inner-loop kernels.

These are the reference semantics for the compiled extension; the two
backends must agree (see tests). All slot indices here are 0-based; the
public API converts at the boundary.
"""

import numpy as np

BACKEND_NAME = "pure"


def feasible_starts(occ_rows: np.ndarray, width: int) -> np.ndarray:
    """0-based start slots where ``width`` contiguous slots are free on every row.

    ``occ_rows`` is a (links, n_slots) uint8 array with non-zero marking an
    occupied slot.
    """
    occ_rows = np.ascontiguousarray(occ_rows, dtype=np.uint8)
    n_slots = occ_rows.shape[1]
    if width < 1 or width > n_slots:
        return np.empty(0, dtype=np.int64)
    free = ~occ_rows.any(axis=0) if occ_rows.shape[0] else np.ones(n_slots, dtype=bool)
    window = np.lib.stride_tricks.sliding_window_view(free, width)
    return np.nonzero(window.all(axis=1))[0].astype(np.int64)


def xt_counts(segments: np.ndarray, self_demand: int, n_slots: int) -> np.ndarray:
    """Per-slot interferer incidence counts over the whole grid.

    ``segments`` is an int64 (m, 6) table with one row per (crossconnect of
    the primary path) x (lightpath segment registered at that crossconnect):
    columns are (demand, prev, next, start, end, egress), where prev/next are
    node indices of the segment's neighbors on its own route (-1 at an
    endpoint), start/end the inclusive 0-based slot block, and egress the
    primary's next-hop node index at that crossconnect. A row counts when it
    belongs to another demand and neither enters from nor leaves toward the
    primary's egress.
    """
    counts = np.zeros(n_slots, dtype=np.int64)
    segments = np.asarray(segments, dtype=np.int64)
    if segments.size == 0:
        return counts
    demand, prev, nxt, start, end, egress = segments.T
    keep = (demand != self_demand) & (prev != egress) & (nxt != egress)
    # Accumulate block increments via a difference array; cheaper than slicing
    # per row when many segments overlap.
    diff = np.zeros(n_slots + 1, dtype=np.int64)
    np.add.at(diff, start[keep], 1)
    np.add.at(diff, end[keep] + 1, -1)
    np.cumsum(diff[:-1], out=counts)
    return counts


def window_max(values: np.ndarray, width: int) -> np.ndarray:
    """Sliding maximum over every ``width``-slot window (0-based starts)."""
    values = np.asarray(values, dtype=np.int64)
    if width < 1 or width > values.shape[0]:
        return np.empty(0, dtype=np.int64)
    return np.lib.stride_tricks.sliding_window_view(values, width).max(axis=1)


def nli_neighbor_lnsum(
    pos_centers: np.ndarray,
    nbr_center: np.ndarray,
    nbr_half: np.ndarray,
    nbr_weight: np.ndarray,
) -> np.ndarray:
    """Weighted sum of ln((|df|+h)/(|df|-h)) over neighbor channels.

    One output per candidate center frequency. Neighbors whose band would
    touch or cover a candidate center (|df| <= h, impossible for co-link
    channels in a valid grid) yield +inf so the position reads as infeasible
    rather than silently wrong.
    """
    pos_centers = np.asarray(pos_centers, dtype=np.float64)
    nbr_center = np.asarray(nbr_center, dtype=np.float64)
    nbr_half = np.asarray(nbr_half, dtype=np.float64)
    nbr_weight = np.asarray(nbr_weight, dtype=np.float64)
    if pos_centers.size == 0 or nbr_center.size == 0:
        return np.zeros(pos_centers.shape[0], dtype=np.float64)
    delta = np.abs(pos_centers[:, None] - nbr_center[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (delta + nbr_half) / (delta - nbr_half)
        terms = np.log(ratio)
    terms = np.where(delta <= nbr_half, np.inf, terms)
    return terms @ nbr_weight
