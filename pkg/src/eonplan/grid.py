"""Spectrum grid state: slot occupancy, assignments, and grid metrics.

Slots are 1-indexed in the public API, k in {1..N}; arrays are 0-based
internally. Every link of a route carries the same contiguous block
(continuity and contiguity are enforced by construction in :meth:`occupy`),
and a slot on a directed link belongs to at most one demand.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import get_backend
from .net import CandidatePath, Demand, Topology


class SpectrumConflictError(ValueError):
    """Requested slots overlap an existing assignment."""


@dataclass(frozen=True)
class Assignment:
    demand: Demand
    path: CandidatePath
    start_slot: int
    width: int
    guard_slots: int

    @property
    def end_slot(self) -> int:
        return self.start_slot + self.width - 1


class SpectrumState:
    """Mutable allocation state over a topology's directed links."""

    def __init__(self, topology: Topology, n_slots: int):
        if not (isinstance(n_slots, int) and n_slots >= 1):
            raise ValueError("n_slots must be a positive integer")
        self.topology = topology
        self.n_slots = n_slots
        self.link_index = {link: i for i, link in enumerate(topology.directed_links)}
        n_links = len(self.link_index)
        self._occ = np.zeros((n_links, n_slots), dtype=np.uint8)
        self._owner = np.full((n_links, n_slots), -1, dtype=np.int64)
        self._demand_rows: dict = {}
        self._row_demands: list = []
        self.assignments: dict = {}
        self.blocked: dict = {}
        self._link_demands = [0] * n_links
        # Lightpath presence per node, for crosstalk accounting: one entry per
        # (node on route): [demand_row, prev_idx, next_idx, start0, end0].
        self._node_segments: dict = {i: [] for i in range(len(topology.nodes))}
        # Channels per directed link in insertion order, for interference sums.
        self._link_channels: dict = {i: {} for i in range(n_links)}

    # -- bookkeeping helpers -------------------------------------------------

    def _demand_row(self, demand_id) -> int:
        if demand_id not in self._demand_rows:
            self._demand_rows[demand_id] = len(self._row_demands)
            self._row_demands.append(demand_id)
        return self._demand_rows[demand_id]

    def _link_rows(self, path: CandidatePath) -> list:
        try:
            return [self.link_index[link] for link in path.links]
        except KeyError as exc:
            raise KeyError(f"path uses a link not in the topology: {exc}") from None

    # -- mutation --------------------------------------------------------------

    def occupy(self, demand: Demand, path: CandidatePath, start_slot: int, width: int,
               guard_slots: int = 0) -> Assignment:
        """Reserve ``width`` slots from ``start_slot`` on every link of ``path``.

        Raises on bad ranges or conflicts without partial mutation.
        """
        if demand.id in self.assignments:
            raise ValueError(f"demand {demand.id!r} is already assigned")
        if width < 1:
            raise ValueError("width must be at least 1")
        if start_slot < 1 or start_slot + width - 1 > self.n_slots:
            raise ValueError(
                f"slots [{start_slot}, {start_slot + width - 1}] fall outside 1..{self.n_slots}"
            )
        rows = self._link_rows(path)
        lo, hi = start_slot - 1, start_slot - 1 + width
        block = self._occ[rows, lo:hi]
        if block.any():
            offender = next(
                (r, s)
                for r in rows
                for s in range(lo, hi)
                if self._occ[r, s]
            )
            raise SpectrumConflictError(
                f"slots [{start_slot}, {start_slot + width - 1}] on link "
                f"{self.topology.directed_links[offender[0]]} already occupied"
            )
        drow = self._demand_row(demand.id)
        self._occ[rows, lo:hi] = 1
        self._owner[rows, lo:hi] = drow
        for r in rows:
            self._link_demands[r] += 1
        assignment = Assignment(demand, path, start_slot, width, guard_slots)
        self.assignments[demand.id] = assignment
        node_idx = self.topology.node_index
        nodes = path.nodes
        for i, node in enumerate(nodes):
            prev_idx = node_idx[nodes[i - 1]] if i > 0 else -1
            next_idx = node_idx[nodes[i + 1]] if i < len(nodes) - 1 else -1
            self._node_segments[node_idx[node]].append([drow, prev_idx, next_idx, lo, hi - 1])
        for r in rows:
            self._link_channels[r][demand.id] = assignment
        return assignment

    def release(self, demand_id) -> None:
        assignment = self.assignments.pop(demand_id, None)
        if assignment is None:
            raise KeyError(f"demand {demand_id!r} has no assignment")
        rows = self._link_rows(assignment.path)
        lo, hi = assignment.start_slot - 1, assignment.end_slot
        self._occ[rows, lo:hi] = 0
        self._owner[rows, lo:hi] = -1
        drow = self._demand_rows[demand_id]
        for r in rows:
            self._link_demands[r] -= 1
            del self._link_channels[r][demand_id]
        node_idx = self.topology.node_index
        for node in assignment.path.nodes:
            segs = self._node_segments[node_idx[node]]
            for i, seg in enumerate(segs):
                if seg[0] == drow:
                    del segs[i]
                    break

    def mark_blocked(self, demand: Demand, reason: str) -> None:
        if demand.id in self.assignments:
            raise ValueError(f"demand {demand.id!r} is assigned, cannot block")
        self.blocked[demand.id] = reason

    # -- queries ---------------------------------------------------------------

    def occupancy_rows(self, path: CandidatePath) -> np.ndarray:
        """(links, n_slots) uint8 occupancy view copy for the path's links."""
        return self._occ[self._link_rows(path)]

    def first_fit_positions(self, path: CandidatePath, width: int) -> list:
        """Ascending 1-based start slots with ``width`` free on every path link."""
        if width < 1:
            raise ValueError("width must be at least 1")
        starts0 = get_backend().feasible_starts(self.occupancy_rows(path), width)
        return [int(s) + 1 for s in starts0]

    def demand_row(self, demand_id) -> int:
        """Stable integer id of a demand in this state; -1 if never placed."""
        return self._demand_rows.get(demand_id, -1)

    def xt_segment_table(self, path: CandidatePath) -> np.ndarray:
        """Interference candidate table for the kernel crosstalk count.

        One row per lightpath segment registered at each crossconnect of
        ``path`` (its add node and every transit node), with the primary's
        egress at that crossconnect in the last column.
        """
        node_idx = self.topology.node_index
        rows = []
        nodes = path.nodes
        for i in range(len(nodes) - 1):
            egress = node_idx[nodes[i + 1]]
            for seg in self._node_segments[node_idx[nodes[i]]]:
                rows.append(seg + [egress])
        if not rows:
            return np.empty((0, 6), dtype=np.int64)
        return np.asarray(rows, dtype=np.int64)

    def channels_on_link(self, link) -> list:
        """Assignments crossing a directed link, in insertion order."""
        return list(self._link_channels[self.link_index[link]].values())

    def segments_at(self, node: str) -> list:
        """Lightpath segments registered at a node, as
        (demand_id, prev_node, next_node, start_slot, end_slot) with 1-based
        slots and None for a missing neighbor (add/drop end)."""
        nodes = self.topology.nodes
        out = []
        for drow, prev_idx, next_idx, lo, hi in self._node_segments[self.topology.node_index[node]]:
            out.append(
                (
                    self._row_demands[drow],
                    nodes[prev_idx] if prev_idx >= 0 else None,
                    nodes[next_idx] if next_idx >= 0 else None,
                    lo + 1,
                    hi + 1,
                )
            )
        return out

    def occupied_count(self, link) -> int:
        return int(self._occ[self.link_index[link]].sum())

    def demand_count(self, link) -> int:
        """R: number of demands routed across the directed link."""
        return self._link_demands[self.link_index[link]]

    def highest_occupied(self, link) -> int:
        """k*: highest occupied slot index on the link, 0 when empty."""
        row = self._occ[self.link_index[link]]
        hits = np.nonzero(row)[0]
        return int(hits[-1]) + 1 if hits.size else 0

    def fragmentation(self, link) -> float:
        """1 - (largest free block / total free); 0.0 for a full link."""
        row = self._occ[self.link_index[link]]
        free = int(row.size - row.sum())
        if free == 0:
            return 0.0
        longest = run = 0
        for occupied in row:
            run = 0 if occupied else run + 1
            longest = max(longest, run)
        return 1.0 - longest / free

    def fragmentation_avg(self) -> float:
        links = self.topology.directed_links
        return sum(self.fragmentation(link) for link in links) / len(links)

    def psi(self, link, distance: float) -> float:
        """Distance-weighted congestion index of one directed link.

        R/(N - k*) scaled by ``distance``; when the link's top slot is taken
        (k* = N) the denominator collapses and a 1e6 * R * distance penalty
        stands in, keeping the objective finite but strongly discouraging
        full links.
        """
        r = self.demand_count(link)
        if r == 0:
            return 0.0
        k_star = self.highest_occupied(link)
        if k_star >= self.n_slots:
            return 1e6 * r * distance
        return r / (self.n_slots - k_star) * distance

    def objective_value(self, distances: dict) -> float:
        """Sum of psi over directed links under the given distance weights."""
        return sum(self.psi(link, distances[link]) for link in self.topology.directed_links)

    def metrics(self, distances: dict) -> dict:
        """Plan-quality summary of the current grid."""
        links = self.topology.directed_links
        served = len(self.assignments)
        blocked = len(self.blocked)
        dbp = sum(self.demand_count(link) * distances[link] for link in links)
        dbp_slots = sum(self.occupied_count(link) * distances[link] for link in links)
        return {
            "served": served,
            "blocked": blocked,
            "blocking_probability": blocked / (served + blocked) if served + blocked else 0.0,
            "fragmentation_avg": self.fragmentation_avg(),
            "dbp": dbp,
            "dbp_slots": dbp_slots,
            "max_slot": max((self.highest_occupied(link) for link in links), default=0),
            "objective": self.objective_value(distances),
        }

    # -- serialization -----------------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-able dump of the grid for reports and the plan validator."""
        assignments = []
        for assignment in self.assignments.values():
            demand = assignment.demand
            assignments.append(
                {
                    "demand": demand.id,
                    "source": demand.source,
                    "destination": demand.destination,
                    "rho": demand.rho,
                    "path": list(assignment.path.nodes),
                    "rank": assignment.path.rank,
                    "start_slot": assignment.start_slot,
                    "width": assignment.width,
                    "guard_slots": assignment.guard_slots,
                }
            )
        blocked = [
            {"demand": demand_id, "reason": reason} for demand_id, reason in self.blocked.items()
        ]
        intervals = {}
        for link in self.topology.directed_links:
            row = self._owner[self.link_index[link]]
            runs = []
            start = None
            for slot in range(self.n_slots):
                if row[slot] >= 0 and (start is None or row[slot] != row[slot - 1]):
                    if start is not None:
                        runs.append([start + 1, slot, self._row_demands[row[slot - 1]]])
                    start = slot
                elif row[slot] < 0 and start is not None:
                    runs.append([start + 1, slot, self._row_demands[row[slot - 1]]])
                    start = None
            if start is not None:
                runs.append([start + 1, self.n_slots, self._row_demands[row[-1]]])
            if runs:
                intervals["|".join(link)] = runs
        return {
            "topology": self.topology.name,
            "n_slots": self.n_slots,
            "assignments": assignments,
            "blocked": blocked,
            "occupancy": intervals,
        }
