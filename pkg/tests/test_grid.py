import numpy as np
import pytest

from eonplan.grid import SpectrumConflictError, SpectrumState
from eonplan.net import Demand, k_shortest_paths, normalize_distances


def place(state, topology, demand_id, src, dst, rho, start, rank=1, guards=0):
    demand = Demand(id=demand_id, source=src, destination=dst, rho=rho)
    paths = k_shortest_paths(topology, demand, rank)
    path = paths[rank - 1]
    return state.occupy(demand, path, start, rho + guards, guards), path


def test_occupy_and_queries(sixnode):
    state = SpectrumState(sixnode, 10)
    a, path = place(state, sixnode, "d1", "1", "2", 3, 1)
    assert a.end_slot == 3
    for link in path.links:
        assert state.occupied_count(link) == 3
        assert state.demand_count(link) == 1
        assert state.highest_occupied(link) == 3
    # Reverse direction unaffected.
    rev = tuple(reversed(path.links[0]))
    assert state.occupied_count(rev) == 0
    assert state.first_fit_positions(path, 3) == [4, 5, 6, 7, 8]
    assert state.first_fit_positions(path, 7) == [4]
    assert state.first_fit_positions(path, 8) == []


def test_occupy_rejections(sixnode):
    state = SpectrumState(sixnode, 10)
    _, path = place(state, sixnode, "d1", "1", "2", 3, 2)
    d2 = Demand(id="d2", source="1", destination="2", rho=4)
    p2 = k_shortest_paths(sixnode, d2, 1)[0]
    with pytest.raises(SpectrumConflictError):
        state.occupy(d2, p2, 1, 4)
    with pytest.raises(ValueError, match="already assigned"):
        state.occupy(Demand(id="d1", source="1", destination="2", rho=1), p2, 6, 1)
    with pytest.raises(ValueError, match="outside"):
        state.occupy(d2, p2, 8, 4)
    with pytest.raises(ValueError, match="outside"):
        state.occupy(d2, p2, 0, 4)
    with pytest.raises(ValueError, match="width"):
        state.occupy(d2, p2, 1, 0)
    # A failed occupy leaves no partial state behind.
    assert state.first_fit_positions(p2, 4) == [5, 6, 7]
    state.occupy(d2, p2, 5, 4)
    with pytest.raises(ValueError):
        SpectrumState(sixnode, 0)


def test_release_restores_everything(sixnode):
    state = SpectrumState(sixnode, 12)
    baseline_occ = state._occ.copy()
    _, path = place(state, sixnode, "d1", "1", "5", 4, 3)
    place(state, sixnode, "d2", "2", "3", 2, 1)
    state.release("d1")
    assert "d1" not in state.assignments
    for link in path.links:
        assert state.demand_count(link) in (0, 1)
    state.release("d2")
    assert np.array_equal(state._occ, baseline_occ)
    assert all(not segs for segs in state._node_segments.values())
    assert all(not chans for chans in state._link_channels.values())
    with pytest.raises(KeyError):
        state.release("d1")


def test_blocked_bookkeeping(sixnode):
    state = SpectrumState(sixnode, 10)
    d = Demand(id="dx", source="1", destination="2", rho=2)
    state.mark_blocked(d, "no_spectrum")
    assert state.blocked == {"dx": "no_spectrum"}
    _, _ = place(state, sixnode, "dy", "1", "2", 2, 1)
    with pytest.raises(ValueError):
        state.mark_blocked(Demand(id="dy", source="1", destination="2", rho=2), "x")


def test_segments_at_and_channels(sixnode):
    state = SpectrumState(sixnode, 10)
    _, path = place(state, sixnode, "d1", "1", "5", 2, 4)  # route 1-2-5 or 1-3-5
    mid = path.nodes[1]
    segs = state.segments_at(mid)
    assert segs == [("d1", path.nodes[0], path.nodes[2], 4, 5)]
    add = state.segments_at(path.nodes[0])
    assert add == [("d1", None, path.nodes[1], 4, 5)]
    assert state.segments_at("6") == []
    for link in path.links:
        chans = state.channels_on_link(link)
        assert len(chans) == 1 and chans[0].demand.id == "d1"
    assert state.demand_row("d1") == 0
    assert state.demand_row("nope") == -1


def test_xt_segment_table_shape(sixnode):
    state = SpectrumState(sixnode, 10)
    _, p1 = place(state, sixnode, "d1", "1", "5", 2, 1)
    d2 = Demand(id="d2", source="2", destination="4", rho=2)
    p2 = k_shortest_paths(sixnode, d2, 1)[0]
    table = state.xt_segment_table(p2)
    assert table.dtype == np.int64 and table.shape[1] == 6
    # One row per registered segment at each crossconnect of p2's route.
    expected = sum(len(state.segments_at(n)) for n in p2.nodes[:-1])
    assert table.shape[0] == expected
    empty = SpectrumState(sixnode, 10).xt_segment_table(p2)
    assert empty.shape == (0, 6)


def test_fragmentation_definition(sixnode):
    state = SpectrumState(sixnode, 10)
    link = ("1", "2")
    assert state.fragmentation(link) == 0.0  # empty: one free block
    _, path = place(state, sixnode, "d1", "1", "2", 2, 4)
    # Free: slots 1-3 and 6-10 -> 8 free, longest 5.
    assert state.fragmentation(link) == pytest.approx(1.0 - 5.0 / 8.0)
    avg = state.fragmentation_avg()
    n_links = len(sixnode.directed_links)
    assert avg == pytest.approx(state.fragmentation(link) / n_links)


def test_psi_and_objective(sixnode):
    state = SpectrumState(sixnode, 10)
    link = ("1", "2")
    assert state.psi(link, 0.5) == 0.0
    place(state, sixnode, "d1", "1", "2", 3, 1)
    # R=1, k*=3, N=10 -> 1/(10-3) scaled by the distance weight.
    assert state.psi(link, 0.5) == pytest.approx(0.5 / 7.0)
    distances = normalize_distances(sixnode)
    total = sum(state.psi(l, distances[l]) for l in sixnode.directed_links)
    assert state.objective_value(distances) == pytest.approx(total)


def test_psi_full_link_penalty(sixnode):
    state = SpectrumState(sixnode, 4)
    place(state, sixnode, "d1", "1", "2", 4, 1)
    # k* = N: penalty regime, finite but huge.
    assert state.psi(("1", "2"), 1.0) == pytest.approx(1e6)
    assert state.psi(("1", "2"), 0.25) == pytest.approx(0.25e6)


def test_metrics_fields(sixnode):
    state = SpectrumState(sixnode, 10)
    place(state, sixnode, "d1", "1", "2", 3, 1)
    state.mark_blocked(Demand(id="d2", source="1", destination="6", rho=9), "no_spectrum")
    m = state.metrics(normalize_distances(sixnode))
    assert m["served"] == 1 and m["blocked"] == 1
    assert m["blocking_probability"] == 0.5
    assert m["max_slot"] == 3
    w12 = normalize_distances(sixnode)[("1", "2")]
    assert m["dbp"] == pytest.approx(1 * w12)  # one demand on one directed link
    assert m["dbp_slots"] == pytest.approx(3 * w12)
    assert m["objective"] == state.objective_value(normalize_distances(sixnode))


def test_snapshot_round_trip(sixnode):
    state = SpectrumState(sixnode, 10)
    place(state, sixnode, "d1", "1", "5", 3, 2)
    place(state, sixnode, "d2", "1", "5", 2, 5, rank=2)
    state.mark_blocked(Demand(id="d3", source="1", destination="6", rho=9), "no_spectrum")
    snap = state.snapshot()
    assert snap["n_slots"] == 10
    assert {a["demand"] for a in snap["assignments"]} == {"d1", "d2"}
    assert snap["blocked"] == [{"demand": "d3", "reason": "no_spectrum"}]
    for link_key, runs in snap["occupancy"].items():
        assert "|" in link_key
        for start, end, owner in runs:
            assert 1 <= start <= end <= 10
            assert owner in ("d1", "d2")
    # Adjacent runs of different demands stay separate entries.
    flat = [run for runs in snap["occupancy"].values() for run in runs]
    assert any(owner == "d1" for _, _, owner in flat)
