"""Network model: topology loading, demands, and candidate path computation.

Link lengths are kilometres. Node ids are normalized to strings at load time
so that every tie-break in the planner (path ranking, demand ordering) is a
plain lexicographic comparison and therefore reproducible across runs.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import networkx as nx


@dataclass(frozen=True)
class Demand:
    """A connection request for ``rho`` contiguous spectrum slots."""

    id: object
    source: str
    destination: str
    rho: int

    def __post_init__(self) -> None:
        if self.source == self.destination:
            raise ValueError(f"demand {self.id!r}: source equals destination")
        if not (isinstance(self.rho, int) and self.rho >= 1):
            raise ValueError(f"demand {self.id!r}: rho must be a positive integer")


@dataclass(frozen=True)
class CandidatePath:
    """One ranked candidate route for a demand.

    ``span_counts`` holds the amplified-span count per link and
    ``edfa_count`` their sum: one in-line amplifier terminates every span,
    which is what the ASE accumulation along the path sees.
    """

    demand_id: object
    rank: int
    nodes: tuple
    links: tuple
    link_lengths_km: tuple
    total_km: float
    span_counts: tuple
    edfa_count: int

    @property
    def hop_count(self) -> int:
        return len(self.links)

    @property
    def crossconnects(self) -> tuple:
        """Switching nodes where the path picks up crosstalk: all but the drop."""
        return self.nodes[:-1]


def span_count(length_km: float, span_length_km: float) -> int:
    """Number of amplified spans on one link: ceil(length / span length)."""
    if length_km <= 0 or span_length_km <= 0:
        raise ValueError("lengths must be positive")
    return math.ceil(length_km / span_length_km)


def path_delay(path: CandidatePath) -> float:
    """Propagation-delay proxy: total route length in km."""
    return path.total_km


class Topology:
    """Undirected weighted graph with deterministic link/path enumeration."""

    def __init__(self, name: str, nodes, links):
        self.name = name
        self.nodes = tuple(str(n) for n in nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")
        if len(self.nodes) < 2:
            raise ValueError("topology needs at least two nodes")
        node_set = set(self.nodes)
        self._lengths: dict = {}
        for a, b, km in links:
            a, b = str(a), str(b)
            if a not in node_set or b not in node_set:
                raise ValueError(f"link ({a}, {b}) references unknown node")
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (isinstance(km, (int, float)) and math.isfinite(km) and km > 0):
                raise ValueError(f"link ({a}, {b}) has invalid length {km!r}")
            if (a, b) in self._lengths or (b, a) in self._lengths:
                raise ValueError(f"duplicate link between {a} and {b}")
            self._lengths[(a, b)] = float(km)
            self._lengths[(b, a)] = float(km)
        self._graph = nx.Graph()
        self._graph.add_nodes_from(self.nodes)
        for (a, b), km in self._lengths.items():
            self._graph.add_edge(a, b, length_km=km)
        if self._graph.number_of_edges() == 0 or not nx.is_connected(self._graph):
            raise ValueError("topology must be connected")
        self.node_index = {n: i for i, n in enumerate(self.nodes)}
        self._directed = tuple(sorted(self._lengths))
        self._path_cache: dict = {}

    @property
    def directed_links(self) -> tuple:
        """All directed (tail, head) pairs, sorted."""
        return self._directed

    def link_length(self, tail: str, head: str) -> float:
        try:
            return self._lengths[(tail, head)]
        except KeyError:
            raise KeyError(f"no link between {tail!r} and {head!r}") from None

    def has_link(self, tail: str, head: str) -> bool:
        return (tail, head) in self._lengths

    @property
    def max_link_km(self) -> float:
        return max(self._lengths.values())

    def neighbors(self, node: str) -> tuple:
        return tuple(sorted(self._graph.neighbors(node)))

    def simple_paths(self, source: str, destination: str) -> tuple:
        """All simple paths source->destination, sorted by the deterministic
        key (total km, hop count, node-id sequence). Cached."""
        key = (source, destination)
        if key not in self._path_cache:
            if source not in self.node_index or destination not in self.node_index:
                raise KeyError(f"unknown endpoint in pair {key!r}")
            found = []
            for nodes in nx.all_simple_paths(self._graph, source, destination):
                total = sum(self._lengths[(nodes[i], nodes[i + 1])] for i in range(len(nodes) - 1))
                found.append((total, len(nodes) - 1, tuple(nodes)))
            found.sort()
            self._path_cache[key] = tuple(found)
        return self._path_cache[key]


def k_shortest_paths(
    topology: Topology,
    demand: Demand,
    k: int,
    span_length_km: float = 100.0,
) -> tuple:
    """The demand's K shortest loop-free routes as ranked CandidatePaths.

    Ranks are 1-based in the sort order (total km, hop count, node sequence).
    Fewer than ``k`` paths may exist; all that do are returned.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    out = []
    for rank, (total, _hops, nodes) in enumerate(topology.simple_paths(demand.source, demand.destination)[:k], start=1):
        links = tuple((nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1))
        lengths = tuple(topology.link_length(a, b) for a, b in links)
        spans = tuple(span_count(km, span_length_km) for km in lengths)
        out.append(
            CandidatePath(
                demand_id=demand.id,
                rank=rank,
                nodes=tuple(nodes),
                links=links,
                link_lengths_km=lengths,
                total_km=total,
                span_counts=spans,
                edfa_count=sum(spans),
            )
        )
    return tuple(out)


def normalize_distances(topology: Topology) -> dict:
    """Per directed link: length divided by the longest link in the network."""
    longest = topology.max_link_km
    return {link: topology.link_length(*link) / longest for link in topology.directed_links}


def load_topology(source) -> Topology:
    """Load a topology from a dict, a JSON string, or a JSON file path.

    Expected shape::

        {"name": "...", "nodes": ["1", "2", ...],
         "links": [{"a": "1", "b": "2", "length_km": 1100}, ...]}
    """
    if isinstance(source, Topology):
        return source
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    else:
        doc = json.loads(source)
    if not isinstance(doc, dict) or "nodes" not in doc or "links" not in doc:
        raise ValueError("topology document must contain 'nodes' and 'links'")
    links = []
    for entry in doc["links"]:
        try:
            links.append((entry["a"], entry["b"], entry["length_km"]))
        except (TypeError, KeyError) as exc:
            raise ValueError(f"malformed link entry: {entry!r}") from exc
    return Topology(doc.get("name", "unnamed"), doc["nodes"], links)


def load_demands(source) -> list:
    """Load demands from a dict/JSON with a top-level ``demands`` list."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        with open(source, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    else:
        doc = json.loads(source)
    entries = doc["demands"] if isinstance(doc, dict) else doc
    demands = []
    seen = set()
    for entry in entries:
        demand = Demand(
            id=entry["id"],
            source=str(entry["source"]),
            destination=str(entry["destination"]),
            rho=int(entry["rho"]),
        )
        if demand.id in seen:
            raise ValueError(f"duplicate demand id {demand.id!r}")
        seen.add(demand.id)
        demands.append(demand)
    return demands
