"""Demand ordering strategies for the sequential planner.

Two orders are provided: most-slots-first (MSF), which sorts by request size
alone, and most-congested-demands-first (MCDF), which scores each demand by
how much contention its candidate routes will meet, discounted by route
delay, and serves the hardest demands first. All ties resolve through demand
id, so a given demand set has exactly one order.
"""

from .net import path_delay


def msf_order(demands) -> list:
    """Demands by descending slot request, ties by ascending id."""
    return sorted(demands, key=lambda d: (-d.rho, d.id))


def congestion_metric(demands, paths_by_demand) -> dict:
    """Per directed link: total rho of demands that could route across it.

    A demand loads a link when any of its candidate paths uses the link,
    regardless of which path the planner will eventually pick.
    """
    loads: dict = {}
    for demand in demands:
        links = set()
        for path in paths_by_demand[demand.id]:
            links.update(path.links)
        for link in links:
            loads[link] = loads.get(link, 0.0) + demand.rho
    return loads


def mcdf_order(demands, paths_by_demand, *, strict_k: int | None = None) -> list:
    """Demands by descending congestion-delay score.

    Each candidate path k of a demand scores L_pk * (1 - delay_k/delay_max),
    where L_pk sums the congestion metric over the path's links and delay_max
    is the longest candidate path in the whole instance. A demand's score
    averages its paths' scores, over the actual path count by default or
    over ``strict_k`` when a fixed divisor is wanted. Ties resolve by
    descending rho, then ascending id.
    """
    loads = congestion_metric(demands, paths_by_demand)
    delay_max = max(
        path_delay(path) for demand in demands for path in paths_by_demand[demand.id]
    )
    scores = {}
    for demand in demands:
        paths = paths_by_demand[demand.id]
        total = 0.0
        for path in paths:
            l_pk = sum(loads[link] for link in path.links)
            total += l_pk * (1.0 - path_delay(path) / delay_max)
        divisor = strict_k if strict_k is not None else len(paths)
        scores[demand.id] = total / divisor
    return sorted(demands, key=lambda d: (-scores[d.id], -d.rho, d.id))


ORDERINGS = ("msf", "mcdf")


def order_demands(name: str, demands, paths_by_demand, *, strict_k: int | None = None) -> list:
    if name == "msf":
        return msf_order(demands)
    if name == "mcdf":
        return mcdf_order(demands, paths_by_demand, strict_k=strict_k)
    raise ValueError(f"unknown ordering {name!r}; expected one of {ORDERINGS}")
