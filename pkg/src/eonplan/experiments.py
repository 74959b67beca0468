"""Experiment harness: demand generation, batch runs, reports, validation.

A run writes into its output directory:

* ``manifest.json``  - the resolved experiment spec and parameter echo
* ``results.csv``    - one row per (replication x variant); fully deterministic
* ``aggregates.csv`` - means/stds grouped over replications; deterministic
* ``runtimes.csv``   - wall-clock per row; exempt from determinism
* ``dumps/``         - one grid snapshot per planning run (optional)
* ``errors.json``    - machine-readable failures, only when something failed

Byte-identical reruns: results.csv, aggregates.csv, the manifest, and every
dump depend only on the spec (seeds included), never on wall-clock, so two
runs of the same spec produce identical bytes. Timing lives in
runtimes.csv only.
"""

import csv
import json
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import exact as exact_mod
from . import phys
from .grid import SpectrumState
from .net import (
    CandidatePath,
    Demand,
    k_shortest_paths,
    load_demands,
    load_topology,
    span_count,
)
from .ordering import ORDERINGS
from .params import load_params
from .planner import POLICIES, final_sinr_audit, run_plan

MODES = ("plan", "exact", "gap-study", "sweep")

# Bump when a report column or dump key changes meaning; written into the
# manifest and every dump so old outputs stay identifiable.
SCHEMA_VERSION = 1

# Served demands whose final SINR lands below threshold x (1 - this slack)
# count as violations; the slack absorbs float noise between the incremental
# admission ledger and the from-scratch audit.
_AUDIT_SLACK = 1e-9


@dataclass
class ExperimentSpec:
    mode: str
    topology: object
    params: object
    n_slots: int
    out_dir: object
    demand_counts: tuple = (10,)
    rho: str = "uniform:2-5"
    replications: int = 20
    base_seed: int = 1
    k_paths: int = 3
    orderings: tuple = ("msf",)
    policies: tuple = ("proposed",)
    impairments: tuple = (True,)
    demands_file: object = None
    strict_k: int | None = None
    exact_max_nodes: int | None = None
    exact_max_seconds: float | None = None
    seed_incumbent: bool = True
    dump_states: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.demand_counts = tuple(int(c) for c in self.demand_counts)
        if not self.demand_counts or any(c < 1 for c in self.demand_counts):
            raise ValueError("demand_counts must be positive")
        self.orderings = tuple(self.orderings)
        for ordering in self.orderings:
            if ordering not in ORDERINGS:
                raise ValueError(f"unknown ordering {ordering!r}")
        self.policies = tuple(self.policies)
        for policy in self.policies:
            if policy not in POLICIES:
                raise ValueError(f"unknown policy {policy!r}")
        self.impairments = tuple(bool(i) for i in self.impairments)
        if self.replications < 1:
            raise ValueError("replications must be positive")
        parse_rho_spec(self.rho)  # fail fast on bad syntax


def parse_rho_spec(spec: str):
    """Parse 'fixed:K' or 'uniform:LO-HI' into a sampler(rng) -> int."""
    try:
        kind, _, arg = spec.partition(":")
        if kind == "fixed":
            value = int(arg)
            if value < 1:
                raise ValueError
            return lambda rng: value
        if kind == "uniform":
            lo_s, _, hi_s = arg.partition("-")
            lo, hi = int(lo_s), int(hi_s)
            if not 1 <= lo <= hi:
                raise ValueError
            return lambda rng: rng.randint(lo, hi)
    except (ValueError, TypeError):
        pass
    raise ValueError(
        f"bad rho spec {spec!r}; expected 'fixed:K' or 'uniform:LO-HI'"
    )


def generate_demands(topology, count: int, rho_spec: str, seed: int) -> list:
    """Uniformly random demand set: (s, d) over ordered pairs, rho per spec.

    Pairs are drawn with replacement, so hot s-d pairs can repeat. Ids are
    1..count in draw order.
    """
    sampler = parse_rho_spec(rho_spec)
    rng = random.Random(seed)
    nodes = topology.nodes
    pairs = [(s, t) for s in nodes for t in nodes if s != t]
    demands = []
    for i in range(1, count + 1):
        s, t = pairs[rng.randrange(len(pairs))]
        demands.append(Demand(id=i, source=s, destination=t, rho=sampler(rng)))
    return demands


def _replication_seed(base_seed: int, count: int, replication: int) -> int:
    # Distinct, stable streams per (count, replication) point.
    return base_seed + 7919 * count + replication


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(path: Path, fieldnames: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(name)) for name in fieldnames])


def _aggregate(rows: list, group_fields: list, skip_fields: set) -> tuple:
    """Group rows and average every numeric field; returns (fieldnames, rows)."""
    numeric: list = []
    for row in rows:
        for key, value in row.items():
            if key in group_fields or key in skip_fields or key in numeric:
                continue
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                numeric.append(key)
    groups: dict = {}
    for row in rows:
        key = tuple(row.get(f) for f in group_fields)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        bucket = groups[key]
        agg = dict(zip(group_fields, key))
        agg["n"] = len(bucket)
        for name in numeric:
            values = [
                row[name]
                for row in bucket
                if isinstance(row.get(name), (int, float)) and not isinstance(row.get(name), bool)
            ]
            if not values:
                agg[f"mean_{name}"] = None
                agg[f"std_{name}"] = None
                continue
            mean = sum(values) / len(values)
            # Sample std (n - 1); a single replication has no spread to report.
            if len(values) > 1:
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
            else:
                var = 0.0
            agg[f"mean_{name}"] = mean
            agg[f"std_{name}"] = var**0.5
        out.append(agg)
    fields = list(group_fields) + ["n"]
    for name in numeric:
        fields += [f"mean_{name}", f"std_{name}"]
    return fields, out


def _audit_fields(result, params) -> dict:
    audit = final_sinr_audit(result, params)
    served = len(audit)
    floor = params.sinr_threshold * (1.0 - _AUDIT_SLACK)
    violations = sum(1 for b in audit.values() if b.sinr < floor)
    return {
        "min_final_sinr_db": min((b.sinr_db for b in audit.values()), default=None),
        "sinr_violations": violations,
        "violation_fraction": violations / served if served else 0.0,
    }


def _dump_plan(out_path: Path, spec: ExperimentSpec, context: dict, result, params) -> None:
    audit = final_sinr_audit(result, params)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "meta": {
            "mode": spec.mode,
            "ordering": result.ordering,
            "policy": result.policy,
            "impairments": result.impairments,
            "k_paths": result.k_paths,
            "n_slots": result.n_slots,
            **context,
        },
        "order": [str(i) for i in result.order],
        "snapshot": result.state.snapshot(),
        "final_sinr_db": {str(k): v.sinr_db for k, v in audit.items()},
        "outcomes": [
            {
                "demand": str(o.demand_id),
                "assigned": o.assigned,
                "path_rank": o.path_rank,
                "start_slot": o.start_slot,
                "width": o.width,
                "reason": o.reason,
                "admission_sinr_db": o.breakdown.sinr_db if o.breakdown else None,
            }
            for o in result.outcomes.values()
        ],
    }
    with open(out_path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _demand_sets(spec: ExperimentSpec, topology) -> list:
    """[(count, replication, seed, demands)] for every replication point."""
    if spec.demands_file is not None:
        demands = load_demands(spec.demands_file)
        return [(len(demands), 0, spec.base_seed, demands)]
    points = []
    for count in spec.demand_counts:
        for rep in range(spec.replications):
            seed = _replication_seed(spec.base_seed, count, rep)
            points.append((count, rep, seed, None))
    return points


def run_experiment(spec: ExperimentSpec) -> dict:
    """Execute the spec and write all reports; returns a summary."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    topology = load_topology(spec.topology)
    params = load_params(spec.params)

    rows: list = []
    runtime_rows: list = []
    errors: list = []
    dump_dir = out_dir / "dumps"
    if spec.dump_states and spec.mode in ("plan", "sweep"):
        dump_dir.mkdir(exist_ok=True)

    base_key = {
        "mode": spec.mode,
        "topology": topology.name,
        "n_slots": spec.n_slots,
        "k_paths": spec.k_paths,
    }

    for count, rep, seed, preset in _demand_sets(spec, topology):
        demands = preset if preset is not None else generate_demands(
            topology, count, spec.rho, seed
        )
        point_key = {**base_key, "n_demands": count, "replication": rep, "seed": seed}
        if spec.mode in ("plan", "sweep"):
            for ordering in spec.orderings:
                for policy in spec.policies:
                    for impairments in spec.impairments:
                        context = {
                            **point_key,
                            "ordering": ordering,
                            "policy": policy,
                            "impairments": impairments,
                        }
                        started = time.perf_counter()
                        try:
                            result = run_plan(
                                topology, demands, params, spec.n_slots,
                                k_paths=spec.k_paths, ordering=ordering,
                                policy=policy, impairments=impairments,
                                strict_k=spec.strict_k,
                            )
                        except Exception as exc:  # recorded, run continues
                            errors.append({**context, "error": repr(exc)})
                            continue
                        elapsed_ms = (time.perf_counter() - started) * 1e3
                        blocked_reasons = [
                            o.reason for o in result.outcomes.values() if not o.assigned
                        ]
                        row = {
                            **context,
                            **result.metrics,
                            "blocked_no_spectrum": blocked_reasons.count("no_spectrum"),
                            "blocked_sinr": blocked_reasons.count("sinr"),
                            **_audit_fields(result, params),
                        }
                        rows.append(row)
                        runtime_rows.append({**context, "runtime_ms": elapsed_ms})
                        if spec.dump_states:
                            name = (
                                f"plan_c{count}_r{rep}_{ordering}_{policy}_"
                                f"{'imp' if impairments else 'noimp'}.json"
                            )
                            _dump_plan(dump_dir / name, spec, context, result, params)
        elif spec.mode == "exact":
            impairments = spec.impairments[0]
            context = {**point_key, "impairments": impairments}
            started = time.perf_counter()
            try:
                result = exact_mod.exact_solve(
                    topology, demands, params, spec.n_slots,
                    k_paths=spec.k_paths, impairments=impairments,
                    limits=exact_mod.ExactLimits(
                        max_nodes=spec.exact_max_nodes,
                        max_seconds=spec.exact_max_seconds,
                    ),
                )
            except Exception as exc:
                errors.append({**context, "error": repr(exc)})
                continue
            elapsed_ms = (time.perf_counter() - started) * 1e3
            rows.append(
                {
                    **context,
                    "objective": result.objective,
                    "status": result.status,
                    "nodes_explored": result.nodes_explored,
                    "proven_optimal": result.proven_optimal,
                }
            )
            runtime_rows.append({**context, "runtime_ms": elapsed_ms})
        elif spec.mode == "gap-study":
            impairments = spec.impairments[0]
            heuristics = {}
            seed_assignment = None
            for ordering in spec.orderings:
                try:
                    plan = run_plan(
                        topology, demands, params, spec.n_slots,
                        k_paths=spec.k_paths, ordering=ordering,
                        policy="proposed", impairments=impairments,
                        strict_k=spec.strict_k,
                    )
                except Exception as exc:
                    errors.append({**point_key, "ordering": ordering, "error": repr(exc)})
                    continue
                heuristics[ordering] = plan
                if spec.seed_incumbent and seed_assignment is None and plan.metrics["blocked"] == 0:
                    seed_assignment = {
                        a.demand.id: {"path_rank": a.path.rank, "start_slot": a.start_slot}
                        for a in plan.state.assignments.values()
                    }
            context = {**point_key, "impairments": impairments}
            started = time.perf_counter()
            try:
                exact_result = exact_mod.exact_solve(
                    topology, demands, params, spec.n_slots,
                    k_paths=spec.k_paths, impairments=impairments,
                    limits=exact_mod.ExactLimits(
                        max_nodes=spec.exact_max_nodes,
                        max_seconds=spec.exact_max_seconds,
                    ),
                    seed_assignment=seed_assignment,
                )
            except Exception as exc:
                errors.append({**context, "error": repr(exc)})
                continue
            exact_ms = (time.perf_counter() - started) * 1e3
            runtime_rows.append({**context, "ordering": "", "runtime_ms": exact_ms})
            for ordering, plan in heuristics.items():
                usable = (
                    exact_result.proven_optimal
                    and plan.metrics["blocked"] == 0
                    and exact_result.objective is not None
                )
                rows.append(
                    {
                        **context,
                        "ordering": ordering,
                        "heuristic_objective": plan.objective,
                        "heuristic_blocked": plan.metrics["blocked"],
                        "exact_objective": exact_result.objective,
                        "exact_status": exact_result.status,
                        "exact_nodes": exact_result.nodes_explored,
                        "gap_percent": exact_mod.optimality_gap(
                            plan.objective, exact_result.objective
                        ) if usable else None,
                    }
                )

    fieldnames = _result_fields(spec.mode)
    rows.sort(key=lambda r: tuple(str(r.get(f)) for f in fieldnames))
    _write_csv(out_dir / "results.csv", fieldnames, rows)

    group_fields = [
        f for f in fieldnames
        if f in ("mode", "topology", "n_slots", "k_paths", "n_demands",
                 "ordering", "policy", "impairments")
    ]
    agg_fields, agg_rows = _aggregate(rows, group_fields, {"replication", "seed"})
    _write_csv(out_dir / "aggregates.csv", agg_fields, agg_rows)

    runtime_fields = [f for f in fieldnames if f in runtime_rows[0]] + ["runtime_ms"] if runtime_rows else ["runtime_ms"]
    _write_csv(out_dir / "runtimes.csv", runtime_fields, runtime_rows)

    # out_dir is where the manifest lives, not an input; recording it would
    # make otherwise-identical reruns differ byte for byte.
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "spec": {
            key: (str(value) if isinstance(value, Path) else value)
            for key, value in asdict(spec).items()
            if key != "out_dir"
        },
        "topology": topology.name,
        "params": params.as_dict(),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")

    if errors:
        with open(out_dir / "errors.json", "w", encoding="utf-8") as handle:
            json.dump(errors, handle, indent=2, sort_keys=True)
            handle.write("\n")

    return {
        "rows": rows,
        "aggregates": agg_rows,
        "errors": errors,
        "out_dir": out_dir,
        "files": sorted(p.name for p in out_dir.iterdir() if p.is_file()),
    }


def _result_fields(mode: str) -> list:
    common = ["mode", "topology", "n_slots", "k_paths", "n_demands", "replication", "seed"]
    if mode in ("plan", "sweep"):
        return common + [
            "ordering", "policy", "impairments",
            "served", "blocked", "blocked_no_spectrum", "blocked_sinr",
            "blocking_probability", "fragmentation_avg", "dbp", "dbp_slots",
            "max_slot", "objective",
            "min_final_sinr_db", "sinr_violations", "violation_fraction",
        ]
    if mode == "exact":
        return common + ["impairments", "objective", "status", "nodes_explored", "proven_optimal"]
    if mode == "gap-study":
        return common + [
            "impairments", "ordering",
            "heuristic_objective", "heuristic_blocked",
            "exact_objective", "exact_status", "exact_nodes", "gap_percent",
        ]
    raise ValueError(f"unknown mode {mode!r}")


def validate_plan(topology, params, dump) -> dict:
    """Re-check a dumped plan against every constraint the planner claims.

    Verifies route validity, slot ranges, guard accounting, non-overlap (by
    rebuilding the grid), occupancy-table consistency, and, when the dump
    was planned with impairments on, the final-state SINR of every served
    demand. Returns a report dict; ``ok`` is True when no violations were
    found.
    """
    topology = load_topology(topology)
    params = load_params(params)
    if isinstance(dump, (str, Path)):
        with open(dump, "r", encoding="utf-8") as handle:
            dump = json.load(handle)
    snapshot = dump["snapshot"] if "snapshot" in dump else dump
    meta = dump.get("meta", {})
    impairments = bool(meta.get("impairments", False))
    n_slots = int(snapshot["n_slots"])
    violations = []
    state = SpectrumState(topology, n_slots)
    entries = []
    for entry in snapshot.get("assignments", []):
        demand = Demand(
            id=entry["demand"], source=str(entry["source"]),
            destination=str(entry["destination"]), rho=int(entry["rho"]),
        )
        nodes = [str(n) for n in entry["path"]]
        bad_route = (
            len(nodes) < 2
            or nodes[0] != demand.source
            or nodes[-1] != demand.destination
            or len(set(nodes)) != len(nodes)
            or any(not topology.has_link(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1))
        )
        if bad_route:
            violations.append({"category": "route", "demand": str(demand.id),
                               "detail": f"invalid path {nodes}"})
            continue
        paths = k_shortest_paths(topology, demand, max(int(entry.get("rank", 1)), 1),
                                 params.span_length_km)
        path = next((p for p in paths if list(p.nodes) == nodes), None)
        if path is None:
            # Path is real but not among the first K; rebuild it directly so
            # the physics checks still run.
            links = tuple((nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1))
            lengths = tuple(topology.link_length(a, b) for a, b in links)
            spans = tuple(span_count(km, params.span_length_km) for km in lengths)
            path = CandidatePath(
                demand_id=demand.id, rank=int(entry.get("rank", 0)), nodes=tuple(nodes),
                links=links, link_lengths_km=lengths, total_km=sum(lengths),
                span_counts=spans, edfa_count=sum(spans),
            )
        start, width = int(entry["start_slot"]), int(entry["width"])
        guards = phys.guard_slots(path, params)
        if width != demand.rho + guards or int(entry.get("guard_slots", guards)) != guards:
            violations.append({"category": "width", "demand": str(demand.id),
                               "detail": f"width {width} != rho {demand.rho} + guards {guards}"})
        if start < 1 or start + width - 1 > n_slots:
            violations.append({"category": "range", "demand": str(demand.id),
                               "detail": f"slots [{start}, {start + width - 1}] outside 1..{n_slots}"})
            continue
        try:
            state.occupy(demand, path, start, width, guards)
            entries.append((demand, path, start))
        except Exception as exc:
            violations.append({"category": "overlap", "demand": str(demand.id),
                               "detail": str(exc)})
    rebuilt = state.snapshot()["occupancy"]
    dumped = snapshot.get("occupancy")
    if dumped is not None:
        norm = lambda occ: {
            link: [[int(a), int(b), str(d)] for a, b, d in runs]
            for link, runs in occ.items()
        }
        if norm(rebuilt) != norm(dumped):
            violations.append({"category": "occupancy", "demand": "",
                               "detail": "rebuilt occupancy differs from dump"})
    sinr_report = {}
    if impairments:
        floor = params.sinr_threshold * (1.0 - _AUDIT_SLACK)
        for demand, path, start in entries:
            breakdown = phys.sinr(demand, path, start, state, params)
            sinr_report[str(demand.id)] = breakdown.sinr_db
            if breakdown.sinr < floor:
                violations.append({
                    "category": "sinr", "demand": str(demand.id),
                    "detail": f"final SINR {breakdown.sinr_db:.3f} dB below threshold",
                })
    return {
        "ok": not violations,
        "violations": violations,
        "assignments_checked": len(entries),
        "impairments_checked": impairments,
        "final_sinr_db": sinr_report,
    }
