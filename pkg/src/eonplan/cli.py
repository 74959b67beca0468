"""Command-line front end.

Subcommands::

    eonplan plan       one demand-count planning experiment
    eonplan sweep      planning experiment over several demand counts
    eonplan exact      exact solver over replicated small instances
    eonplan gap-study  heuristic-vs-exact optimality gaps
    eonplan validate   re-check a dumped plan against all constraints

Exit codes: 0 success (validate: no violations), 1 failed runs or
violations found (details in errors.json / the printed report), 2 usage.

``--topology`` and ``--params`` take paths; a value that is not an existing
file is also tried under ``$EONPLAN_CONFIG_DIR`` (with and without a
``.json`` suffix), so stock configs can be named as e.g. ``nsfnet``.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import ExperimentSpec, run_experiment, validate_plan
from .ordering import ORDERINGS
from .planner import POLICIES


def _resolve_config(value: str) -> str:
    """Fall back to $EONPLAN_CONFIG_DIR for config names that are not files."""
    if Path(value).exists():
        return value
    base = os.environ.get("EONPLAN_CONFIG_DIR")
    if base:
        for candidate in (Path(base) / value, Path(base) / f"{value}.json"):
            if candidate.exists():
                return str(candidate)
    return value


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--topology", required=True,
                        help="topology JSON file (or a name under $EONPLAN_CONFIG_DIR)")
    parser.add_argument("--params", required=True,
                        help="parameter JSON file (or a name under $EONPLAN_CONFIG_DIR)")
    parser.add_argument("--n-slots", type=int, required=True, help="slots per link")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--k-paths", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1, help="base seed")
    parser.add_argument("--replications", type=int, default=20)
    parser.add_argument("--rho", default="uniform:2-5",
                        help="'fixed:K' or 'uniform:LO-HI' slot request sizes")
    parser.add_argument("--demands-file", default=None,
                        help="explicit demand set JSON (overrides generation)")
    parser.add_argument("--impairments", choices=("on", "off", "both"), default="on")


def _add_plan_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--orderings", default="msf",
                        help=f"comma list from {ORDERINGS}")
    parser.add_argument("--policies", default="proposed",
                        help=f"comma list from {POLICIES}")
    parser.add_argument("--strict-k", type=int, default=None,
                        help="fixed divisor for the congestion-order score")
    parser.add_argument("--no-dumps", action="store_true",
                        help="skip per-run grid snapshots")


def _impairment_tuple(arg: str) -> tuple:
    return {"on": (True,), "off": (False,), "both": (True, False)}[arg]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eonplan",
        description="Impairment-aware routing and spectrum allocation planner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan one demand count")
    _add_common(plan)
    _add_plan_options(plan)
    plan.add_argument("--demands", type=int, default=10, help="demands per replication")

    sweep = sub.add_parser("sweep", help="plan across several demand counts")
    _add_common(sweep)
    _add_plan_options(sweep)
    sweep.add_argument("--demand-counts", required=True,
                       help="comma list, e.g. 30,60,90,120")

    exact = sub.add_parser("exact", help="exact solve replicated instances")
    _add_common(exact)
    exact.add_argument("--demands", type=int, default=4, help="demands per instance (<= 8)")
    exact.add_argument("--max-nodes", type=int, default=None)
    exact.add_argument("--max-seconds", type=float, default=None)

    gap = sub.add_parser("gap-study", help="heuristic vs exact optimality gaps")
    _add_common(gap)
    gap.add_argument("--demands", type=int, default=4, help="demands per instance (<= 8)")
    gap.add_argument("--orderings", default="msf,mcdf",
                     help=f"comma list from {ORDERINGS}")
    gap.add_argument("--max-nodes", type=int, default=None)
    gap.add_argument("--max-seconds", type=float, default=None)
    gap.add_argument("--no-seed-incumbent", action="store_true",
                     help="do not prime the solver with the heuristic plan")

    validate = sub.add_parser("validate", help="re-check a dumped plan")
    validate.add_argument("--topology", required=True)
    validate.add_argument("--params", required=True)
    validate.add_argument("dump", help="plan dump JSON produced by a planning run")
    validate.add_argument("--report", default=None,
                          help="write the JSON report here instead of stdout")

    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    common = dict(
        topology=args.topology,
        params=args.params,
        n_slots=args.n_slots,
        out_dir=args.out,
        rho=args.rho,
        replications=args.replications,
        base_seed=args.seed,
        k_paths=args.k_paths,
        impairments=_impairment_tuple(args.impairments),
        demands_file=args.demands_file,
    )
    if args.command in ("plan", "sweep"):
        counts = (
            tuple(int(c) for c in args.demand_counts.split(","))
            if args.command == "sweep"
            else (args.demands,)
        )
        return ExperimentSpec(
            mode=args.command,
            demand_counts=counts,
            orderings=tuple(args.orderings.split(",")),
            policies=tuple(args.policies.split(",")),
            strict_k=args.strict_k,
            dump_states=not args.no_dumps,
            **common,
        )
    if args.command == "exact":
        return ExperimentSpec(
            mode="exact",
            demand_counts=(args.demands,),
            exact_max_nodes=args.max_nodes,
            exact_max_seconds=args.max_seconds,
            **common,
        )
    if args.command == "gap-study":
        return ExperimentSpec(
            mode="gap-study",
            demand_counts=(args.demands,),
            orderings=tuple(args.orderings.split(",")),
            exact_max_nodes=args.max_nodes,
            exact_max_seconds=args.max_seconds,
            seed_incumbent=not args.no_seed_incumbent,
            **common,
        )
    raise ValueError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.topology = _resolve_config(args.topology)
    args.params = _resolve_config(args.params)
    if args.command == "validate":
        report = validate_plan(args.topology, args.params, args.dump)
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.report:
            Path(args.report).write_text(text + "\n", encoding="utf-8")
        else:
            print(text)
        if not report["ok"]:
            print(f"{len(report['violations'])} violation(s) found", file=sys.stderr)
            return 1
        return 0

    try:
        spec = _spec_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_experiment(spec)
    except Exception as exc:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "errors.json", "w", encoding="utf-8") as handle:
            json.dump([{"error": repr(exc), "stage": "setup"}], handle, indent=2)
            handle.write("\n")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(summary['files'])} to {summary['out_dir']}")
    if summary["errors"]:
        print(f"{len(summary['errors'])} run(s) failed; see errors.json", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
