"""Compare the compiled kernel backend against the pure numpy fallback.

Runs two workloads under each backend and reports wall time:

* micro: the four kernels on synthetic arrays sized like a busy grid
* plan: full planning runs on the 14-node topology

Usage: python benchmarks/bench_backends.py [--plan-reps 5] [--micro-iters 200]
"""

import argparse
import random
import time
from pathlib import Path

import numpy as np

from eonplan import _kernels as kernels
from eonplan.net import Demand, load_topology
from eonplan.params import load_params
from eonplan.planner import run_plan

ROOT = Path(__file__).resolve().parent.parent


def micro_workload(rng: np.random.Generator):
    """One batch of kernel calls on arrays sized like a loaded 320-slot grid."""
    backend = kernels.get_backend()
    occ = (rng.random((21, 320)) < 0.4).astype(np.uint8)
    seg = np.zeros((64, 6), dtype=np.int64)
    seg[:, 0] = rng.integers(1, 40, 64)
    seg[:, 1] = rng.integers(0, 14, 64)
    seg[:, 2] = rng.integers(0, 14, 64)
    lo = rng.integers(0, 320, 64)
    seg[:, 3] = lo
    seg[:, 4] = np.minimum(319, lo + rng.integers(1, 8, 64))
    seg[:, 5] = rng.integers(0, 14, 64)
    vals = rng.integers(0, 12, 320).astype(np.int64)
    pos = rng.uniform(0, 320, 40) * 12.5e9
    ctr = rng.uniform(0, 320, 12) * 12.5e9
    half = rng.uniform(1.0, 4.0, 12) * 12.5e9
    wts = rng.uniform(0.5, 2.0, 12)
    for width in (2, 4, 6):
        backend.feasible_starts(occ, width)
        backend.window_max(vals, width)
    backend.xt_counts(seg, 3, 320)
    backend.nli_neighbor_lnsum(pos, ctr, half, wts)


def plan_workload(reps: int) -> dict:
    topology = load_topology(ROOT / "configs" / "nsfnet.json")
    params = load_params(ROOT / "configs" / "params_experiments.json")
    nodes = sorted(topology.nodes)
    metrics = {}
    for rep in range(reps):
        rng = random.Random(1000 + rep)
        demands = []
        for i in range(60):
            src, dst = rng.sample(nodes, 2)
            demands.append(Demand(id=i + 1, source=src, destination=dst, rho=rng.randint(2, 5)))
        result = run_plan(
            topology=topology, demands=demands, params=params, n_slots=60,
            k_paths=3, ordering="mcdf", policy="proposed", impairments=True,
        )
        metrics[rep] = (result.metrics["served"], round(result.metrics["objective"], 12))
    return metrics


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--plan-reps", type=int, default=5)
    parser.add_argument("--micro-iters", type=int, default=200)
    args = parser.parse_args()

    names = kernels.available_backends()
    if "compiled" not in names:
        print("compiled backend unavailable; benchmarking pure only")

    rows = []
    plan_outputs = {}
    for name in names:
        kernels.set_backend(name)
        rng = np.random.default_rng(99)
        t0 = time.perf_counter()
        for _ in range(args.micro_iters):
            micro_workload(rng)
        micro_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        plan_outputs[name] = plan_workload(args.plan_reps)
        plan_s = time.perf_counter() - t0
        rows.append((name, micro_s, plan_s))

    print(f"{'backend':<10} {'micro[s]':>10} {'plan[s]':>10}")
    for name, micro_s, plan_s in rows:
        print(f"{name:<10} {micro_s:>10.3f} {plan_s:>10.3f}")
    if len(rows) == 2:
        base = {name: (m, p) for name, m, p in rows}
        mic = base["pure"][0] / base["compiled"][0]
        pln = base["pure"][1] / base["compiled"][1]
        print(f"speedup (pure/compiled): micro {mic:.2f}x, plan {pln:.2f}x")
        if plan_outputs["pure"] != plan_outputs["compiled"]:
            raise SystemExit("backends disagree on plan output")
        print("plan outputs identical across backends")


if __name__ == "__main__":
    main()
