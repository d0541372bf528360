#!/usr/bin/env python3
"""Benchmark the compiled simplex kernels against the numpy fallback.

Runs the same workloads through both backends:

* micro-benchmarks of the three pivot kernels on synthetic data, and
* an end-to-end branch-and-cut solve of a synthesized design instance.

The backend is fixed per process (chosen at import time), so the script
re-executes itself with HUBNET_PURE_PYTHON=1 to collect the fallback
numbers, then prints a side-by-side table.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_micro(repeat: int) -> dict:
    from hubnet.milp import kernels

    rng = np.random.default_rng(0)
    m, n = 120, 400
    results = {}

    binv = rng.normal(size=(m, m)) + np.eye(m) * m
    w = rng.normal(size=m)
    w[7] = 2.0
    start = time.perf_counter()
    for _ in range(repeat * 200):
        kernels.pivot_update(binv.copy(), w, 7)
    results["pivot_update"] = time.perf_counter() - start

    xB = rng.uniform(0, 1, size=m)
    lbB = np.zeros(m)
    ubB = np.ones(m)
    delta = rng.normal(size=m)
    start = time.perf_counter()
    for _ in range(repeat * 2000):
        kernels.ratio_test(xB, lbB, ubB, delta, 1.0, 1e-9, False)
    results["ratio_test"] = time.perf_counter() - start

    d = np.abs(rng.normal(size=n))
    alpha = rng.normal(size=n)
    stat = rng.integers(0, 2, size=n).astype(np.int8)
    lb = np.zeros(n)
    ub = np.ones(n)
    start = time.perf_counter()
    for _ in range(repeat * 2000):
        kernels.dual_ratio_test(d, alpha, stat, lb, ub, 1e-9)
    results["dual_ratio_test"] = time.perf_counter() - start
    return results


def bench_solve() -> dict:
    from hubnet.instance import ProbabilityScenario, synthesize_instance
    from hubnet.milp import register_separation, solve_milp
    from hubnet.models import M2, ModelSpec, build_m2

    inst = synthesize_instance(
        7, 11, ProbabilityScenario(kind="SP", rho=0.2, seed=11))
    prob, callback = build_m2(inst, ModelSpec(variant=M2, lam=3))
    register_separation(prob, callback)
    start = time.perf_counter()
    sol = solve_milp(prob)
    elapsed = time.perf_counter() - start
    assert sol.status == "optimal"
    return {"m2_lam3_n7": elapsed, "nodes": sol.nodes}


def run_current(repeat: int) -> dict:
    from hubnet.milp import kernels

    out = {"backend": kernels.BACKEND}
    out.update(bench_micro(repeat))
    out.update(bench_solve())
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", action="store_true",
                        help="emit raw numbers as JSON")
    parser.add_argument("--single", action="store_true",
                        help="benchmark only the current backend")
    args = parser.parse_args()

    mine = run_current(args.repeat)
    runs = [mine]
    if not args.single and mine["backend"] != "python":
        env = dict(os.environ, HUBNET_PURE_PYTHON="1")
        proc = subprocess.run(
            [sys.executable, __file__, "--repeat", str(args.repeat),
             "--single", "--json"],
            env=env, capture_output=True, text=True, check=True)
        runs.append(json.loads(proc.stdout))

    if args.json:
        print(json.dumps(mine))
        return 0

    keys = [k for k in mine if k not in ("backend", "nodes")]
    header = f"{'benchmark':<16}" + "".join(
        f"{r['backend']:>12}" for r in runs)
    print(header)
    print("-" * len(header))
    for k in keys:
        row = f"{k:<16}" + "".join(f"{r[k]:>11.3f}s" for r in runs)
        if len(runs) == 2 and runs[1][k] > 0:
            row += f"   x{runs[1][k] / runs[0][k]:.2f}"
        print(row)
    print(f"(branch-and-cut nodes: {mine['nodes']}; "
          f"repeat factor {args.repeat})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
