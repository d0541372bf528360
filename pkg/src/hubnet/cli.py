"""Command-line front end: generate instances, solve models, run failure
simulations, and emit plot-ready CSV reports.

Commands
--------
generate   synthesize a random instance and write the canonical JSON file
solve      build and solve one model variant; write a solution file
simulate   Monte-Carlo failure evaluation of solution files; write CSV
report     backbone metrics and price-of-robustness table; write CSV

Exit codes: 0 success / proven optimum; 1 data or model error; 2 usage
error; 3 solver stopped at a limit; 4 model proven infeasible.
Logs go to standard error; machine-readable output goes to files only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time

from hubnet import analysis, models, simulate as sim
from hubnet.instance import (
    CostScalingParams,
    InstanceError,
    ProbabilityScenario,
    load_instance,
    save_instance,
    synthesize_instance,
)
from hubnet.milp import SolverConfig, register_separation, solve_milp

log = logging.getLogger("hubnet")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3
EXIT_INFEASIBLE = 4

_LIMIT_STATUSES = {"node_limit", "time_limit", "gap_limit"}
DEFAULT_Q_GRID = [round(0.05 * i, 2) for i in range(21)]


class CliError(Exception):
    """Fatal command error with a user-facing message."""

    def __init__(self, message, code=EXIT_ERROR):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------- generate

def cmd_generate(args) -> int:
    scenario = ProbabilityScenario(
        kind=args.scenario.upper(), rho=args.rho,
        cluster_values=tuple(args.cluster_values), seed=args.seed)
    params = CostScalingParams(alpha=args.alpha)
    inst = synthesize_instance(args.n, args.seed, scenario, params)
    save_instance(inst, args.out)
    log.info("wrote %s: n=%d commodities=%d scenario=%s alpha=%.3g hash=%s",
             args.out, inst.n, inst.num_commodities, scenario.kind,
             args.alpha, inst.content_hash())
    return EXIT_OK


# ---------------------------------------------------------------- solve

_BUILDERS = {
    "m0": models.M0,
    "m1": models.M1,
    "m1c": models.M1_CLUSTERED,
    "m2": models.M2,
}


def _build(inst, spec):
    if spec.variant == models.M0:
        return models.build_m0(inst), None
    if spec.variant == models.M1:
        return models.build_m1(inst, spec), None
    if spec.variant == models.M1_CLUSTERED:
        return models.build_m1_clustered(inst, spec), None
    return models.build_m2(inst, spec)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    spec = models.ModelSpec(
        variant=_BUILDERS[args.model], lam=args.lam, beta=args.beta,
        apply_prop1_reduction=args.prop1)
    try:
        problem, callback = _build(inst, spec)
    except models.ModelError as exc:
        raise CliError(f"cannot build model: {exc}")
    if callback is not None:
        register_separation(problem, callback)
    config = SolverConfig(time_limit=args.time_limit,
                          node_limit=args.node_limit,
                          branching_rule=args.branching)
    start = time.monotonic()
    solution = solve_milp(problem, config)
    elapsed = time.monotonic() - start
    gap = 0.0
    if solution.objective is not None and solution.objective != 0:
        gap = abs(solution.objective - solution.bound) / abs(solution.objective)
    log.info("status=%s nodes=%d cuts=%d gap=%.3g time=%.2fs",
             solution.status, solution.nodes, solution.cuts_added, gap,
             elapsed)
    if solution.status == "infeasible":
        raise CliError("model is infeasible", EXIT_INFEASIBLE)
    if solution.x is None:
        raise CliError(f"no incumbent found ({solution.status})", EXIT_LIMIT)
    design = models.decode(inst, spec, solution)
    design.instance_hash = inst.content_hash()
    doc = design.to_document()
    doc["status"] = solution.status
    doc["nodes"] = solution.nodes
    doc["cuts_added"] = solution.cuts_added
    doc["bound"] = solution.bound
    doc["wall_time"] = elapsed
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    log.info("wrote %s: objective=%.6f hubs=%s edges=%d",
             args.out, design.objective, design.hubs, len(design.edges))
    if solution.status in _LIMIT_STATUSES:
        return EXIT_LIMIT
    return EXIT_OK


# ------------------------------------------------------------- simulate

def _load_solution(path, inst):
    with open(path) as fh:
        doc = json.load(fh)
    design = models.DesignSolution.from_document(doc)
    expected = inst.content_hash()
    if design.instance_hash and design.instance_hash != expected:
        raise CliError(
            f"{path} was solved on a different instance "
            f"(hash {design.instance_hash} != {expected})")
    return design


def _model_label(design):
    if design.spec.variant == models.M2:
        return f"m2_lam{design.spec.lam}"
    return {models.M0: "m0", models.M1: "m1",
            models.M1_CLUSTERED: "m1c"}[design.spec.variant]


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    designs = [(path, _load_solution(path, inst)) for path in args.solutions]
    q_grid = args.q_grid if args.q_grid else DEFAULT_Q_GRID
    if any(q < 0 for q in q_grid):
        raise CliError("surcharges must be nonnegative")
    rows = []
    for path, design in designs:
        label = _model_label(design)
        for kind in args.scenarios:
            cfg = sim.FailureScenarioConfig(
                kind=kind, trials=args.trials, gamma=args.gamma,
                seed=args.seed)
            rep = sim.simulate(design, inst, cfg)
            log.info("%s %s: tau=%.4f routing_mean=%.4f mean_failed=%.3f",
                     label, kind, rep.tau, rep.routing_mean,
                     rep.mean_failed_edges)
            for q, phi in zip(q_grid, sim.phi_of_q(rep, q_grid)):
                rows.append({
                    "solution": path, "model": label, "scenario": kind,
                    "trials": rep.trials, "tau": rep.tau,
                    "non_routable": 1.0 - rep.tau,
                    "routing_mean": rep.routing_mean,
                    "setup_cost": rep.setup_cost,
                    "direct_cost": rep.direct_cost,
                    "q": q, "phi": phi,
                })
    _write_csv(args.out, rows)
    log.info("wrote %s: %d rows", args.out, len(rows))
    return EXIT_OK


# --------------------------------------------------------------- report

def cmd_report(args) -> int:
    inst = load_instance(args.instance)
    designs = [(path, _load_solution(path, inst)) for path in args.solutions]
    # price of robustness is measured against the unprotected model when
    # present, otherwise against the first solution given
    base = next((d for _, d in designs if d.spec.variant == models.M0),
                designs[0][1])
    rows = []
    for path, design in designs:
        m = analysis.network_metrics(design)
        por = analysis.price_of_robustness(base, design)
        rows.append({
            "solution": path, "model": _model_label(design),
            "objective": design.objective,
            "num_hubs": m.num_hubs, "num_links": m.num_links,
            "num_loops": m.num_loops,
            "i1": m.i1, "i2": "" if m.i2 is None else m.i2,
            "hub_share": m.hub_share, "link_share": m.link_share,
            "routing_share": m.routing_share,
            "price_of_robustness": "" if por is None else por,
        })
    _write_csv(args.out, rows)
    log.info("wrote %s: %d rows", args.out, len(rows))
    return EXIT_OK


def _write_csv(path, rows):
    if not rows:
        raise CliError("nothing to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


# ----------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubnet",
        description="Design and failure analysis of survivable "
                    "hub-and-spoke networks")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--scenario", choices=["rp", "cp", "sp"], default="sp")
    g.add_argument("--rho", type=float, default=0.1,
                   help="uniform probability (sp) or upper bound (rp)")
    g.add_argument("--cluster-values", type=float, nargs="+",
                   default=[0.1, 0.2, 0.3])
    g.add_argument("--alpha", type=float, default=0.5,
                   help="inter-hub discount factor")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one model on an instance")
    s.add_argument("instance")
    s.add_argument("--model", choices=sorted(_BUILDERS), required=True)
    s.add_argument("--lambda", dest="lam", type=int, default=2,
                   help="connectivity level (m2 only)")
    s.add_argument("--beta", type=float, default=1.0,
                   help="failure cost surcharge factor (m2 only)")
    s.add_argument("--prop1", action="store_true",
                   help="fix the cheaper orientation of each commodity arc")
    s.add_argument("--branching", default="most_fractional",
                   choices=["most_fractional", "design_first"])
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="Monte-Carlo failure evaluation")
    m.add_argument("--instance", required=True)
    m.add_argument("solutions", nargs="+")
    m.add_argument("--scenarios", nargs="+", default=["FS1", "FS2", "FS3",
                                                      "FS4"],
                   choices=["FS1", "FS2", "FS3", "FS4"])
    m.add_argument("--trials", type=int, default=10000)
    m.add_argument("--gamma", type=float, default=0.75)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--q-grid", type=float, nargs="*", default=None,
                   help="surcharge samples (default 0, 0.05, ..., 1.0)")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="backbone metrics CSV")
    r.add_argument("--instance", required=True)
    r.add_argument("solutions", nargs="+")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except (InstanceError, models.ModelError, OSError,
            json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
