"""Exact branch-and-cut over the bounded-variable simplex.

Node selection is best-bound (lowest LP bound first, FIFO tie-break);
branching picks the most fractional integer variable, lowest index on
ties, so solves are deterministic. A separation callback, when registered,
runs at every node, root and interior, on fractional and integer points
alike; integer points that violate a separated row are never accepted as
incumbents. Returned rows are validated (each must be violated at the
point that produced it) and deduplicated across the whole tree.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from hubnet.milp.problem import GE, LE, MilpProblem, MilpSolution, SolverConfig
from hubnet.milp.simplex import (
    INFEASIBLE,
    NUMERIC_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    SimplexSolver,
)


class SolveError(Exception):
    pass


class CutContractError(SolveError):
    """A separation callback returned a row not violated at its point."""


def register_separation(problem: MilpProblem, callback) -> None:
    """Attach a lazy-constraint callback.

    The callback receives {group_name: {key: value}} for every registered
    variable group and must return a list of (coefs, sense, rhs) rows, each
    violated by at least the configured tolerance at that point.
    """
    problem.separation_callback = callback


@dataclass
class _Node:
    bound: float
    seq: int
    overrides: dict[int, tuple[float, float]]
    basis: np.ndarray | None
    stat: np.ndarray | None

    def __lt__(self, other):
        return (self.bound, self.seq) < (other.bound, other.seq)


def solve_milp(problem: MilpProblem, config: SolverConfig | None = None) -> MilpSolution:
    return _BranchAndCut(problem, config or SolverConfig()).run()


class _BranchAndCut:
    def __init__(self, problem: MilpProblem, config: SolverConfig):
        self.problem = problem
        self.config = config
        self.solver = SimplexSolver.from_problem(
            problem, feas_tol=config.feasibility_tol
        )
        self.int_vars = [j for j in range(problem.num_vars) if problem.is_integer[j]]
        self.base_bounds = {
            j: (problem.lb[j], problem.ub[j]) for j in self.int_vars
        }
        self.cut_hashes: set = set()
        self.cuts_added = 0
        self.nodes = 0
        self.active_overrides: dict[int, tuple[float, float]] = {}
        # branching priority classes: design variables (z, then y) before
        # routing variables, used by the design_first rule
        self.branch_class = np.full(problem.num_vars, 2, dtype=np.int8)
        for name, cls in (("z", 0), ("y", 1)):
            for idx in problem.var_groups.get(name, {}).values():
                self.branch_class[idx] = cls

    # -- node LP machinery -------------------------------------------------

    def _activate(self, node: _Node) -> str:
        solver = self.solver
        for j in self.active_overrides:
            if j not in node.overrides:
                lo, hi = self.base_bounds[j]
                solver.set_bounds(j, lo, hi)
        for j, (lo, hi) in node.overrides.items():
            solver.set_bounds(j, lo, hi)
        self.active_overrides = dict(node.overrides)
        if node.basis is None:
            return solver.solve()
        basis = node.basis
        stat = node.stat
        if len(basis) < solver.m:
            extra = np.arange(
                self.problem.num_vars + len(basis),
                self.problem.num_vars + solver.m,
            )
            basis = np.concatenate([basis, extra])
            stat = np.concatenate(
                [stat, np.full(solver.N - len(stat), 2, dtype=np.int8)]
            )
        solver.set_basis(basis, stat)
        if not solver.factorize():
            return solver.solve()
        return solver.resolve_dual()

    def _separate_loop(self, status: str) -> str:
        cb = self.problem.separation_callback
        if cb is None:
            return status
        solver = self.solver
        while status == OPTIMAL:
            x = solver.full_x()[: self.problem.num_vars]
            point = {
                name: {key: float(x[idx]) for key, idx in grp.items()}
                for name, grp in self.problem.var_groups.items()
            }
            rows = cb(point)
            fresh = 0
            for coefs, sense, rhs in rows:
                if self.config.validate_cuts:
                    lhs = sum(c * x[j] for j, c in coefs.items())
                    if sense == LE:
                        viol = lhs - rhs
                    elif sense == GE:
                        viol = rhs - lhs
                    else:
                        viol = abs(lhs - rhs)
                    if viol < self.config.violation_tol:
                        raise CutContractError(
                            f"separated row violated by {viol:.3e} "
                            f"< {self.config.violation_tol:.3e}"
                        )
                key = _row_hash(coefs, sense, rhs)
                if key in self.cut_hashes:
                    continue
                self.cut_hashes.add(key)
                solver.add_row(dict(coefs), sense, rhs)
                fresh += 1
            if fresh == 0:
                break
            self.cuts_added += fresh
            status = solver.resolve_dual()
        return status

    # -- main loop ---------------------------------------------------------

    def run(self) -> MilpSolution:
        cfg = self.config
        t0 = time.monotonic()
        incumbent = None
        inc_obj = math.inf
        heap: list[_Node] = [_Node(-math.inf, 0, {}, None, None)]
        seq = 1
        hit_limit = None

        while heap:
            if cfg.node_limit is not None and self.nodes >= cfg.node_limit:
                hit_limit = "node_limit"
                break
            if cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit:
                hit_limit = "time_limit"
                break
            if incumbent is not None and heap[0].bound >= inc_obj - 1e-9:
                break  # best-bound order: nothing left can improve
            if incumbent is not None and cfg.rel_gap > 0:
                bound = heap[0].bound
                if inc_obj - bound <= cfg.rel_gap * max(1.0, abs(inc_obj)):
                    hit_limit = "gap_limit"
                    break
            node = heapq.heappop(heap)
            self.nodes += 1

            status = self._activate(node)
            status = self._separate_loop(status)
            if status == INFEASIBLE:
                continue
            if status == UNBOUNDED:
                raise SolveError("LP relaxation unbounded; model is ill-posed")
            if status == NUMERIC_FAILURE:
                raise SolveError("simplex reported a numeric failure")

            obj = self.solver.objective()
            x = self.solver.full_x()[: self.problem.num_vars]
            if incumbent is not None and obj >= inc_obj - 1e-9:
                continue
            j = self._pick_branch_var(x)
            if j is None:
                # tighten numerics before trusting an incumbent
                if self.solver.polish() == OPTIMAL:
                    status = self._separate_loop(OPTIMAL)
                    if status != OPTIMAL:
                        continue
                    obj = self.solver.objective()
                    x = self.solver.full_x()[: self.problem.num_vars]
                    j = self._pick_branch_var(x)
                if j is None:
                    cand = self._snap(x)
                    cand_obj = self.problem.objective_value(cand)
                    if cand_obj < inc_obj:
                        incumbent, inc_obj = cand, cand_obj
                    continue
            basis = self.solver.basis.copy()
            stat = self.solver.stat.copy()
            floor = math.floor(x[j] + cfg.integrality_tol)
            lo, hi = (
                self.active_overrides.get(j) or self.base_bounds[j]
            )
            down = dict(node.overrides)
            down[j] = (lo, float(floor))
            up = dict(node.overrides)
            up[j] = (float(floor + 1), hi)
            heapq.heappush(heap, _Node(obj, seq, down, basis, stat))
            heapq.heappush(heap, _Node(obj, seq + 1, up, basis, stat))
            seq += 2

        if incumbent is None:
            if hit_limit:
                return MilpSolution(hit_limit, None, None,
                                    heap[0].bound if heap else math.inf,
                                    self.nodes, self.cuts_added, self.problem)
            return MilpSolution("infeasible", None, None, math.inf,
                                self.nodes, self.cuts_added, self.problem)
        bound = min(min((n.bound for n in heap), default=inc_obj), inc_obj)
        status = hit_limit or "optimal"
        if status == "optimal":
            bound = inc_obj
        return MilpSolution(status, incumbent, inc_obj, bound,
                            self.nodes, self.cuts_added, self.problem)

    def _pick_branch_var(self, x: np.ndarray):
        tol = self.config.integrality_tol
        design_first = self.config.branching_rule == "design_first"
        best, best_key = None, None
        for j in self.int_vars:
            frac = x[j] - math.floor(x[j])
            dist = min(frac, 1.0 - frac)
            if dist <= tol:
                continue
            # smaller key wins; most fractional, with design variables
            # (z, then y) taking precedence under design_first
            key = ((self.branch_class[j], -dist) if design_first
                   else (-dist,))
            if best is None or key < best_key:
                best, best_key = j, key
        return best

    def _snap(self, x: np.ndarray) -> np.ndarray:
        out = x.copy()
        for j in self.int_vars:
            out[j] = round(out[j])
        return out


def _row_hash(coefs, sense, rhs):
    return (
        frozenset((j, round(c, 10)) for j, c in coefs.items() if c != 0.0),
        sense,
        round(rhs, 10),
    )
