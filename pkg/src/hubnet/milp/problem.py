"""Generic mixed-binary linear program container.

All formulations in this package are expressed as a :class:`MilpProblem`:
named variables with bounds, integrality flags and objective coefficients,
plus sparse linear rows. Minimization is implied. The container is solver
agnostic; :mod:`hubnet.milp.branch_and_bound` consumes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)


class MilpError(Exception):
    pass


@dataclass
class Constraint:
    coefs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass
class MilpProblem:
    var_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    is_integer: list[bool] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    # named variable groups, e.g. var_groups['y'][(k, l)] -> column index;
    # used by separation callbacks to address design variables.
    var_groups: dict[str, dict] = field(default_factory=dict)
    separation_callback: object = None

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    def add_var(self, name, lb=0.0, ub=1.0, integer=False, obj=0.0,
                group=None, key=None) -> int:
        if integer and not (np.isfinite(lb) and np.isfinite(ub)):
            raise MilpError(f"integer variable {name} must have finite bounds")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.is_integer.append(bool(integer))
        self.obj.append(float(obj))
        if group is not None:
            self.var_groups.setdefault(group, {})[key] = idx
        return idx

    def add_constr(self, coefs, sense, rhs, name="") -> int:
        if sense not in _SENSES:
            raise MilpError(f"unknown sense {sense!r}")
        coefs = dict(coefs)
        for j in coefs:
            if not 0 <= j < self.num_vars:
                raise MilpError(f"constraint {name!r} references unknown column {j}")
        self.constraints.append(Constraint(coefs, sense, float(rhs), name))
        return len(self.constraints) - 1

    def fix_var(self, idx: int, value: float) -> None:
        self.lb[idx] = value
        self.ub[idx] = value

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(np.asarray(self.obj), x))

    def is_feasible(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < np.asarray(self.lb) - tol) or np.any(x > np.asarray(self.ub) + tol):
            return False
        for con in self.constraints:
            lhs = sum(c * x[j] for j, c in con.coefs.items())
            if con.sense == LE and lhs > con.rhs + tol:
                return False
            if con.sense == GE and lhs < con.rhs - tol:
                return False
            if con.sense == EQ and abs(lhs - con.rhs) > tol:
                return False
        return True

    def write_lp(self, path) -> None:
        """Dump in CPLEX LP text format for cross-checking with other solvers."""
        def term(j, c):
            sign = "+" if c >= 0 else "-"
            return f"{sign} {abs(c):.17g} {self._lp_name(j)}"

        lines = ["Minimize", " obj: " + " ".join(
            term(j, c) for j, c in enumerate(self.obj) if c != 0.0)]
        lines.append("Subject To")
        for i, con in enumerate(self.constraints):
            body = " ".join(term(j, c) for j, c in sorted(con.coefs.items()))
            sense = {LE: "<=", GE: ">=", EQ: "="}[con.sense]
            lines.append(f" c{i}: {body} {sense} {con.rhs:.17g}")
        lines.append("Bounds")
        for j in range(self.num_vars):
            lo = f"{self.lb[j]:.17g}" if np.isfinite(self.lb[j]) else "-inf"
            hi = f"{self.ub[j]:.17g}" if np.isfinite(self.ub[j]) else "+inf"
            lines.append(f" {lo} <= {self._lp_name(j)} <= {hi}")
        ints = [self._lp_name(j) for j in range(self.num_vars) if self.is_integer[j]]
        if ints:
            lines.append("Binaries" if all(
                self.lb[j] == 0 and self.ub[j] == 1
                for j in range(self.num_vars) if self.is_integer[j]) else "Generals")
            lines.append(" " + " ".join(ints))
        lines.append("End")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def _lp_name(self, j: int) -> str:
        # LP format forbids brackets/commas common in our structured names
        return (self.var_names[j].replace("[", "_").replace("]", "")
                .replace(",", "_"))


@dataclass
class SolverConfig:
    feasibility_tol: float = 1e-6
    integrality_tol: float = 1e-6
    rel_gap: float = 0.0
    node_limit: int | None = None
    time_limit: float | None = None
    branching_rule: str = "most_fractional"
    violation_tol: float = 1e-6
    validate_cuts: bool = True

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.integrality_tol <= 0:
            raise MilpError("tolerances must be positive")


@dataclass
class MilpSolution:
    status: str                      # optimal | infeasible | gap_limit | node_limit
    x: np.ndarray | None
    objective: float | None
    bound: float
    nodes: int
    cuts_added: int
    problem: "MilpProblem | None" = field(default=None, repr=False)

    def value(self, idx: int) -> float:
        return float(self.x[idx])
