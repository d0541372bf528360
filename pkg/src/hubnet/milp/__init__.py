"""Internal mixed-integer solver: bounded-variable simplex with a
branch-and-cut driver and lazy-constraint callbacks."""

from hubnet.milp.branch_and_bound import (
    CutContractError,
    SolveError,
    register_separation,
    solve_milp,
)
from hubnet.milp.problem import (
    Constraint,
    MilpError,
    MilpProblem,
    MilpSolution,
    SolverConfig,
)

__all__ = [
    "Constraint",
    "CutContractError",
    "MilpError",
    "MilpProblem",
    "MilpSolution",
    "SolveError",
    "SolverConfig",
    "register_separation",
    "solve_milp",
]
