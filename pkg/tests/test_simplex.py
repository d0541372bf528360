import importlib
import os

import numpy as np
import pytest

from hubnet.milp import _kernels_py
from hubnet.milp.problem import EQ, GE, LE, MilpProblem
from hubnet.milp.simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SimplexSolver,
    solve_lp,
)

try:
    from hubnet.milp import _kernels_c
    BACKENDS = [_kernels_py, _kernels_c]
except ImportError:
    BACKENDS = [_kernels_py]


@pytest.fixture(params=[b.BACKEND for b in BACKENDS])
def kernel_backend(request, monkeypatch):
    impl = {b.BACKEND: b for b in BACKENDS}[request.param]
    from hubnet.milp import kernels
    monkeypatch.setattr(kernels, "pivot_update", impl.pivot_update)
    monkeypatch.setattr(kernels, "ratio_test", impl.ratio_test)
    monkeypatch.setattr(kernels, "dual_ratio_test", impl.dual_ratio_test)
    monkeypatch.setattr(kernels, "BACKEND", impl.BACKEND)
    return request.param


def test_single_var_lower_bound(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=10, obj=1.0)
    prob.add_constr({x: 1.0}, GE, 3.0)
    xs, obj, status = solve_lp(prob)
    assert status == OPTIMAL
    assert obj == pytest.approx(3.0, abs=1e-9)


def test_contradictory_rows_infeasible(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=10, obj=0.0)
    prob.add_constr({x: 1.0}, GE, 2.0)
    prob.add_constr({x: 1.0}, LE, 1.0)
    _, _, status = solve_lp(prob)
    assert status == INFEASIBLE


def test_degenerate_optimum_vertex(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", obj=-1.0)
    y = prob.add_var("y", obj=-1.0)
    prob.add_constr({x: 1.0, y: 1.0}, LE, 1.0)
    xs, obj, status = solve_lp(prob)
    assert status == OPTIMAL
    assert obj == pytest.approx(-1.0, abs=1e-9)
    assert xs[0] + xs[1] == pytest.approx(1.0, abs=1e-9)
    # vertex: at least one variable at a bound
    assert min(abs(xs[0]), abs(xs[1]), abs(xs[0] - 1), abs(xs[1] - 1)) < 1e-9


def test_unbounded(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=np.inf, obj=-1.0)
    prob.add_constr({x: 1.0}, GE, 0.0)
    _, _, status = solve_lp(prob)
    assert status == UNBOUNDED


def test_equality_rows(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=5, obj=2.0)
    y = prob.add_var("y", lb=0, ub=5, obj=1.0)
    prob.add_constr({x: 1.0, y: 1.0}, EQ, 4.0)
    xs, obj, status = solve_lp(prob)
    assert status == OPTIMAL
    assert obj == pytest.approx(4.0, abs=1e-8)
    assert xs[1] == pytest.approx(4.0, abs=1e-8)


def _random_lp(rng, n, m):
    prob = MilpProblem()
    for j in range(n):
        prob.add_var(f"v{j}", lb=0.0, ub=float(rng.integers(1, 5)),
                     obj=float(rng.normal()))
    for _ in range(m):
        coefs = {j: float(rng.integers(-3, 4)) for j in range(n)}
        coefs = {j: c for j, c in coefs.items() if c != 0.0}
        if not coefs:
            continue
        sense = [LE, GE, EQ][rng.integers(0, 3)]
        prob.add_constr(coefs, sense, float(rng.integers(-4, 8)))
    return prob


def _enumerate_vertices(prob):
    """Brute-force LP oracle: evaluate every basic point from active
    constraint/bound combinations. Only viable for tiny LPs."""
    import itertools

    n = prob.num_vars
    rows = []
    rhs = []
    for con in prob.constraints:
        row = np.zeros(n)
        for j, c in con.coefs.items():
            row[j] = c
        rows.append((row, con.sense, con.rhs))
    # candidate active sets: n equations chosen from constraints & bounds
    cands = []
    for row, sense, b in rows:
        cands.append((row, b))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cands.append((e, prob.lb[j]))
        cands.append((e, prob.ub[j]))
    best = np.inf
    found = False
    for combo in itertools.combinations(range(len(cands)), n):
        Aeq = np.array([cands[i][0] for i in combo])
        beq = np.array([cands[i][1] for i in combo])
        if abs(np.linalg.det(Aeq)) < 1e-9:
            continue
        x = np.linalg.solve(Aeq, beq)
        if prob.is_feasible(x, tol=1e-7):
            found = True
            best = min(best, prob.objective_value(x))
    return best if found else None


def test_random_lps_match_vertex_enumeration(kernel_backend):
    rng = np.random.default_rng(7)
    checked = 0
    for trial in range(40):
        prob = _random_lp(rng, n=int(rng.integers(2, 5)),
                          m=int(rng.integers(1, 5)))
        expected = _enumerate_vertices(prob)
        xs, obj, status = solve_lp(prob)
        if expected is None:
            assert status == INFEASIBLE, f"trial {trial}"
        else:
            assert status == OPTIMAL, f"trial {trial}: {status}"
            assert obj == pytest.approx(expected, abs=1e-8), f"trial {trial}"
            checked += 1
    assert checked > 10


def test_random_lps_match_scipy(kernel_backend):
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(11)
    for trial in range(60):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 9))
        prob = _random_lp(rng, n, m)
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for con in prob.constraints:
            row = np.zeros(n)
            for j, c in con.coefs.items():
                row[j] = c
            if con.sense == LE:
                A_ub.append(row); b_ub.append(con.rhs)
            elif con.sense == GE:
                A_ub.append(-row); b_ub.append(-con.rhs)
            else:
                A_eq.append(row); b_eq.append(con.rhs)
        res = scipy_opt.linprog(
            prob.obj,
            A_ub=np.array(A_ub) if A_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(A_eq) if A_eq else None,
            b_eq=np.array(b_eq) if b_eq else None,
            bounds=list(zip(prob.lb, prob.ub)),
            method="highs",
        )
        xs, obj, status = solve_lp(prob)
        if res.status == 2:
            assert status == INFEASIBLE, f"trial {trial}"
        elif res.status == 0:
            assert status == OPTIMAL, f"trial {trial}: {status}"
            assert obj == pytest.approx(res.fun, abs=1e-7), f"trial {trial}"


def test_warm_restart_after_row_addition(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=4, obj=-1.0)
    y = prob.add_var("y", lb=0, ub=4, obj=-1.0)
    prob.add_constr({x: 1.0, y: 1.0}, LE, 6.0)
    solver = SimplexSolver.from_problem(prob)
    assert solver.solve() == OPTIMAL
    assert solver.objective() == pytest.approx(-6.0)
    solver.add_row({x: 1.0}, LE, 1.0)
    assert solver.resolve_dual() == OPTIMAL
    x_full = solver.full_x()
    assert x_full[x] == pytest.approx(1.0, abs=1e-9)
    assert solver.objective() == pytest.approx(-5.0, abs=1e-9)


def test_warm_restart_after_bound_change(kernel_backend):
    prob = MilpProblem()
    x = prob.add_var("x", lb=0, ub=1, obj=-2.0)
    y = prob.add_var("y", lb=0, ub=1, obj=-1.0)
    prob.add_constr({x: 1.0, y: 1.0}, LE, 1.5)
    solver = SimplexSolver.from_problem(prob)
    assert solver.solve() == OPTIMAL
    solver.set_bounds(x, 0.0, 0.0)
    solver.refresh_values()
    assert solver.resolve_dual() == OPTIMAL
    assert solver.objective() == pytest.approx(-1.0, abs=1e-9)


def test_backend_selection_env(monkeypatch):
    monkeypatch.setenv("HUBNET_PURE_PYTHON", "1")
    import hubnet.milp.kernels as kmod
    mod = importlib.reload(kmod)
    assert mod.BACKEND == "python"
    monkeypatch.delenv("HUBNET_PURE_PYTHON")
    importlib.reload(kmod)
