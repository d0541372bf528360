import numpy as np
import pytest

from hubnet.instance import Commodity, Instance
from hubnet.models import M2, DesignSolution, ModelSpec
from hubnet.simulate import (
    FS1,
    FS2,
    FS3,
    FS4,
    FailureScenarioConfig,
    SimulationReport,
    direct_delivery_cost,
    draw_after_failure,
    evaluate_trial,
    phi_of_q,
    simulate,
)


def make_instance(n, commodities, p=0.0, p_matrix=None):
    base = np.ones((n, n)) - np.eye(n)
    prob = np.asarray(p_matrix, dtype=float) if p_matrix is not None \
        else np.full((n, n), float(p))
    return Instance(
        n=n, base_cost=base, access_cost=base,
        interhub_cost=0.5 * (np.ones((n, n)) - np.eye(n)) + 0.3 * np.eye(n),
        hub_setup=np.ones(n), edge_setup=np.ones((n, n)),
        fail_prob=prob, commodities=commodities, alpha=0.5)


def design(hubs, edges, arcs, hub_cost=4.0, edge_cost=3.0):
    routing = 2.0
    return DesignSolution(
        hubs=list(hubs), edges=list(edges), original_arc=list(arcs),
        backup_arc=None, objective=hub_cost + edge_cost + routing,
        hub_cost=hub_cost, edge_cost=edge_cost, routing_cost=routing,
        spec=ModelSpec(variant=M2, lam=2), instance_hash="")


def triangle():
    inst = make_instance(4, [Commodity(0, 3, 2.0)], p=0.3)
    sol = design([1, 2, 3], [(1, 2), (1, 3), (2, 3)], [(1, 3)])
    return inst, sol


def rng_for(seed, trial):
    return np.random.default_rng([seed, trial])


# ---------------------------------------------------------------- draws

@pytest.mark.parametrize("kind", [FS1, FS2, FS3, FS4])
def test_zero_probability_keeps_everything(kind):
    inst, sol = triangle()
    inst.fail_prob[:] = 0.0
    cfg = FailureScenarioConfig(kind=kind, trials=5, seed=7)
    for t in range(5):
        surviving = draw_after_failure(sol, inst, cfg, rng_for(7, t))
        assert surviving == frozenset(sol.edges)


def test_certain_failure_fs1_empties_backbone():
    inst, sol = triangle()
    inst.fail_prob[:] = 1.0
    cfg = FailureScenarioConfig(kind=FS1, trials=1, seed=0)
    assert draw_after_failure(sol, inst, cfg, rng_for(0, 0)) == frozenset()


def test_fs2_removes_whole_star():
    # four hubs k,l,m,q = 0,1,2,3 with edges {k,l},{k,q},{l,m},{m,q},
    # {l,l},{m,m}; only hub m fails -> its star {l,m},{m,q},{m,m} is gone
    n = 4
    prob = np.zeros((n, n))
    prob[2, 2] = 1.0  # hub m fails surely, everything else survives
    inst = make_instance(n, [Commodity(0, 3, 1.0)], p_matrix=prob)
    sol = design([0, 1, 2, 3],
                 [(0, 1), (0, 3), (1, 2), (2, 3), (1, 1), (2, 2)],
                 [(0, 3)])
    cfg = FailureScenarioConfig(kind=FS2, trials=1, seed=1)
    surviving = draw_after_failure(sol, inst, cfg, rng_for(1, 0))
    assert surviving == frozenset({(0, 1), (0, 3), (1, 1)})


def test_fs2_never_removes_partial_star():
    inst, sol = triangle()
    inst.fail_prob[:] = 0.4
    sol = design([1, 2, 3], [(1, 2), (1, 3), (2, 3), (2, 2)], [(1, 3)])
    cfg = FailureScenarioConfig(kind=FS2, trials=1, seed=3)
    for t in range(200):
        surviving = draw_after_failure(sol, inst, cfg, rng_for(3, t))
        # every removed edge must touch a hub that lost its entire star
        starless = {k for k in sol.hubs
                    if not any(k in e for e in surviving)}
        for e in sol.edges:
            if e not in surviving:
                assert e[0] in starless or e[1] in starless


def test_fs3_inflates_lost_loops_once():
    # proper edge fails surely; the loop at its endpoint has p = 0.7,
    # inflated to min(1, 1.05) = 1 -> loop always gone.  The other loop
    # keeps p = 0 and always survives.
    n = 3
    prob = np.zeros((n, n))
    prob[1, 2] = prob[2, 1] = 1.0
    prob[1, 1] = 0.7
    inst = make_instance(n, [Commodity(0, 2, 1.0)], p_matrix=prob)
    sol = design([1, 2], [(1, 2), (1, 1), (2, 2)], [(1, 2)])
    cfg = FailureScenarioConfig(kind=FS3, trials=1, seed=5)
    for t in range(50):
        surviving = draw_after_failure(sol, inst, cfg, rng_for(5, t))
        assert surviving == frozenset({(2, 2)})


def test_fs3_no_inflation_without_edge_loss():
    n = 3
    prob = np.zeros((n, n))
    prob[1, 1] = 0.7  # would survive only with its base probability
    inst = make_instance(n, [Commodity(0, 2, 1.0)], p_matrix=prob)
    sol = design([1, 2], [(1, 2), (1, 1)], [(1, 2)])
    cfg = FailureScenarioConfig(kind=FS3, trials=1, seed=9)
    kept = sum(
        (1, 1) in draw_after_failure(sol, inst, cfg, rng_for(9, t))
        for t in range(4000))
    # survival probability stays 0.3 (no inflation): binomial 4σ band
    sigma = np.sqrt(0.3 * 0.7 / 4000)
    assert abs(kept / 4000 - 0.3) < 4 * sigma


def test_fs4_collapses_overloaded_hub():
    # hub 1 has two incident proper edges; both fail surely -> fraction 1
    # >= gamma, so its loop goes too; hub 2-3 edge survives.
    n = 4
    prob = np.zeros((n, n))
    prob[1, 2] = prob[2, 1] = 1.0
    prob[1, 3] = prob[3, 1] = 1.0
    inst = make_instance(n, [Commodity(0, 3, 1.0)], p_matrix=prob)
    sol = design([1, 2, 3], [(1, 2), (1, 3), (2, 3), (1, 1)], [(1, 3)])
    cfg = FailureScenarioConfig(kind=FS4, trials=1, seed=2)
    surviving = draw_after_failure(sol, inst, cfg, rng_for(2, 0))
    assert surviving == frozenset({(2, 3)})


def test_fs4_below_threshold_keeps_star():
    # hub 1 loses one of four incident edges: fraction 0.25 < 0.75
    n = 5
    prob = np.zeros((n, n))
    prob[1, 2] = prob[2, 1] = 1.0
    inst = make_instance(n, [Commodity(0, 4, 1.0)], p_matrix=prob)
    sol = design([1, 2, 3, 4],
                 [(1, 2), (1, 3), (1, 4), (0, 1), (1, 1)], [(1, 4)])
    sol.hubs = [0, 1, 2, 3, 4]
    cfg = FailureScenarioConfig(kind=FS4, trials=1, seed=4)
    surviving = draw_after_failure(sol, inst, cfg, rng_for(4, 0))
    assert surviving == frozenset({(1, 3), (1, 4), (0, 1), (1, 1)})


# ---------------------------------------------------------- evaluation

def test_evaluate_no_failures_matches_original_cost():
    inst, sol = triangle()
    C = inst.routing_cost_table()
    ok, cost = evaluate_trial(sol, inst, frozenset(sol.edges))
    assert ok
    assert cost == pytest.approx(float(C[0, 1, 3]))


def test_evaluate_reroutes_after_arc_loss():
    inst, sol = triangle()
    ok, cost = evaluate_trial(sol, inst, frozenset({(1, 2), (2, 3)}))
    assert ok
    # cheapest recovery enters at hub 2, takes arc (2,3) and exits at the
    # destination hub 3: w * (acc(0,2) + c(2,3) + acc(3,3))
    assert cost == pytest.approx(2.0 * (1.0 + 0.5 + 0.0))


def test_evaluate_unroutable_when_everything_fails():
    inst, sol = triangle()
    ok, cost = evaluate_trial(sol, inst, frozenset())
    assert not ok and cost is None


# ------------------------------------------------------------- reports

def test_phi_arithmetic_example():
    rep = SimulationReport(kind=FS1, trials=10, tau=0.5, routing_mean=20.0,
                           setup_cost=10.0, direct_cost=8.0,
                           mean_failed_edges=0.0)
    assert rep.phi(0.25) == pytest.approx(25.0)


def test_phi_constant_when_tau_one():
    rep = SimulationReport(kind=FS1, trials=10, tau=1.0, routing_mean=5.0,
                           setup_cost=3.0, direct_cost=8.0,
                           mean_failed_edges=0.0)
    vals = phi_of_q(rep, [0.0, 0.5, 2.0])
    assert vals == pytest.approx([8.0, 8.0, 8.0])


def test_phi_linear_when_tau_zero():
    rep = SimulationReport(kind=FS1, trials=10, tau=0.0, routing_mean=0.0,
                           setup_cost=3.0, direct_cost=8.0,
                           mean_failed_edges=0.0)
    vals = phi_of_q(rep, [0.0, 1.0, 2.0])
    assert vals == pytest.approx([11.0, 19.0, 27.0])
    # slope equals the direct-delivery bill
    assert vals[1] - vals[0] == pytest.approx(8.0)


def test_phi_grid_validation():
    rep = SimulationReport(kind=FS1, trials=1, tau=1.0, routing_mean=0.0,
                           setup_cost=0.0, direct_cost=0.0,
                           mean_failed_edges=0.0)
    with pytest.raises(ValueError):
        phi_of_q(rep, [])
    with pytest.raises(ValueError):
        phi_of_q(rep, [-0.1])


def test_simulate_certain_survival():
    inst, sol = triangle()
    inst.fail_prob[:] = 0.0
    C = inst.routing_cost_table()
    for kind in (FS1, FS2, FS3, FS4):
        rep = simulate(sol, inst, FailureScenarioConfig(kind=kind, trials=50))
        assert rep.tau == 1.0
        assert rep.routing_mean == pytest.approx(float(C[0, 1, 3]))
        assert rep.mean_failed_edges == 0.0


def test_simulate_certain_failure_fs1():
    inst, sol = triangle()
    inst.fail_prob[:] = 1.0
    rep = simulate(sol, inst, FailureScenarioConfig(kind=FS1, trials=50))
    assert rep.tau == 0.0
    assert rep.routing_mean == 0.0
    assert rep.mean_failed_edges == pytest.approx(3.0)
    # exact phi: setup + (1+q)*direct
    assert rep.phi(0.5) == pytest.approx(
        rep.setup_cost + 1.5 * direct_delivery_cost(inst))


def test_simulate_reproducible():
    inst, sol = triangle()
    cfg = FailureScenarioConfig(kind=FS1, trials=400, seed=11)
    assert simulate(sol, inst, cfg) == simulate(sol, inst, cfg)


def test_fs1_failed_edge_count_matches_probability():
    inst, sol = triangle()
    rho = 0.3
    inst.fail_prob[:] = rho
    trials = 4000
    rep = simulate(sol, inst,
                   FailureScenarioConfig(kind=FS1, trials=trials, seed=21))
    m = len(sol.edges)
    sigma = np.sqrt(m * rho * (1 - rho) / trials)
    assert abs(rep.mean_failed_edges - rho * m) < 4 * sigma
    assert sum(rep.failed_edge_histogram.values()) == trials


@pytest.mark.parametrize("kind", [FS1, FS2, FS3, FS4])
def test_tau_monotone_under_pressure_scaling(kind):
    inst, sol = triangle()
    sol = design([1, 2, 3], [(1, 2), (1, 3), (2, 3), (2, 2)], [(1, 3)])
    trials = 3000
    taus = []
    for scale in (0.4, 1.0):
        scaled = make_instance(4, inst.commodities,
                               p_matrix=scale * np.full((4, 4), 0.35))
        rep = simulate(sol, scaled,
                       FailureScenarioConfig(kind=kind, trials=trials,
                                             seed=31))
        taus.append(rep.tau)
    sigma = np.sqrt(0.25 / trials)
    assert taus[0] >= taus[1] - 3 * sigma


def test_config_validation():
    with pytest.raises(ValueError, match="scenario"):
        FailureScenarioConfig(kind="FS9")
    with pytest.raises(ValueError, match="trials"):
        FailureScenarioConfig(trials=0)
    with pytest.raises(ValueError, match="gamma"):
        FailureScenarioConfig(gamma=0.0)


def test_simulate_rejects_empty_backbone():
    inst, _ = triangle()
    sol = design([1], [], [])
    sol.original_arc = [(1, 1)]
    with pytest.raises(ValueError, match="backbone"):
        simulate(sol, inst, FailureScenarioConfig(trials=1))
