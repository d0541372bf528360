"""Monte-Carlo evaluation of a design under inter-hub link failures.

Four failure mechanisms act on the activated backbone only:

* FS1 — every activated edge (loops included) fails independently with its
  own probability.
* FS2 — hubs fail (with the loop probability p_kk) and take their whole
  star with them, loops included.
* FS3 — FS1 on proper edges first; a loop whose hub lost at least one
  incident edge has its failure probability inflated once (capped at 1)
  before the loops are drawn.
* FS4 — FS1 first; any hub that lost at least a γ fraction of its
  incident proper edges then loses its whole star, in a single pass.

Each trial re-routes every commodity through the surviving backbone
(original arc if it survived, otherwise the shortest recovery path).
τ_F is the fraction of fully routable trials; R^F averages routing cost
over those trials only, which is the only place it is defined. Φ(q)
combines set-up, the recoverable part, and direct deliveries at surcharge
q for the rest.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from hubnet.analysis import shortest_recovery
from hubnet.instance import Instance
from hubnet.models import DesignSolution

FS1, FS2, FS3, FS4 = "FS1", "FS2", "FS3", "FS4"
_KINDS = (FS1, FS2, FS3, FS4)


@dataclass(frozen=True)
class FailureScenarioConfig:
    kind: str = FS1
    trials: int = 10000
    gamma: float = 0.75
    loop_inflation: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown failure scenario {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")


@dataclass
class SimulationReport:
    kind: str
    trials: int
    tau: float                    # fraction of fully routable trials
    routing_mean: float           # R^F over successful trials (0 if none)
    setup_cost: float
    direct_cost: float            # Σ w_r · direct o→d unit cost
    mean_failed_edges: float
    failed_edge_histogram: dict = field(default_factory=dict)

    def phi(self, q: float) -> float:
        return (self.setup_cost + self.tau * self.routing_mean
                + (1.0 - self.tau) * (1.0 + q) * self.direct_cost)


def draw_after_failure(sol: DesignSolution, inst: Instance,
                       config: FailureScenarioConfig, trial_rng):
    """Surviving edge set for one trial; edges drawn in canonical order."""
    edges = sorted(sol.edges)
    p = inst.fail_prob
    if config.kind == FS1:
        u = trial_rng.random(len(edges))
        return frozenset(e for e, ue in zip(edges, u) if ue >= p[e])
    if config.kind == FS2:
        hubs = sorted(sol.hubs)
        u = trial_rng.random(len(hubs))
        dead = {k for k, uk in zip(hubs, u) if uk < p[k, k]}
        return frozenset(e for e in edges
                         if e[0] not in dead and e[1] not in dead)
    if config.kind == FS3:
        proper = [e for e in edges if e[0] != e[1]]
        loops = [e for e in edges if e[0] == e[1]]
        u = trial_rng.random(len(proper))
        alive = {e for e, ue in zip(proper, u) if ue >= p[e]}
        lost = set()
        for e in proper:
            if e not in alive:
                lost.update(e)
        u = trial_rng.random(len(loops))
        out = set(alive)
        for (k, _), uk in zip(loops, u):
            pk = p[k, k]
            if k in lost:
                pk = min(1.0, config.loop_inflation * pk)
            if uk >= pk:
                out.add((k, k))
        return frozenset(out)
    # FS4: independent draw, then one round of star removal
    u = trial_rng.random(len(edges))
    alive = {e for e, ue in zip(edges, u) if ue >= p[e]}
    collapsed = set()
    for k in sol.hubs:
        incident = [e for e in edges if e[0] != e[1] and k in e]
        if not incident:
            continue
        failed = sum(1 for e in incident if e not in alive)
        if failed >= config.gamma * len(incident) - 1e-12 and failed > 0:
            collapsed.add(k)
    return frozenset(e for e in alive
                     if e[0] not in collapsed and e[1] not in collapsed)


def evaluate_trial(sol: DesignSolution, inst: Instance, surviving):
    """(all_routable, routing cost) for one surviving edge set."""
    C = inst.routing_cost_table()
    total = 0.0
    for r in range(inst.num_commodities):
        k, l = sol.original_arc[r]
        if (min(k, l), max(k, l)) in surviving:
            total += float(C[r, k, l])
            continue
        path = shortest_recovery(inst, sol.hubs, surviving, r)
        if path is None:
            return False, None
        total += path.cost
    return True, total


def direct_delivery_cost(inst: Instance) -> float:
    """Demand-weighted cost of serving every commodity point-to-point,
    bypassing the backbone entirely."""
    return float(sum(c.demand * inst.base_cost[c.origin, c.dest]
                     for c in inst.commodities))


def simulate(sol: DesignSolution, inst: Instance,
             config: FailureScenarioConfig) -> SimulationReport:
    """Run the Monte-Carlo experiment; deterministic given config.seed.

    Trials use counter-based substreams (seed, trial index), so results
    do not depend on execution order; identical surviving sets share one
    routing evaluation.
    """
    if not sol.edges:
        raise ValueError("simulation needs a non-empty backbone")
    n_edges = len(sol.edges)
    histogram = Counter()
    successes = 0
    routing_sum = 0.0
    failed_sum = 0
    cache: dict = {}
    for trial in range(config.trials):
        rng = np.random.default_rng([config.seed, trial])
        surviving = draw_after_failure(sol, inst, config, rng)
        n_failed = n_edges - len(surviving)
        histogram[n_failed] += 1
        failed_sum += n_failed
        if surviving not in cache:
            cache[surviving] = evaluate_trial(sol, inst, surviving)
        ok, cost = cache[surviving]
        if ok:
            successes += 1
            routing_sum += cost
    tau = successes / config.trials
    return SimulationReport(
        kind=config.kind,
        trials=config.trials,
        tau=tau,
        routing_mean=routing_sum / successes if successes else 0.0,
        setup_cost=sol.hub_cost + sol.edge_cost,
        direct_cost=direct_delivery_cost(inst),
        mean_failed_edges=failed_sum / config.trials,
        failed_edge_histogram=dict(sorted(histogram.items())))


def phi_of_q(report: SimulationReport, q_grid) -> list[float]:
    q_grid = list(q_grid)
    if not q_grid:
        raise ValueError("q grid must be non-empty")
    if any(q < 0 for q in q_grid):
        raise ValueError("surcharges must be nonnegative")
    return [report.phi(q) for q in q_grid]
