"""Post-solve analytics: backup-path recovery, density indices, and
price-of-robustness comparisons.

Backup recovery answers the operational question for λ-connected designs:
when the original inter-hub edge of a commodity fails, the replacement is
the shortest origin→destination path through the surviving backbone. The
path may traverse several inter-hub edges; visiting a single hub counts as
transshipment there and therefore requires that hub's surviving loop and
pays its handling cost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from hubnet.instance import Instance
from hubnet.models import DesignSolution


@dataclass(frozen=True)
class RecoveredPath:
    nodes: tuple          # (origin, hub, ..., hub, destination)
    cost: float           # demand-weighted routing cost


@dataclass(frozen=True)
class NetworkMetrics:
    num_hubs: int
    num_links: int        # loops included
    num_loops: int
    i1: float
    i2: float | None      # undefined for a single hub
    routing_share: float  # percentages of the objective
    hub_share: float
    link_share: float


def shortest_recovery(inst: Instance, hubs, edges, r: int):
    """Shortest o_r → d_r path through the given backbone.

    `edges` are the surviving hub edges (canonical (k, l), loops included).
    Every path must traverse at least one inter-hub arc; the loop (h, h)
    serves as that arc for single-hub transshipment. Returns a
    RecoveredPath or None. Deterministic: Dijkstra with lexicographic
    tie-breaking on (hub index, state).
    """
    com = inst.commodities[r]
    o, d, w = com.origin, com.dest, com.demand
    hubs = sorted(hubs)
    if not hubs:
        return None
    adj = {h: [] for h in hubs}
    for (k, l) in edges:
        if k == l:
            adj[k].append((k, float(inst.interhub_cost[k, k])))
        else:
            adj[k].append((l, float(inst.interhub_cost[k, l])))
            adj[l].append((k, float(inst.interhub_cost[l, k])))
    # state 0: at hub, no inter-hub arc used yet; state 1: arc used
    dist = {}
    parent = {}
    heap = []
    for h in hubs:
        c = float(inst.access_cost[o, h])
        dist[(h, 0)] = c
        parent[(h, 0)] = None
        heapq.heappush(heap, (c, h, 0))
    while heap:
        c, h, used = heapq.heappop(heap)
        if c > dist.get((h, used), float("inf")):
            continue
        for (g, step) in adj[h]:
            state = (g, 1)
            nc = c + step
            if nc < dist.get(state, float("inf")) - 1e-15:
                dist[state] = nc
                parent[state] = (h, used)
                heapq.heappush(heap, (nc, g, 1))
    best = None
    for h in hubs:
        if (h, 1) in dist:
            total = dist[(h, 1)] + float(inst.access_cost[h, d])
            if best is None or total < best[0] - 1e-15:
                best = (total, h)
    if best is None:
        return None
    total, h = best
    chain = []
    state = (h, 1)
    while state is not None:
        # a loop traversal repeats the hub; collapse it for presentation
        if not chain or chain[-1] != state[0]:
            chain.append(state[0])
        state = parent[state]
    chain.reverse()
    return RecoveredPath(nodes=(o, *chain, d), cost=w * total)


def recover_backup_path(sol: DesignSolution, inst: Instance, r: int,
                        failed_edge) -> RecoveredPath | None:
    """Backup path for commodity r after one hub edge fails."""
    if not 0 <= r < inst.num_commodities:
        raise IndexError(f"commodity index {r} out of range")
    k, l = failed_edge
    failed = (min(k, l), max(k, l))
    surviving = [e for e in sol.edges if e != failed]
    return shortest_recovery(inst, sol.hubs, surviving, r)


def network_metrics(sol: DesignSolution) -> NetworkMetrics:
    """Backbone density indices and objective shares.

    I1 relates activated links (loops included) to all possible links
    among the hubs; I2 does the same for proper links only and is
    undefined with fewer than two hubs.
    """
    nh = len(sol.hubs)
    if nh == 0:
        raise ValueError("metrics are undefined for an empty design")
    nl = len(sol.edges)
    loops = sum(1 for (k, l) in sol.edges if k == l)
    i1 = 2.0 * nl / (nh * (nh + 1))
    i2 = 2.0 * (nl - loops) / (nh * (nh - 1)) if nh >= 2 else None
    total = sol.objective
    if total <= 0:
        raise ValueError("metrics need a positive objective")
    return NetworkMetrics(
        num_hubs=nh, num_links=nl, num_loops=loops, i1=i1, i2=i2,
        routing_share=100.0 * sol.routing_cost / total,
        hub_share=100.0 * sol.hub_cost / total,
        link_share=100.0 * sol.edge_cost / total)


def price_of_robustness(base: DesignSolution,
                        protected: DesignSolution) -> float | None:
    """Percent extra set-up cost of a protected design over the
    unprotected optimum; None when the base has no set-up cost."""
    base_setup = base.hub_cost + base.edge_cost
    prot_setup = protected.hub_cost + protected.edge_cost
    if base_setup == 0:
        return None
    return 100.0 * (prot_setup - base_setup) / base_setup
