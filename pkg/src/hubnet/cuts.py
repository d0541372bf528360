"""Exact separation of connectivity cutset rows over a fractional point.

Given a relaxation point (z̄, ȳ) the separator builds the support graph of
positive inter-hub edges, computes a Gomory-Hu tree of it with Gusfield's
algorithm (one max-flow per non-root node, all in the original graph), and
examines the recorded min-cuts from both sides. A cut S is violated for a
hub k̄ ∈ S when ȳ(δ(S)) + ȳ_k̄k̄ < λ z̄_k̄; the emitted inequality is

    y(δ(S)) + y_k̄k̄ ≥ λ z_k̄                      (small_S_form, |S| ≤ λ−1)
    y(δ(S)) + y_k̄k̄ ≥ λ (z_k̄ + z_l̄ − 1)          (pairwise_form, otherwise)

with l̄ the best partner outside S. The pairwise row is only emitted when
it is itself violated; the small-S row is valid unconditionally for
|S| ≤ λ−1 but can cut feasible designs for larger S, hence the split.
Loops never belong to δ(S); they enter through the ȳ_kk term.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

SMALL_S_FORM = "small_S_form"
PAIRWISE_FORM = "pairwise_form"

DEFAULT_THRESHOLD = 1e-7


@dataclass
class SupportGraph:
    """Undirected capacitated graph of edges with ȳ_kl above threshold.

    Loops are excluded from the edge set; per-node loop values and z̄
    values ride along for the violation tests.
    """

    nodes: list
    edges: dict  # canonical (u, v) with u < v -> capacity
    z: dict
    loop: dict
    adj: dict = field(default_factory=dict)

    def __post_init__(self):
        self.adj = defaultdict(list)
        for (u, v), cap in self.edges.items():
            self.adj[u].append((v, cap))
            self.adj[v].append((u, cap))

    @classmethod
    def from_point(cls, z_bar, y_bar, threshold=DEFAULT_THRESHOLD):
        edges = {}
        loops = {}
        for (u, v), val in y_bar.items():
            if u == v:
                loops[u] = val
                continue
            key = (u, v) if u < v else (v, u)
            edges[key] = val
        edges = {e: c for e, c in edges.items() if c > threshold}
        nodes = sorted({u for e in edges for u in e})
        return cls(nodes, edges, dict(z_bar), loops)

    def cut_value(self, side) -> float:
        side = set(side)
        return sum(c for (u, v), c in self.edges.items()
                   if (u in side) != (v in side))


def max_flow(graph: SupportGraph, s, t):
    """Edmonds-Karp on the undirected support graph.

    Returns (value, S) where S is the source side of a minimum cut.
    Disconnected endpoints give value 0 and S = component of s.
    """
    if s == t:
        raise ValueError("max_flow endpoints must differ")
    res = defaultdict(dict)
    for (u, v), cap in graph.edges.items():
        res[u][v] = res[u].get(v, 0.0) + cap
        res[v][u] = res[v].get(u, 0.0) + cap
    value = 0.0
    while True:
        # BFS for a shortest augmenting path in the residual graph
        prev = {s: None}
        queue = deque([s])
        while queue and t not in prev:
            u = queue.popleft()
            for v, cap in res[u].items():
                if cap > 1e-12 and v not in prev:
                    prev[v] = u
                    queue.append(v)
        if t not in prev:
            return value, frozenset(prev)
        bottleneck = float("inf")
        v = t
        while prev[v] is not None:
            u = prev[v]
            bottleneck = min(bottleneck, res[u][v])
            v = u
        v = t
        while prev[v] is not None:
            u = prev[v]
            res[u][v] -= bottleneck
            res[v][u] = res[v].get(u, 0.0) + bottleneck
            v = u
        value += bottleneck


@dataclass
class GomoryHuTree:
    """Flow-equivalent tree: min flow value along the u–v tree path equals
    the u–v max-flow of the support graph. cut_side[i] is the recorded
    minimum cut (containing i) certifying flow[i] between i and parent[i]."""

    nodes: list
    parent: dict
    flow: dict
    cut_side: dict

    def pair_value(self, u, v) -> float:
        path_u = self._to_root(u)
        path_v = self._to_root(v)
        common = set(path_u) & set(path_v)
        best = float("inf")
        for node in path_u:
            if node in common:
                break
            best = min(best, self.flow[node])
        for node in path_v:
            if node in common:
                break
            best = min(best, self.flow[node])
        return best

    def _to_root(self, u):
        path = [u]
        while self.parent[u] is not None:
            u = self.parent[u]
            path.append(u)
        return path


def gomory_hu(graph: SupportGraph) -> GomoryHuTree:
    """Gusfield's construction: all max-flows run in the original graph."""
    nodes = graph.nodes
    if len(nodes) <= 1:
        return GomoryHuTree(list(nodes),
                            {n: None for n in nodes}, {}, {})
    root = nodes[0]
    parent = {n: root for n in nodes}
    parent[root] = None
    flow = {}
    cut_side = {}
    for i, node in enumerate(nodes[1:], start=1):
        value, side = max_flow(graph, node, parent[node])
        flow[node] = value
        cut_side[node] = frozenset(side)
        for other in nodes[i + 1:]:
            if parent[other] == parent[node] and other in side:
                parent[other] = node
    return GomoryHuTree(list(nodes), parent, flow, cut_side)


@dataclass
class SeparationResult:
    cut_set: frozenset
    hub: object            # k̄ ∈ S
    partner: object        # l̄ ∉ S, None for the small-S form
    form: str              # SMALL_S_FORM | PAIRWISE_FORM
    violation: float


def separate(z_bar, y_bar, lam, tolerance=1e-6,
             threshold=DEFAULT_THRESHOLD) -> list[SeparationResult]:
    """All violated cutset rows found by the Gomory-Hu scan plus the
    singleton rows; empty list means no examined inequality is violated."""
    if lam < 2:
        raise ValueError("connectivity level must be at least 2")
    loops = {u: val for (u, v), val in y_bar.items() if u == v}
    graph = SupportGraph.from_point(z_bar, y_bar, threshold)

    results = []
    seen = set()

    def emit(side, cut_val):
        members = sorted(side)
        hub = min(members,
                  key=lambda k: (-(lam * z_bar.get(k, 0.0)
                                   - loops.get(k, 0.0)), k))
        slack = lam * z_bar.get(hub, 0.0) - loops.get(hub, 0.0) - cut_val
        if slack <= tolerance:
            return
        if len(members) <= lam - 1:
            key = (frozenset(side), hub, None, SMALL_S_FORM)
            if key not in seen:
                seen.add(key)
                results.append(SeparationResult(
                    frozenset(side), hub, None, SMALL_S_FORM, slack))
            return
        outside = [l for l in z_bar if l not in side]
        if not outside:
            return
        partner = min(outside, key=lambda l: (-z_bar[l], l))
        viol = (lam * (z_bar.get(hub, 0.0) + z_bar[partner] - 1.0)
                - loops.get(hub, 0.0) - cut_val)
        if viol > tolerance:
            key = (frozenset(side), hub, partner, PAIRWISE_FORM)
            if key not in seen:
                seen.add(key)
                results.append(SeparationResult(
                    frozenset(side), hub, partner, PAIRWISE_FORM, viol))

    # singleton rows, including hubs isolated from the support graph
    incident = defaultdict(float)
    for (u, v), cap in graph.edges.items():
        incident[u] += cap
        incident[v] += cap
    for k in sorted(z_bar):
        if z_bar[k] > threshold:
            emit({k}, incident[k])

    if len(graph.nodes) >= 2:
        tree = gomory_hu(graph)
        all_nodes = frozenset(graph.nodes)
        for child, side in tree.cut_side.items():
            value = tree.flow[child]
            emit(side, value)
            emit(all_nodes - side, value)
    return results
