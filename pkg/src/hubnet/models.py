"""MILP encodings of the hub network design models.

Three families share the design variables z_k (hub open), y_kl (hub edge
activated, loops included) and x^r_kl (original routing arc):

* M0 — no failure terms; plain expected routing cost.
* M1 — explicit single-arc backup per commodity (variables x̄) with the
  expected cost linearized through P^r_kl, plus a clustered reformulation
  when failure probabilities take few distinct values.
* M2 — λ-connected backbone; backup paths stay implicit, routing costs are
  inflated to (1 + β p_kl) C^r_kl, and connectivity is enforced lazily
  through cutset rows separated by :mod:`hubnet.cuts`.

Builders are pure functions of (instance, spec); `decode` turns solver
output back into a design and re-derives the objective from first
principles as a guard against formulation bugs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hubnet import cuts
from hubnet.instance import Instance
from hubnet.milp.problem import EQ, GE, LE, MilpProblem

M0, M1, M1_CLUSTERED, M2 = "M0", "M1", "M1_clustered", "M2"
_VARIANTS = (M0, M1, M1_CLUSTERED, M2)


class ModelError(Exception):
    pass


class DecodeError(ModelError):
    """Solver output violates a design invariant; names the constraint."""


@dataclass(frozen=True)
class ModelSpec:
    variant: str = M0
    lam: int = 2                     # M2 only
    beta: float = 1.0                # M2 only
    apply_prop1_reduction: bool = False
    apply_marin_inequalities: bool = True
    apply_P_bound: bool = True
    tight_linearization: bool = False
    cluster_cap: int = 16

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ModelError(f"unknown variant {self.variant!r}")
        if self.variant == M2 and self.lam < 2:
            raise ModelError("M2 requires connectivity level >= 2")
        if self.beta < 0:
            raise ModelError("beta must be nonnegative")


def _edges(n):
    """Canonical edge list: unordered pairs k <= l, loops included."""
    return [(k, l) for k in range(n) for l in range(k, n)]


def _arcs(n):
    """Ordered arcs: both orientations of proper edges plus loops (k,k)."""
    return [(k, l) for k in range(n) for l in range(n)]


def _check_commodities(inst: Instance):
    for i, com in enumerate(inst.commodities):
        if com.origin == com.dest:
            raise ModelError(
                f"commodity {i} has origin == destination ({com.origin}); "
                "self-demands are not modeled"
            )


def _add_design_vars(prob: MilpProblem, inst: Instance):
    n = inst.n
    z = {k: prob.add_var(f"z[{k}]", integer=True,
                         obj=float(inst.hub_setup[k]), group="z", key=k)
         for k in range(n)}
    y = {(k, l): prob.add_var(f"y[{k},{l}]", integer=True,
                              obj=float(inst.edge_setup[k, l]),
                              group="y", key=(k, l))
         for (k, l) in _edges(n)}
    return z, y


def _add_edge_hub_linking(prob, z, y, n):
    for (k, l) in _edges(n):
        prob.add_constr({y[(k, l)]: 1.0, z[k]: -1.0}, LE, 0.0,
                        name=f"edge_hub[{k},{l},{k}]")
        if k != l:
            prob.add_constr({y[(k, l)]: 1.0, z[l]: -1.0}, LE, 0.0,
                            name=f"edge_hub[{k},{l},{l}]")


def _add_routing_vars(prob, inst, coef, tag="x"):
    """One binary per commodity and arc with objective coefficient
    coef[r, k, l]; returns {(r, k, l): column}."""
    out = {}
    for r in range(inst.num_commodities):
        for (k, l) in _arcs(inst.n):
            out[(r, k, l)] = prob.add_var(
                f"{tag}[{r},{k},{l}]", integer=True,
                obj=float(coef[r, k, l]), group=tag, key=(r, k, l))
    return out


def _add_one_arc_rows(prob, inst, x, tag):
    for r in range(inst.num_commodities):
        row = {x[(r, k, l)]: 1.0 for (k, l) in _arcs(inst.n)}
        prob.add_constr(row, EQ, 1.0, name=f"one_{tag}[{r}]")


def _add_marin_rows(prob, inst, x, z, tag):
    # per hub k: loop arc plus all proper arcs touching k use at most z_k
    for r in range(inst.num_commodities):
        for k in range(inst.n):
            row = {x[(r, k, k)]: 1.0}
            for l in range(inst.n):
                if l != k:
                    row[x[(r, k, l)]] = 1.0
                    row[x[(r, l, k)]] = 1.0
            row[z[k]] = -1.0
            prob.add_constr(row, LE, 0.0, name=f"marin_{tag}[{r},{k}]")


def build_m0(inst: Instance) -> MilpProblem:
    """Unprotected model: one routing arc per commodity, no failure terms."""
    _check_commodities(inst)
    prob = MilpProblem()
    z, y = _add_design_vars(prob, inst)
    C = inst.routing_cost_table()
    x = _add_routing_vars(prob, inst, C)
    _add_one_arc_rows(prob, inst, x, "arc")
    for r in range(inst.num_commodities):
        for (k, l) in _edges(inst.n):
            if k == l:
                row = {x[(r, k, k)]: 1.0, y[(k, k)]: -1.0}
            else:
                row = {x[(r, k, l)]: 1.0, x[(r, l, k)]: 1.0, y[(k, l)]: -1.0}
            prob.add_constr(row, LE, 0.0, name=f"use_edge[{r},{k},{l}]")
    _add_edge_hub_linking(prob, z, y, inst.n)
    return prob


def build_m1(inst: Instance, spec: ModelSpec | None = None) -> MilpProblem:
    """Single-arc backup model with the linearized expected routing cost."""
    spec = spec or ModelSpec(variant=M1)
    _check_commodities(inst)
    prob = MilpProblem()
    n, R = inst.n, inst.num_commodities
    z, y = _add_design_vars(prob, inst)
    C = inst.routing_cost_table()
    p = inst.fail_prob
    x = _add_routing_vars(prob, inst, C * (1.0 - p)[None, :, :])
    xb = _add_routing_vars(prob, inst, np.zeros_like(C), tag="xbar")
    P = {}
    for r in range(R):
        for (k, l) in _arcs(n):
            P[(r, k, l)] = prob.add_var(
                f"P[{r},{k},{l}]", lb=0.0, ub=1.0,
                obj=float(C[r, k, l]), group="P", key=(r, k, l))

    _add_one_arc_rows(prob, inst, x, "arc")
    _add_one_arc_rows(prob, inst, xb, "backup")
    _add_no_reuse_rows(prob, inst, x, xb, y)
    _add_edge_hub_linking(prob, z, y, n)
    if spec.apply_marin_inequalities:
        _add_marin_rows(prob, inst, x, z, "x")
        _add_marin_rows(prob, inst, xb, z, "xbar")

    for r in range(R):
        for (k, l) in _arcs(n):
            row = {P[(r, k, l)]: 1.0, xb[(r, k, l)]: -1.0}
            for (k2, l2) in _arcs(n):
                if spec.tight_linearization and {k2, l2} == {k, l}:
                    continue
                if p[k2, l2] != 0.0:
                    row[x[(r, k2, l2)]] = row.get(x[(r, k2, l2)], 0.0) \
                        - float(p[k2, l2])
            prob.add_constr(row, GE, -1.0, name=f"linP[{r},{k},{l}]")
    if spec.apply_P_bound:
        pmax = float(np.max(p))
        for r in range(R):
            row = {P[(r, k, l)]: 1.0 for (k, l) in _arcs(n)}
            prob.add_constr(row, LE, pmax, name=f"P_budget[{r}]")

    if spec.apply_prop1_reduction:
        _apply_prop1(prob, inst, C, x, xb, P)
    return prob


def _add_no_reuse_rows(prob, inst, x, xb, y):
    # original and backup may not share an inter-hub edge
    for r in range(inst.num_commodities):
        for (k, l) in _edges(inst.n):
            if k == l:
                row = {x[(r, k, k)]: 1.0, xb[(r, k, k)]: 1.0,
                       y[(k, k)]: -1.0}
            else:
                row = {x[(r, k, l)]: 1.0, x[(r, l, k)]: 1.0,
                       xb[(r, k, l)]: 1.0, xb[(r, l, k)]: 1.0,
                       y[(k, l)]: -1.0}
            prob.add_constr(row, LE, 0.0, name=f"no_reuse[{r},{k},{l}]")


def _apply_prop1(prob, inst, C, x, xb, P=None):
    """Keep the cheaper orientation of every proper edge per commodity;
    loops have a single orientation and are never touched."""
    for r in range(inst.num_commodities):
        for k in range(inst.n):
            for l in range(k + 1, inst.n):
                drop = (l, k) if C[r, k, l] <= C[r, l, k] else (k, l)
                prob.fix_var(x[(r,) + drop], 0.0)
                prob.fix_var(xb[(r,) + drop], 0.0)
                if P is not None:
                    prob.fix_var(P[(r,) + drop], 0.0)


def build_m1_clustered(inst: Instance,
                       spec: ModelSpec | None = None) -> MilpProblem:
    """M1 with P replaced by per-cluster variables ξ when failure
    probabilities take K distinct values; K=1 collapses to the closed form
    (1−ρ)x + ρx̄ with no auxiliary variables at all."""
    spec = spec or ModelSpec(variant=M1_CLUSTERED)
    _check_commodities(inst)
    n, R = inst.n, inst.num_commodities
    edge_p = {e: float(inst.fail_prob[e]) for e in _edges(n)}
    values = sorted(set(edge_p.values()))
    K = len(values)
    if K > spec.cluster_cap:
        raise ModelError(
            f"{K} distinct failure probabilities exceed the cluster cap "
            f"({spec.cluster_cap}); use build_m1 for this instance"
        )
    cluster_of = {}
    for (k, l), val in edge_p.items():
        s = values.index(val)
        cluster_of[(k, l)] = s
        cluster_of[(l, k)] = s

    prob = MilpProblem()
    z, y = _add_design_vars(prob, inst)
    C = inst.routing_cost_table()

    if K == 1:
        rho = values[0]
        x = _add_routing_vars(prob, inst, C * (1.0 - rho))
        xb = _add_routing_vars(prob, inst, C * rho, tag="xbar")
    else:
        one_minus = np.empty((n, n))
        for (k, l) in _arcs(n):
            one_minus[k, l] = 1.0 - values[cluster_of[(k, l)]]
        x = _add_routing_vars(prob, inst, C * one_minus[None, :, :])
        xb = _add_routing_vars(prob, inst, np.zeros_like(C), tag="xbar")

    _add_one_arc_rows(prob, inst, x, "arc")
    _add_one_arc_rows(prob, inst, xb, "backup")
    _add_no_reuse_rows(prob, inst, x, xb, y)
    _add_edge_hub_linking(prob, z, y, n)
    if spec.apply_marin_inequalities:
        _add_marin_rows(prob, inst, x, z, "x")
        _add_marin_rows(prob, inst, xb, z, "xbar")

    if K > 1:
        xi = {}
        for r in range(R):
            for (k, l) in _arcs(n):
                for s in range(K):
                    xi[(r, k, l, s)] = prob.add_var(
                        f"xi[{r},{k},{l},{s}]", lb=0.0, ub=1.0,
                        obj=float(values[s] * C[r, k, l]),
                        group="xi", key=(r, k, l, s))
        for r in range(R):
            for (k, l) in _arcs(n):
                for s in range(K):
                    row = {xi[(r, k, l, s)]: 1.0, xb[(r, k, l)]: -1.0}
                    for (k2, l2) in _arcs(n):
                        if cluster_of[(k2, l2)] == s:
                            row[x[(r, k2, l2)]] = -1.0
                    prob.add_constr(row, GE, -1.0,
                                    name=f"xi_lin[{r},{k},{l},{s}]")
                row = {xi[(r, k, l, s)]: 1.0 for s in range(K)}
                row[xb[(r, k, l)]] = -1.0
                prob.add_constr(row, EQ, 0.0, name=f"xi_sum[{r},{k},{l}]")

    if spec.apply_prop1_reduction:
        _apply_prop1(prob, inst, C, x, xb)
    return prob


def build_m2(inst: Instance, spec: ModelSpec):
    """λ-connected model; returns (problem, separation callback).

    The callback is a closure over :func:`hubnet.cuts.separate` mapping
    SeparationResults onto rows over this problem's columns; register it
    with the solver so connectivity rows are added lazily.
    """
    if spec.variant != M2:
        raise ModelError("build_m2 requires an M2 spec")
    if inst.n < spec.lam:
        raise ModelError(
            f"connectivity level {spec.lam} is infeasible with only "
            f"{inst.n} potential hubs"
        )
    _check_commodities(inst)
    prob = MilpProblem()
    n = inst.n
    z, y = _add_design_vars(prob, inst)
    C = inst.routing_cost_table()
    coef = C * (1.0 + spec.beta * inst.fail_prob)[None, :, :]
    x = _add_routing_vars(prob, inst, coef)
    _add_one_arc_rows(prob, inst, x, "arc")
    for r in range(inst.num_commodities):
        for (k, l) in _edges(n):
            if k == l:
                row = {x[(r, k, k)]: 1.0, y[(k, k)]: -1.0}
            else:
                row = {x[(r, k, l)]: 1.0, x[(r, l, k)]: 1.0, y[(k, l)]: -1.0}
            prob.add_constr(row, LE, 0.0, name=f"use_edge[{r},{k},{l}]")
    _add_edge_hub_linking(prob, z, y, n)

    lam = float(spec.lam)
    for k in range(n):
        row = {y[(min(k, l), max(k, l))]: 1.0 for l in range(n) if l != k}
        row[y[(k, k)]] = row.get(y[(k, k)], 0.0) + 1.0
        row[z[k]] = -lam
        prob.add_constr(row, GE, 0.0, name=f"connect_singleton[{k}]")

    def cutset_row(result: cuts.SeparationResult):
        side = result.cut_set
        row = {}
        for u in side:
            for v in range(n):
                if v not in side:
                    row[y[(min(u, v), max(u, v))]] = 1.0
        kk = y[(result.hub, result.hub)]
        row[kk] = row.get(kk, 0.0) + 1.0
        if result.form == cuts.SMALL_S_FORM:
            row[z[result.hub]] = row.get(z[result.hub], 0.0) - lam
            return row, GE, 0.0
        row[z[result.hub]] = row.get(z[result.hub], 0.0) - lam
        row[z[result.partner]] = row.get(z[result.partner], 0.0) - lam
        return row, GE, -lam

    def callback(point):
        z_bar = point["z"]
        y_bar = point["y"]
        found = cuts.separate(z_bar, y_bar, spec.lam)
        return [cutset_row(res) for res in found]

    return prob, callback


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

@dataclass
class DesignSolution:
    hubs: list
    edges: list                      # canonical (k, l) with k <= l, loops incl.
    original_arc: list               # per commodity (k, l)
    backup_arc: list | None          # per commodity, M1 variants only
    objective: float
    hub_cost: float
    edge_cost: float
    routing_cost: float
    spec: ModelSpec
    instance_hash: str

    def to_document(self) -> dict:
        return {
            "variant": self.spec.variant,
            "lam": self.spec.lam,
            "beta": self.spec.beta,
            "hubs": list(self.hubs),
            "edges": [list(e) for e in self.edges],
            "original_arc": [list(a) for a in self.original_arc],
            "backup_arc": ([list(a) for a in self.backup_arc]
                           if self.backup_arc is not None else None),
            "objective": self.objective,
            "hub_cost": self.hub_cost,
            "edge_cost": self.edge_cost,
            "routing_cost": self.routing_cost,
            "instance_hash": self.instance_hash,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "DesignSolution":
        spec = ModelSpec(variant=doc["variant"], lam=doc.get("lam", 2),
                         beta=doc.get("beta", 1.0))
        return cls(
            hubs=list(doc["hubs"]),
            edges=[tuple(e) for e in doc["edges"]],
            original_arc=[tuple(a) for a in doc["original_arc"]],
            backup_arc=([tuple(a) for a in doc["backup_arc"]]
                        if doc.get("backup_arc") is not None else None),
            objective=float(doc["objective"]),
            hub_cost=float(doc["hub_cost"]),
            edge_cost=float(doc["edge_cost"]),
            routing_cost=float(doc["routing_cost"]),
            spec=spec,
            instance_hash=doc.get("instance_hash", ""),
        )


def _picked(group, values, tol=1e-6):
    return {key for key, idx in group.items() if values[idx] > 1.0 - tol}


def decode(inst: Instance, spec: ModelSpec, solution,
           problem: MilpProblem | None = None) -> DesignSolution:
    """Round, validate and re-price a solver solution.

    Raises :class:`DecodeError` naming the violated invariant when the
    solution is structurally inconsistent or the recomputed objective
    disagrees with the solver's by more than 1e-5.
    """
    if solution.x is None:
        raise DecodeError("solution carries no incumbent to decode")
    prob = problem if problem is not None else solution.problem
    if prob is None:
        raise DecodeError("solution does not reference its problem")
    vals = solution.x
    hubs = sorted(_picked(prob.var_groups["z"], vals))
    edges = sorted(_picked(prob.var_groups["y"], vals))
    R = inst.num_commodities

    def arcs_of(tag):
        chosen = [None] * R
        for (r, k, l) in _picked(prob.var_groups.get(tag, {}), vals):
            if chosen[r] is not None:
                raise DecodeError(f"commodity {r}: two {tag} arcs selected")
            chosen[r] = (k, l)
        missing = [r for r in range(R) if chosen[r] is None]
        if missing:
            raise DecodeError(
                f"commodity {missing[0]}: no {tag} arc selected")
        return chosen

    original = arcs_of("x")
    backup = arcs_of("xbar") if "xbar" in prob.var_groups else None

    edge_set = set(edges)
    hub_set = set(hubs)
    for r in range(R):
        for label, arc in (("original", original[r]),
                           ("backup", backup[r] if backup else None)):
            if arc is None:
                continue
            k, l = arc
            e = (min(k, l), max(k, l))
            if e not in edge_set:
                raise DecodeError(
                    f"commodity {r}: {label} arc {arc} uses inactive edge "
                    f"{e} (edge-use linking violated)")
            if k not in hub_set or l not in hub_set:
                raise DecodeError(
                    f"commodity {r}: {label} arc {arc} touches a closed hub "
                    "(edge-hub linking violated)")
        if backup is not None:
            k, l = original[r]
            k2, l2 = backup[r]
            if (min(k, l), max(k, l)) == (min(k2, l2), max(k2, l2)):
                raise DecodeError(
                    f"commodity {r}: backup arc reuses the original edge "
                    "(non-coincidence violated)")

    hub_cost = float(sum(inst.hub_setup[k] for k in hubs))
    edge_cost = float(sum(inst.edge_setup[k, l] for (k, l) in edges))
    routing = expected_routing_cost(inst, spec, original, backup)

    total = hub_cost + edge_cost + routing
    if abs(total - solution.objective) > 1e-5:
        raise DecodeError(
            f"recomputed objective {total:.8f} disagrees with solver value "
            f"{solution.objective:.8f}")
    return DesignSolution(hubs, edges, original, backup, total,
                          hub_cost, edge_cost, routing, spec,
                          inst.content_hash())


def expected_routing_cost(inst: Instance, spec: ModelSpec,
                          original, backup=None) -> float:
    """Closed-form expected routing cost of a decoded design."""
    C = inst.routing_cost_table()
    p = inst.fail_prob
    total = 0.0
    for r in range(inst.num_commodities):
        k, l = original[r]
        if spec.variant == M0:
            total += C[r, k, l]
        elif spec.variant == M2:
            total += (1.0 + spec.beta * p[k, l]) * C[r, k, l]
        else:
            k2, l2 = backup[r]
            total += (1.0 - p[k, l]) * C[r, k, l] + p[k, l] * C[r, k2, l2]
    return float(total)
