"""Brute-force ground truth for tiny instances.

Every design (hub set H, activated edge set E_H ⊆ E[H], loops included) is
enumerated in ascending bitmask order; routing is then separable per
commodity, so the best arcs are picked greedily inside each design. No
pruning beyond the feasibility rules — these functions exist to validate
the MILP stack, so clarity wins over speed. Guarded to n ≤ 6 and at most
12 commodities.
"""

from __future__ import annotations

import numpy as np

from hubnet.instance import Instance
from hubnet.models import M0, M1, M2, DesignSolution, ModelSpec

MAX_N = 6
MAX_COMMODITIES = 12


class OracleSizeError(Exception):
    pass


def _guard(inst: Instance):
    if inst.n > MAX_N:
        raise OracleSizeError(
            f"brute force refuses n={inst.n}; the guard is n <= {MAX_N}")
    if inst.num_commodities > MAX_COMMODITIES:
        raise OracleSizeError(
            f"brute force refuses |R|={inst.num_commodities}; the guard is "
            f"|R| <= {MAX_COMMODITIES}")


def _hub_sets(n):
    for mask in range(1 << n):
        yield [k for k in range(n) if mask >> k & 1]


def _edges_within(hubs):
    return [(k, l) for i, k in enumerate(hubs) for l in hubs[i:]]


def _bit_lists(m):
    """bits[mask] = sorted indices of the set bits of mask."""
    bits = [[]]
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        bits.append(bits[mask & (mask - 1)] + [low])
    return bits


def _min_orientation(C, edges):
    """(R, m) matrix of the cheaper-orientation cost per canonical edge."""
    cols = [np.minimum(C[:, k, l], C[:, l, k]) for (k, l) in edges]
    return np.stack(cols, axis=1) if cols else np.zeros((C.shape[0], 0))


def _best_arc(C_r, edges_sel):
    """Cheapest arc over the activated edges for one commodity."""
    best, arc = None, None
    for (k, l) in edges_sel:
        for (a, b) in ((k, l), (l, k)) if k != l else ((k, k),):
            val = C_r[a, b]
            if best is None or val < best:
                best, arc = val, (a, b)
    return best, arc


def oracle_m0(inst: Instance):
    """Exhaustive optimum of the unprotected model."""
    _guard(inst)
    C = inst.routing_cost_table()
    R = inst.num_commodities
    best_obj = None
    best_design = None
    for hubs in _hub_sets(inst.n):
        edges = _edges_within(hubs)
        m = len(edges)
        hub_cost = sum(inst.hub_setup[k] for k in hubs)
        h = np.array([inst.edge_setup[e] for e in edges])
        minC = _min_orientation(C, edges)
        bits = _bit_lists(m)
        for mask in range(1 << m):
            if R and mask == 0:
                continue
            idx = bits[mask]
            routing = float(minC[:, idx].min(axis=1).sum()) if R else 0.0
            total = hub_cost + float(h[idx].sum()) + routing
            if best_obj is None or total < best_obj - 1e-12:
                best_obj = total
                best_design = (list(hubs), [edges[i] for i in idx])
    return best_obj, _decode_design(inst, ModelSpec(variant=M0),
                                    best_design, best_obj)


def oracle_m1(inst: Instance):
    """Exhaustive optimum of the single-arc-backup model.

    Per commodity the best ordered (original, backup) edge pair with
    distinct underlying edges is chosen by closed-form expected cost."""
    _guard(inst)
    C = inst.routing_cost_table()
    R = inst.num_commodities
    best_obj = None
    best_design = None
    for hubs in _hub_sets(inst.n):
        edges = _edges_within(hubs)
        m = len(edges)
        hub_cost = sum(inst.hub_setup[k] for k in hubs)
        h = np.array([inst.edge_setup[e] for e in edges])
        p = np.array([inst.fail_prob[e] for e in edges])
        minC = _min_orientation(C, edges)
        bits = _bit_lists(m)
        for mask in range(1 << m):
            idx = bits[mask]
            if R and len(idx) < 2:
                continue
            if R:
                sub = minC[:, idx]                        # (R, k)
                psel = p[idx]
                two = np.partition(sub, 1, axis=1)[:, :2]
                arg = np.argmin(sub, axis=1)
                cols = np.arange(len(idx))
                other = np.where(cols[None, :] == arg[:, None],
                                 two[:, 1:2], two[:, 0:1])
                pair = (1.0 - psel)[None, :] * sub + psel[None, :] * other
                routing = float(pair.min(axis=1).sum())
            else:
                routing = 0.0
            total = hub_cost + float(h[idx].sum()) + routing
            if best_obj is None or total < best_obj - 1e-12:
                best_obj = total
                best_design = (list(hubs), [edges[i] for i in idx])
    return best_obj, _decode_design(inst, ModelSpec(variant=M1),
                                    best_design, best_obj)


def _connectivity_ok(n, hubs, edge_set, lam):
    """(2.6)/(2.7) semantics with the loop adjustment: for every S and
    every activated pair split by S, cut(S) + y_kk >= lam must hold for
    each activated k in S; singleton rows for every activated hub."""
    hub_set = set(hubs)
    loops = {k: 1 if (k, k) in edge_set else 0 for k in range(n)}
    proper = [(k, l) for (k, l) in edge_set if k != l]
    for k in hubs:
        cut_k = sum(1 for (a, b) in proper if k in (a, b))
        if cut_k + loops[k] < lam:
            return False
    for mask in range(1, 1 << n):
        S = {k for k in range(n) if mask >> k & 1}
        inside = hub_set & S
        if not inside or hub_set <= S:
            continue
        cut = sum(1 for (a, b) in proper if (a in S) != (b in S))
        if any(cut + loops[k] < lam for k in inside):
            return False
    return True


def oracle_m2(inst: Instance, lam: int, beta: float):
    """Exhaustive optimum of the λ-connected model."""
    _guard(inst)
    C = inst.routing_cost_table()
    coef = C * (1.0 + beta * inst.fail_prob)[None, :, :]
    R = inst.num_commodities
    best_obj = None
    best_design = None
    for hubs in _hub_sets(inst.n):
        edges = _edges_within(hubs)
        m = len(edges)
        hub_cost = sum(inst.hub_setup[k] for k in hubs)
        h = np.array([inst.edge_setup[e] for e in edges])
        minC = _min_orientation(coef, edges)
        bits = _bit_lists(m)
        for mask in range(1 << m):
            idx = bits[mask]
            if R and not idx:
                continue
            sel = [edges[i] for i in idx]
            if not _connectivity_ok(inst.n, hubs, set(sel), lam):
                continue
            routing = float(minC[:, idx].min(axis=1).sum()) if R else 0.0
            total = hub_cost + float(h[idx].sum()) + routing
            if best_obj is None or total < best_obj - 1e-12:
                best_obj = total
                best_design = (list(hubs), sel)
    if best_obj is None:
        return None, None
    return best_obj, _decode_design(
        inst, ModelSpec(variant=M2, lam=lam, beta=beta),
        best_design, best_obj)


def _decode_design(inst, spec, design, objective):
    if design is None:
        return None
    hubs, edges = design
    C = inst.routing_cost_table()
    p = inst.fail_prob
    R = inst.num_commodities
    original = []
    backup = [] if spec.variant == M1 else None
    for r in range(R):
        if spec.variant == M2:
            C_r = C[r] * (1.0 + spec.beta * p)
            _, arc = _best_arc(C_r, edges)
            original.append(arc)
        elif spec.variant == M0:
            _, arc = _best_arc(C[r], edges)
            original.append(arc)
        else:
            best = None
            pick = None
            for e1 in edges:
                for e2 in edges:
                    if e1 == e2:
                        continue
                    c1, a1 = _best_arc(C[r], [e1])
                    c2, a2 = _best_arc(C[r], [e2])
                    val = (1.0 - p[e1]) * c1 + p[e1] * c2
                    if best is None or val < best - 1e-15:
                        best, pick = val, (a1, a2)
            original.append(pick[0])
            backup.append(pick[1])
    hub_cost = float(sum(inst.hub_setup[k] for k in hubs))
    edge_cost = float(sum(inst.edge_setup[e] for e in edges))
    return DesignSolution(
        hubs=list(hubs), edges=list(edges), original_arc=original,
        backup_arc=backup, objective=float(objective),
        hub_cost=hub_cost, edge_cost=edge_cost,
        routing_cost=float(objective) - hub_cost - edge_cost,
        spec=spec, instance_hash=inst.content_hash())
