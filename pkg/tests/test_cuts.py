import itertools

import numpy as np
import pytest

from hubnet.cuts import (
    PAIRWISE_FORM,
    SMALL_S_FORM,
    GomoryHuTree,
    SupportGraph,
    gomory_hu,
    max_flow,
    separate,
)


def _graph(edges, z=None, loops=None):
    y = {e: c for e, c in edges.items()}
    if loops:
        y.update({(k, k): v for k, v in loops.items()})
    nodes = {u for e in edges for u in e}
    z = z or {u: 1.0 for u in nodes}
    return SupportGraph.from_point(z, y)


TRIANGLE = {(1, 2): 0.5, (1, 3): 0.5, (2, 3): 1.0}


def test_max_flow_triangle():
    g = _graph(TRIANGLE)
    # cuts around node 1: {1} -> 1.0, {1,3} -> 1.5
    value, side = max_flow(g, 1, 2)
    assert value == pytest.approx(1.0)
    assert 1 in side and 2 not in side
    assert g.cut_value(side) == pytest.approx(1.0)


def test_max_flow_triangle_second_pair():
    g = _graph(TRIANGLE)
    value, side = max_flow(g, 2, 3)
    assert value == pytest.approx(1.5)
    assert g.cut_value(side) == pytest.approx(1.5)


def test_max_flow_disconnected():
    g = SupportGraph.from_point({1: 1.0, 2: 1.0},
                                {(1, 2): 0.0})  # below threshold
    assert g.nodes == []
    g = _graph({(1, 2): 1.0, (3, 4): 1.0})
    value, side = max_flow(g, 1, 3)
    assert value == 0.0
    assert side == frozenset({1, 2})


def test_gomory_hu_triangle():
    g = _graph(TRIANGLE)
    tree = gomory_hu(g)
    assert tree.pair_value(1, 2) == pytest.approx(1.0)
    assert tree.pair_value(1, 3) == pytest.approx(1.0)
    assert tree.pair_value(2, 3) == pytest.approx(1.5)


def test_gomory_hu_star():
    edges = {(0, i): 1.0 for i in range(1, 5)}
    tree = gomory_hu(_graph(edges))
    for i, j in itertools.combinations(range(1, 5), 2):
        assert tree.pair_value(i, j) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(12))
def test_gomory_hu_matches_direct_max_flow(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    edges = {}
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < 0.55:
            edges[(u, v)] = float(rng.integers(1, 6))
    if not edges:
        edges[(0, 1)] = 1.0
    g = _graph(edges)
    tree = gomory_hu(g)
    for u, v in itertools.combinations(g.nodes, 2):
        direct, _ = max_flow(g, u, v)
        assert tree.pair_value(u, v) == pytest.approx(direct, abs=1e-9), \
            (u, v, edges)
    # global min cut equals the minimum tree edge value
    if len(g.nodes) >= 2:
        best = min(
            g.cut_value(side)
            for r in range(1, len(g.nodes))
            for side in map(set, itertools.combinations(g.nodes, r))
        )
        assert min(tree.flow.values()) == pytest.approx(best, abs=1e-9)


def test_separate_pairwise_arithmetic():
    # S = {1,2} with y(delta(S)) = 1.0, all loops 0, an activated node
    # outside: pairwise violation 2*(1+1-1) - 1.0 = 1.0
    z = {1: 1.0, 2: 1.0, 3: 1.0}
    y = {(1, 2): 1.0, (1, 3): 0.5, (2, 3): 0.5}
    results = separate(z, y, lam=2)
    pairwise = [r for r in results
                if r.form == PAIRWISE_FORM and r.cut_set == frozenset({1, 2})]
    assert pairwise
    r = pairwise[0]
    assert r.hub == 1          # tie on score, lowest index
    assert r.partner == 3
    assert r.violation == pytest.approx(1.0)


def test_separate_connected_solution_clean():
    # 2-connected triangle backbone: every cut holds >= 2 edges
    z = {1: 1.0, 2: 1.0, 3: 1.0}
    y = {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    assert separate(z, y, lam=2) == []


def test_separate_loop_only_hub():
    # single hub with only its loop: delta(k) empty, 0 + 1 >= 2 fails
    results = separate({1: 1.0}, {(1, 1): 1.0}, lam=2)
    assert len(results) == 1
    r = results[0]
    assert r.cut_set == frozenset({1})
    assert r.form == SMALL_S_FORM
    assert r.violation == pytest.approx(1.0)


def test_separate_isolated_hub_no_support():
    # activated hub with no incident edges at all
    results = separate({1: 1.0, 2: 0.0}, {}, lam=3)
    assert len(results) == 1
    assert results[0].violation == pytest.approx(3.0)


def test_separate_rejects_lambda_below_two():
    with pytest.raises(ValueError):
        separate({1: 1.0}, {}, lam=1)


def _exhaustive_violated(z, y, lam, nodes):
    """Reference check: every S ⊂ V, every k ∈ S, with the same
    small-S / pairwise form split used by separate()."""
    loops = {u: val for (u, v), val in y.items() if u == v}

    def cut(side):
        return sum(val for (u, v), val in y.items()
                   if u != v and (u in side) != (v in side))

    for r in range(1, len(nodes)):
        for side in itertools.combinations(nodes, r):
            side = set(side)
            cv = cut(side)
            for k in side:
                base = lam * z.get(k, 0.0) - loops.get(k, 0.0) - cv
                if base <= 1e-6:
                    continue
                if len(side) <= lam - 1:
                    return True
                outside = [l for l in nodes if l not in side]
                if not outside:
                    continue
                zl = max(z.get(l, 0.0) for l in outside)
                if lam * (z.get(k, 0.0) + zl - 1.0) - loops.get(k, 0.0) - cv > 1e-6:
                    return True
    return False


@pytest.mark.parametrize("seed", range(30))
def test_separate_exact_on_integer_points(seed):
    rng = np.random.default_rng([41, seed])
    n = int(rng.integers(3, 8))
    lam = int(rng.integers(2, 4))
    nodes = list(range(n))
    z = {k: float(rng.random() < 0.6) for k in nodes}
    hubs = [k for k in nodes if z[k] > 0.5]
    y = {}
    for u, v in itertools.combinations(hubs, 2):
        if rng.random() < 0.5:
            y[(u, v)] = 1.0
    for k in hubs:
        if rng.random() < 0.3:
            y[(k, k)] = 1.0
    got = bool(separate(z, y, lam))
    want = _exhaustive_violated(z, y, lam, nodes)
    assert got == want, (z, y, lam)


def test_emitted_rows_valid_for_connected_designs():
    # rows separated at fractional points must not cut integer designs
    # whose every hub-pair min cut (loop-adjusted) reaches lambda
    rng = np.random.default_rng(17)
    nodes = list(range(5))
    lam = 2
    # fractional point to separate at
    z = {k: float(rng.uniform(0.3, 1.0)) for k in nodes}
    y = {}
    for u, v in itertools.combinations(nodes, 2):
        y[(u, v)] = float(rng.uniform(0.0, 0.4))
    rows = separate(z, y, lam)
    assert rows
    # feasible integer design: 3 hubs in a triangle
    zi = {k: 1.0 if k < 3 else 0.0 for k in nodes}
    yi = {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0}
    for r in rows:
        cut = sum(val for (u, v), val in yi.items()
                  if u != v and (u in r.cut_set) != (v in r.cut_set))
        loop = yi.get((r.hub, r.hub), 0.0)
        if r.form == SMALL_S_FORM:
            rhs = lam * zi.get(r.hub, 0.0)
        else:
            rhs = lam * (zi.get(r.hub, 0.0) + zi.get(r.partner, 0.0) - 1.0)
        assert cut + loop >= rhs - 1e-9, r
