"""Problem data for hub network design under inter-hub link failures.

An :class:`Instance` bundles everything the optimization models need: unit
transportation costs, inter-hub routing costs (discounted and including
per-node handling), set-up costs for hubs and hub edges (loops included),
failure probabilities for every potential hub edge, and the commodity list.

Instances can be synthesized (random geometry in the unit square with a
gravity-style demand law) or read from / written to a canonical JSON file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-12


class InstanceError(Exception):
    """Base class for instance construction / IO problems."""


class InstanceFormatError(InstanceError):
    """Raised when an instance file cannot be parsed."""


class InstanceValidationError(InstanceError):
    """Raised when instance data violates a structural invariant."""


@dataclass(frozen=True)
class Commodity:
    origin: int
    dest: int
    demand: float


@dataclass(frozen=True)
class ProbabilityScenario:
    """How edge failure probabilities are drawn.

    kind 'RP': p_kl ~ Uniform[0, rho];  'CP': p_kl uniformly from
    cluster_values;  'SP': p_kl = rho for every edge.
    """

    kind: str
    rho: float = 0.1
    cluster_values: tuple[float, ...] = (0.1, 0.2, 0.3)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("RP", "CP", "SP"):
            raise InstanceValidationError(f"unknown scenario kind {self.kind!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise InstanceValidationError("rho must be in [0, 1]")
        if self.kind == "CP":
            if not self.cluster_values:
                raise InstanceValidationError("CP scenario needs cluster values")
            if any(not 0.0 <= v <= 1.0 for v in self.cluster_values):
                raise InstanceValidationError("cluster values must be in [0, 1]")


@dataclass(frozen=True)
class CostScalingParams:
    alpha: float = 0.5
    beta: float = 1.0
    hub_setup_default: float = 100.0
    edge_setup_rule: str = "inverse_flow"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InstanceValidationError("alpha must be in [0, 1]")
        if self.beta < 0.0:
            raise InstanceValidationError("beta must be nonnegative")
        if self.edge_setup_rule not in ("inverse_flow", "from_file"):
            raise InstanceValidationError(
                f"unknown edge_setup_rule {self.edge_setup_rule!r}"
            )


@dataclass(eq=False)
class Instance:
    """Immutable problem data; all matrices are n x n, loops on the diagonal."""

    n: int
    base_cost: np.ndarray
    access_cost: np.ndarray
    interhub_cost: np.ndarray
    hub_setup: np.ndarray
    edge_setup: np.ndarray
    fail_prob: np.ndarray
    commodities: list[Commodity]
    alpha: float
    _routing_cache: np.ndarray | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.base_cost = np.asarray(self.base_cost, dtype=float)
        self.access_cost = np.asarray(self.access_cost, dtype=float)
        self.interhub_cost = np.asarray(self.interhub_cost, dtype=float)
        self.hub_setup = np.asarray(self.hub_setup, dtype=float)
        self.edge_setup = np.asarray(self.edge_setup, dtype=float)
        self.fail_prob = np.asarray(self.fail_prob, dtype=float)
        self.validate()

    def validate(self):
        n = self.n
        if n < 1:
            raise InstanceValidationError("instance needs at least one node")
        for name in ("base_cost", "access_cost", "interhub_cost",
                     "edge_setup", "fail_prob"):
            m = getattr(self, name)
            if m.shape != (n, n):
                raise InstanceValidationError(
                    f"{name} must be {n}x{n}, got {m.shape}"
                )
            if np.any(m < 0) and name != "fail_prob":
                raise InstanceValidationError(f"{name} has negative entries")
        if self.hub_setup.shape != (n,):
            raise InstanceValidationError(
                f"hub_setup must have length {n}, got {self.hub_setup.shape}"
            )
        for name in ("edge_setup", "fail_prob"):
            m = getattr(self, name)
            if np.max(np.abs(m - m.T), initial=0.0) > SYMMETRY_TOL:
                raise InstanceValidationError(f"{name} is not symmetric")
        if np.any(self.fail_prob < 0) or np.any(self.fail_prob > 1):
            raise InstanceValidationError("fail_prob entries must be in [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise InstanceValidationError("alpha must be in [0, 1]")
        for i, com in enumerate(self.commodities):
            if not (0 <= com.origin < n and 0 <= com.dest < n):
                raise InstanceValidationError(
                    f"commodity {i} endpoints out of range"
                )
            if com.demand < 0:
                raise InstanceValidationError(f"commodity {i} has demand < 0")

    @property
    def num_commodities(self) -> int:
        return len(self.commodities)

    def routing_cost(self, r: int, k: int, l: int) -> float:
        """Cost of routing commodity r over the path (o_r, k, l, d_r)."""
        com = self.commodities[r]
        return com.demand * (
            self.access_cost[com.origin, k]
            + self.interhub_cost[k, l]
            + self.access_cost[l, com.dest]
        )

    def routing_cost_table(self) -> np.ndarray:
        """All path costs as an (R, n, n) array; entry [r, k, l] is C^r_kl."""
        if self._routing_cache is None:
            o = np.array([c.origin for c in self.commodities], dtype=int)
            d = np.array([c.dest for c in self.commodities], dtype=int)
            w = np.array([c.demand for c in self.commodities], dtype=float)
            acc = self.access_cost[o][:, :, None]          # (R, n, 1)
            del_ = self.access_cost[:, d].T[:, None, :]    # (R, 1, n)
            table = w[:, None, None] * (acc + self.interhub_cost[None] + del_)
            self._routing_cache = table
        return self._routing_cache

    def content_hash(self) -> str:
        """Stable hash of the serialized instance, for cross-file checks."""
        return hashlib.sha256(
            json.dumps(_to_document(self), sort_keys=True).encode()
        ).hexdigest()[:16]


def routing_cost(inst: Instance, r: int, k: int, l: int) -> float:
    return inst.routing_cost(r, k, l)


def synthesize_instance(
    n: int,
    geometry_seed: int,
    scenario: ProbabilityScenario,
    params: CostScalingParams | None = None,
) -> Instance:
    """Generate a random instance on n nodes.

    Nodes are uniform in the unit square and base costs are Euclidean
    distances. Demand follows a gravity law, w_r = round(1000 * u_o * u_d)
    with per-node weights u ~ Uniform(0.1, 1], over all ordered pairs.
    Inter-hub costs fold per-node handling into the discounted distance,
    c_kl = alpha * (a_k + c'_kl + d_l) with a_k = d_k the cheapest incident
    base cost. Hub edge set-up costs scale inversely with normalized flow.
    Deterministic given (geometry_seed, scenario.seed).
    """
    if n < 2:
        raise InstanceValidationError("synthesis requires n >= 2")
    params = params or CostScalingParams()

    rng = np.random.default_rng(geometry_seed)
    points = rng.uniform(0.0, 1.0, size=(n, 2))
    diff = points[:, None, :] - points[None, :, :]
    base = np.sqrt((diff ** 2).sum(axis=2))

    u = rng.uniform(0.1, 1.0, size=n)
    w = np.round(1000.0 * np.outer(u, u))
    np.fill_diagonal(w, 0.0)
    commodities = [
        Commodity(o, d, float(w[o, d]))
        for o in range(n)
        for d in range(n)
        if o != d
    ]

    off_diag = base + np.diag([np.inf] * n)
    a = np.minimum(off_diag.min(axis=1), off_diag.min(axis=0))
    interhub = params.alpha * (a[:, None] + base + a[None, :])
    np.fill_diagonal(interhub, params.alpha * 2.0 * a)

    hub_setup = np.full(n, params.hub_setup_default)
    edge_setup = _edge_setup_from_flows(interhub, w)

    fail = _draw_fail_prob(n, scenario)
    return Instance(
        n=n,
        base_cost=base,
        access_cost=base.copy(),
        interhub_cost=interhub,
        hub_setup=hub_setup,
        edge_setup=edge_setup,
        fail_prob=fail,
        commodities=commodities,
        alpha=params.alpha,
    )


def _edge_setup_from_flows(interhub: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Set-up costs 100 * (c_kl / W_kl) / MAXW, loops priced at the mean flow."""
    n = interhub.shape[0]
    total = w.sum()
    if total <= 0:
        raise InstanceValidationError("cannot price edges with zero total flow")
    W = w / total
    pos = W > 0
    maxw = np.max(interhub[pos] / W[pos])
    wbar = W.mean()
    h = np.zeros((n, n))
    off = pos
    h[off] = 100.0 * (interhub[off] / W[off]) / maxw
    np.fill_diagonal(h, 100.0 * (np.diag(interhub) / wbar) / maxw)
    # W is symmetric by construction; enforce exactly anyway
    h = 0.5 * (h + h.T)
    return h


def _draw_fail_prob(n: int, scenario: ProbabilityScenario) -> np.ndarray:
    rng = np.random.default_rng(scenario.seed)
    iu = np.triu_indices(n)
    m = len(iu[0])
    if scenario.kind == "RP":
        vals = rng.uniform(0.0, scenario.rho, size=m)
    elif scenario.kind == "CP":
        vals = rng.choice(np.asarray(scenario.cluster_values, dtype=float), size=m)
    else:  # SP
        vals = np.full(m, scenario.rho)
    p = np.zeros((n, n))
    p[iu] = vals
    p = p + np.triu(p, 1).T
    return p


# ---------------------------------------------------------------------------
# Canonical file format (JSON, row-major matrices, exact float round-trip)
# ---------------------------------------------------------------------------

_FIELDS = (
    "n", "alpha", "base_cost", "access_cost", "interhub_cost",
    "hub_setup", "edge_setup", "fail_prob", "commodities",
)


def _to_document(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "alpha": inst.alpha,
        "base_cost": inst.base_cost.tolist(),
        "access_cost": inst.access_cost.tolist(),
        "interhub_cost": inst.interhub_cost.tolist(),
        "hub_setup": inst.hub_setup.tolist(),
        "edge_setup": inst.edge_setup.tolist(),
        "fail_prob": inst.fail_prob.tolist(),
        "commodities": [[c.origin, c.dest, c.demand] for c in inst.commodities],
    }


def save_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(_to_document(inst), fh)
        fh.write("\n")


def load_instance(path) -> Instance:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_document(doc, source=str(path))


def instance_from_document(doc: dict, source: str = "<document>") -> Instance:
    for key in _FIELDS:
        if key not in doc:
            raise InstanceFormatError(f"{source}: missing field {key!r}")
    commodities = []
    for i, row in enumerate(doc["commodities"]):
        if not isinstance(row, Sequence) or len(row) != 3:
            raise InstanceFormatError(
                f"{source}: commodity {i} must be [origin, dest, demand]"
            )
        commodities.append(Commodity(int(row[0]), int(row[1]), float(row[2])))
    try:
        return Instance(
            n=int(doc["n"]),
            base_cost=np.asarray(doc["base_cost"], dtype=float),
            access_cost=np.asarray(doc["access_cost"], dtype=float),
            interhub_cost=np.asarray(doc["interhub_cost"], dtype=float),
            hub_setup=np.asarray(doc["hub_setup"], dtype=float),
            edge_setup=np.asarray(doc["edge_setup"], dtype=float),
            fail_prob=np.asarray(doc["fail_prob"], dtype=float),
            commodities=commodities,
            alpha=float(doc["alpha"]),
        )
    except ValueError as exc:
        raise InstanceFormatError(f"{source}: {exc}") from exc
