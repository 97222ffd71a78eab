"""DC optimal power flow with a two-stage recourse formulation.

The first stage commits a nominal dispatch; after demand is revealed the
second stage re-dispatches the flexible generators, paying an asymmetric
linear adjustment penalty (deficiency costs more than surplus) on top of
the quadratic generation cost.  Nodal balance carries penalized slack so
every instance stays solvable; runs whose slack is non-negligible are
flagged instead of propagating infinities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .conic import ProgramBuilder, SolverFailure, solve_conic
from .dro import CostModel

__all__ = [
    "Line",
    "Generator",
    "PowerNetwork",
    "DispatchPlan",
    "OpfResult",
    "RecourseResult",
    "load_network",
    "network_from_dict",
    "network_to_dict",
    "solve_opf",
    "second_stage",
    "opf_cost_model",
    "worst_case_cost",
    "slack_penalty_weight",
]

# slack above this marks a solution as infeasible for the strict problem
STRICT_SLACK_TOLERANCE = 1e-4

BOUND_CLIP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float
    flow_min: float
    flow_max: float

    def __post_init__(self):
        if not self.reactance > 0:
            raise ValueError("line reactance must be strictly positive")
        if self.flow_min > self.flow_max:
            raise ValueError("line flow bounds out of order")


@dataclass(frozen=True)
class Generator:
    bus: int
    a: float
    b: float
    c: float
    p_min: float
    p_max: float
    flexible: bool
    zeta_plus: float = 0.0
    zeta_minus: float = 0.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("quadratic cost coefficient must be nonnegative")
        if self.p_min > self.p_max:
            raise ValueError("generator bounds out of order")
        if self.zeta_plus < 0 or self.zeta_minus < 0:
            raise ValueError("adjustment penalties must be nonnegative")
        if self.flexible and self.zeta_minus < self.zeta_plus:
            raise ValueError("deficiency penalty must be >= surplus penalty")


@dataclass(frozen=True)
class PowerNetwork:
    """Buses 0..n-1 (bus 0 is the angle reference), lines, and generators."""

    n_buses: int
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.n_buses < 1:
            raise ValueError("network needs at least one bus")
        for line in self.lines:
            if not (0 <= line.from_bus < self.n_buses and 0 <= line.to_bus < self.n_buses):
                raise ValueError("line endpoint outside bus range")
        for gen in self.generators:
            if not 0 <= gen.bus < self.n_buses:
                raise ValueError("generator bus outside bus range")
        if not any(g.flexible for g in self.generators):
            raise ValueError("network needs at least one flexible generator")
        if not self._connected():
            raise ValueError("network graph is not connected")

    def _connected(self) -> bool:
        if self.n_buses == 1:
            return True
        adj: list[list[int]] = [[] for _ in range(self.n_buses)]
        for line in self.lines:
            adj[line.from_bus].append(line.to_bus)
            adj[line.to_bus].append(line.from_bus)
        seen = {0}
        stack = [0]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == self.n_buses

    @property
    def n_gens(self) -> int:
        return len(self.generators)

    @property
    def slack_bus(self) -> int:
        return 0

    def p_min(self) -> np.ndarray:
        return np.array([g.p_min for g in self.generators])

    def p_max(self) -> np.ndarray:
        return np.array([g.p_max for g in self.generators])

    def check_demand(self, demand) -> np.ndarray:
        d = np.asarray(demand, dtype=float)
        if d.shape != (self.n_buses,):
            raise ValueError(f"demand must have one entry per bus ({self.n_buses})")
        if not np.all(np.isfinite(d)):
            raise ValueError("demand contains non-finite entries")
        return d


@dataclass(frozen=True)
class DispatchPlan:
    """Nominal generation committed in the first stage."""

    output: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "output", np.asarray(self.output, dtype=float))


@dataclass(frozen=True)
class OpfResult:
    plan: DispatchPlan
    theta: np.ndarray
    cost: float
    slack: np.ndarray
    strict_feasible: bool


@dataclass(frozen=True)
class RecourseResult:
    output: np.ndarray
    theta: np.ndarray
    slack: np.ndarray
    cost: float
    adjustment_cost: float
    strict_feasible: bool


def network_from_dict(data: dict) -> PowerNetwork:
    bus_ids = sorted(b["id"] for b in data["buses"])
    if bus_ids != list(range(len(bus_ids))):
        raise ValueError("bus ids must be 0..n-1")
    lines = tuple(
        Line(l["from"], l["to"], l["x"], l["fmin"], l["fmax"]) for l in data["lines"]
    )
    gens = tuple(
        Generator(
            bus=g["bus"],
            a=g["a"],
            b=g["b"],
            c=g["c"],
            p_min=g["pmin"],
            p_max=g["pmax"],
            flexible=bool(g["flexible"]),
            zeta_plus=g.get("zeta_plus", 0.0),
            zeta_minus=g.get("zeta_minus", 0.0),
        )
        for g in data["generators"]
    )
    return PowerNetwork(n_buses=len(bus_ids), lines=lines, generators=gens)


def network_to_dict(network: PowerNetwork) -> dict:
    return {
        "buses": [{"id": i} for i in range(network.n_buses)],
        "lines": [
            {"from": l.from_bus, "to": l.to_bus, "x": l.reactance, "fmin": l.flow_min, "fmax": l.flow_max}
            for l in network.lines
        ],
        "generators": [
            {
                "bus": g.bus,
                "a": g.a,
                "b": g.b,
                "c": g.c,
                "pmin": g.p_min,
                "pmax": g.p_max,
                "flexible": g.flexible,
                "zeta_plus": g.zeta_plus,
                "zeta_minus": g.zeta_minus,
            }
            for g in network.generators
        ],
    }


def load_network(path) -> PowerNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


def slack_penalty_weight(network: PowerNetwork) -> float:
    """Linear slack penalty chosen to dominate every marginal generation cost."""
    max_b = max(abs(g.b) for g in network.generators)
    max_quad = max(g.a * max(abs(g.p_min), abs(g.p_max)) for g in network.generators)
    return 1e3 * (max_b + max_quad)


def _add_network_rows(builder, network, demand, p_vars, theta, s_pos, s_neg):
    """Reference angle, nodal balance with slack, and line-flow bounds."""
    builder.add_eq([(1.0, theta[network.slack_bus])], 0.0)
    balance: list[list] = [[] for _ in range(network.n_buses)]
    for g, gen in enumerate(network.generators):
        balance[gen.bus].append((1.0, p_vars[g]))
    for line in network.lines:
        inv_x = 1.0 / line.reactance
        # flow from -> to equals (theta_from - theta_to) / x
        balance[line.from_bus] += [(-inv_x, theta[line.from_bus]), (inv_x, theta[line.to_bus])]
        balance[line.to_bus] += [(inv_x, theta[line.from_bus]), (-inv_x, theta[line.to_bus])]
        flow = [(inv_x, theta[line.from_bus]), (-inv_x, theta[line.to_bus])]
        builder.add_nonneg(flow, -line.flow_min)
        builder.add_nonneg([(-c, v) for c, v in flow], line.flow_max)
    for i in range(network.n_buses):
        builder.add_nonneg([(1.0, s_pos[i])])
        builder.add_nonneg([(1.0, s_neg[i])])
        builder.add_eq(balance[i] + [(1.0, s_pos[i]), (-1.0, s_neg[i])], float(demand[i]))


def _generation_cost_terms(builder, network, p_vars):
    """Quadratic epigraphs plus linear/constant cost; returns (terms, const)."""
    terms = []
    const = 0.0
    for g, gen in enumerate(network.generators):
        if gen.a > 0:
            t_g = builder.new_var()
            sqrt_a = np.sqrt(gen.a)
            builder.add_rsoc([([(1.0, t_g)], 0.0), ([], 0.5), ([(sqrt_a, p_vars[g])], 0.0)])
            terms.append((1.0, t_g))
        if gen.b != 0.0:
            terms.append((float(gen.b), p_vars[g]))
        const += gen.c
    return terms, const


def solve_opf(network: PowerNetwork, demand, tol: float = 1e-8) -> OpfResult:
    """Deterministic DC OPF: minimize generation cost meeting the demand."""
    d = network.check_demand(demand)
    builder = ProgramBuilder()
    p = builder.new_vars(network.n_gens)
    theta = builder.new_vars(network.n_buses)
    s_pos = builder.new_vars(network.n_buses)
    s_neg = builder.new_vars(network.n_buses)
    for g, gen in enumerate(network.generators):
        builder.add_nonneg([(1.0, p[g])], -gen.p_min)
        builder.add_nonneg([(-1.0, p[g])], gen.p_max)
    _add_network_rows(builder, network, d, p, theta, s_pos, s_neg)
    terms, const = _generation_cost_terms(builder, network, p)
    builder.add_cost_terms(terms)
    builder.add_offset(const)
    rho = slack_penalty_weight(network)
    builder.add_cost_terms([(rho, s_pos[i]) for i in range(network.n_buses)])
    builder.add_cost_terms([(rho, s_neg[i]) for i in range(network.n_buses)])
    sol = solve_conic(builder.build(), tol=tol)
    if sol.status != "optimal":
        raise SolverFailure(f"OPF solve returned status {sol.status}")
    output = np.clip(
        sol.primal[p],
        network.p_min() - BOUND_CLIP_TOLERANCE,
        network.p_max() + BOUND_CLIP_TOLERANCE,
    )
    output = np.clip(output, network.p_min(), network.p_max())
    slack = sol.primal[s_pos] - sol.primal[s_neg]
    total_slack = float(np.sum(np.abs(slack)))
    angles = sol.primal[theta] - sol.primal[theta[network.slack_bus]]
    return OpfResult(
        plan=DispatchPlan(output=output),
        theta=angles,
        cost=sol.objective,
        slack=slack,
        strict_feasible=total_slack <= STRICT_SLACK_TOLERANCE,
    )


def _check_nominal(network: PowerNetwork, nominal: DispatchPlan) -> np.ndarray:
    nom = np.asarray(nominal.output, dtype=float)
    if nom.shape != (network.n_gens,):
        raise ValueError("nominal plan must have one entry per generator")
    lo, hi = network.p_min(), network.p_max()
    if np.any(nom < lo - BOUND_CLIP_TOLERANCE) or np.any(nom > hi + BOUND_CLIP_TOLERANCE):
        raise ValueError("nominal plan violates generator bounds")
    return np.clip(nom, lo, hi)


def second_stage(
    network: PowerNetwork, demand, nominal: DispatchPlan, tol: float = 1e-8
) -> RecourseResult:
    """Re-dispatch after demand is revealed, given the committed nominal plan.

    Non-flexible generators stay at their nominal output; flexible ones pay
    zeta_minus per unit above nominal (covering a deficiency) and zeta_plus
    per unit below (surplus), on top of the generation cost.  The nodal
    slack penalty is included in the reported cost, which therefore acts as
    the finite surrogate for infeasible instances.
    """
    d = network.check_demand(demand)
    nom = _check_nominal(network, nominal)
    builder = ProgramBuilder()
    p = builder.new_vars(network.n_gens)
    theta = builder.new_vars(network.n_buses)
    s_pos = builder.new_vars(network.n_buses)
    s_neg = builder.new_vars(network.n_buses)
    adj_terms = []
    for g, gen in enumerate(network.generators):
        if gen.flexible:
            up = builder.new_var()
            dn = builder.new_var()
            builder.add_nonneg([(1.0, up)])
            builder.add_nonneg([(1.0, dn)])
            builder.add_eq([(1.0, p[g]), (-1.0, up), (1.0, dn)], float(nom[g]))
            adj_terms += [(float(gen.zeta_minus), up), (float(gen.zeta_plus), dn)]
            builder.add_nonneg([(1.0, p[g])], -gen.p_min)
            builder.add_nonneg([(-1.0, p[g])], gen.p_max)
        else:
            builder.add_eq([(1.0, p[g])], float(nom[g]))
    _add_network_rows(builder, network, d, p, theta, s_pos, s_neg)
    terms, const = _generation_cost_terms(builder, network, p)
    builder.add_cost_terms(terms)
    builder.add_cost_terms(adj_terms)
    builder.add_offset(const)
    rho = slack_penalty_weight(network)
    builder.add_cost_terms([(rho, s_pos[i]) for i in range(network.n_buses)])
    builder.add_cost_terms([(rho, s_neg[i]) for i in range(network.n_buses)])
    sol = solve_conic(builder.build(), tol=tol)
    if sol.status != "optimal":
        raise SolverFailure(f"recourse solve returned status {sol.status}")
    output = sol.primal[p]
    delta = output - nom
    adj_cost = float(
        sum(
            g.zeta_minus * max(delta[i], 0.0) + g.zeta_plus * max(-delta[i], 0.0)
            for i, g in enumerate(network.generators)
            if g.flexible
        )
    )
    slack = sol.primal[s_pos] - sol.primal[s_neg]
    total_slack = float(np.sum(np.abs(slack)))
    angles = sol.primal[theta] - sol.primal[theta[network.slack_bus]]
    return RecourseResult(
        output=output.copy(),
        theta=angles,
        slack=slack,
        cost=sol.objective,
        adjustment_cost=adj_cost,
        strict_feasible=total_slack <= STRICT_SLACK_TOLERANCE,
    )


def opf_cost_model(network: PowerNetwork) -> CostModel:
    """Cost model whose decision is the nominal dispatch.

    Each certification demand gets fresh second-stage variables inlined into
    the program, so the scenario epigraph upper-bounds the optimal recourse
    cost; the outer minimization absorbs the inner one.
    """
    rho = slack_penalty_weight(network)

    def constrain(builder: ProgramBuilder, eta: np.ndarray) -> None:
        for g, gen in enumerate(network.generators):
            builder.add_nonneg([(1.0, eta[g])], -gen.p_min)
            builder.add_nonneg([(-1.0, eta[g])], gen.p_max)

    def build(builder: ProgramBuilder, eta: np.ndarray, y: np.ndarray) -> int:
        d = network.check_demand(np.asarray(y, dtype=float))
        p = []
        cost_terms = []
        for g, gen in enumerate(network.generators):
            if gen.flexible:
                p_g = builder.new_var()
                up = builder.new_var()
                dn = builder.new_var()
                builder.add_nonneg([(1.0, up)])
                builder.add_nonneg([(1.0, dn)])
                builder.add_eq([(1.0, p_g), (-1.0, eta[g]), (-1.0, up), (1.0, dn)], 0.0)
                builder.add_nonneg([(1.0, p_g)], -gen.p_min)
                builder.add_nonneg([(-1.0, p_g)], gen.p_max)
                cost_terms += [(float(gen.zeta_minus), up), (float(gen.zeta_plus), dn)]
                p.append(p_g)
            else:
                p.append(int(eta[g]))
        theta = builder.new_vars(network.n_buses)
        s_pos = builder.new_vars(network.n_buses)
        s_neg = builder.new_vars(network.n_buses)
        _add_network_rows(builder, network, d, p, theta, s_pos, s_neg)
        terms, const = _generation_cost_terms(builder, network, p)
        cost_terms += terms
        cost_terms += [(rho, s_pos[i]) for i in range(network.n_buses)]
        cost_terms += [(rho, s_neg[i]) for i in range(network.n_buses)]
        t_j = builder.new_var()
        builder.add_nonneg([(1.0, t_j)] + [(-c, v) for c, v in cost_terms], -const)
        return t_j

    def evaluate(eta: np.ndarray, y: np.ndarray) -> float:
        return second_stage(network, y, DispatchPlan(output=np.asarray(eta))).cost

    return CostModel(
        decision_dim=network.n_gens,
        build_epigraph=build,
        constrain_decision=constrain,
        evaluate=evaluate,
    )


def worst_case_cost(
    network: PowerNetwork,
    nominal: DispatchPlan,
    demand,
    sigma_w: float,
    n_samples: int,
    seed: int,
) -> float:
    """Worst recourse cost over Gaussian demand perturbations.

    The unperturbed demand is always included, so the result is never below
    the nominal second-stage cost.  Samples are drawn in one block, making
    results with a common seed nested as ``n_samples`` grows.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if sigma_w < 0:
        raise ValueError("sigma_w must be nonnegative")
    d = network.check_demand(demand)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_samples, network.n_buses)) * sigma_w
    worst = second_stage(network, d, nominal).cost
    for w in noise:
        worst = max(worst, second_stage(network, d + w, nominal).cost)
    return worst
