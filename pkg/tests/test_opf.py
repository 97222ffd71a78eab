import json

import numpy as np
import pytest

from ckdro.dro import build_certification_set, solve_ckdro
from ckdro.embedding import AmbiguityBall
from ckdro.kernels import Gaussian
from ckdro.opf import (
    DispatchPlan,
    Generator,
    Line,
    PowerNetwork,
    load_network,
    network_from_dict,
    network_to_dict,
    opf_cost_model,
    second_stage,
    slack_penalty_weight,
    solve_opf,
    worst_case_cost,
)

from conftest import random_three_bus


class TestNetworkValidation:
    def test_disconnected_rejected(self):
        with pytest.raises(ValueError, match="connected"):
            PowerNetwork(
                n_buses=3,
                lines=(Line(0, 1, 0.1, -10, 10),),
                generators=(
                    Generator(bus=0, a=0, b=1, c=0, p_min=0, p_max=10, flexible=True),
                ),
            )

    def test_flexible_required(self):
        with pytest.raises(ValueError, match="flexible"):
            PowerNetwork(
                n_buses=1,
                lines=(),
                generators=(
                    Generator(bus=0, a=0, b=1, c=0, p_min=0, p_max=10, flexible=False),
                ),
            )

    def test_deficiency_penalty_ordering(self):
        with pytest.raises(ValueError, match="deficiency"):
            Generator(
                bus=0, a=0, b=1, c=0, p_min=0, p_max=10,
                flexible=True, zeta_plus=5.0, zeta_minus=1.0,
            )

    def test_json_round_trip(self, two_bus, tmp_path):
        path = tmp_path / "net.json"
        path.write_text(json.dumps(network_to_dict(two_bus)))
        loaded = load_network(path)
        assert loaded == two_bus

    def test_bad_bus_ids(self):
        data = network_to_dict(
            PowerNetwork(
                n_buses=1,
                lines=(),
                generators=(
                    Generator(bus=0, a=0, b=1, c=0, p_min=0, p_max=5, flexible=True),
                ),
            )
        )
        data["buses"] = [{"id": 3}]
        with pytest.raises(ValueError, match="bus ids"):
            network_from_dict(data)


class TestSolveOpf:
    def test_two_bus_hand_case(self, two_bus):
        res = solve_opf(two_bus, [0.0, 50.0])
        assert res.plan.output[0] == pytest.approx(50.0, abs=1e-5)
        assert res.cost == pytest.approx(500.0, abs=1e-5)
        # flow = (theta_0 - theta_1) / x = 50
        assert (res.theta[0] - res.theta[1]) / 0.1 == pytest.approx(50.0, abs=1e-5)
        assert res.theta[0] == 0.0  # bus 0 is the angle reference
        assert res.strict_feasible

    def test_zero_demand_zero_cost(self, two_bus):
        res = solve_opf(two_bus, [0.0, 0.0])
        assert res.cost == pytest.approx(0.0, abs=1e-6)
        assert res.plan.output[0] == pytest.approx(0.0, abs=1e-6)

    def test_demand_beyond_capacity_activates_slack(self, two_bus):
        total = sum(g.p_max for g in two_bus.generators)
        res = solve_opf(two_bus, [0.0, 2.0 * total])
        assert not res.strict_feasible
        assert np.sum(np.abs(res.slack)) == pytest.approx(total, abs=1e-4)
        assert res.cost > slack_penalty_weight(two_bus) * total * 0.9

    def test_demand_shape_checked(self, two_bus):
        with pytest.raises(ValueError, match="per bus"):
            solve_opf(two_bus, [1.0])


class TestSecondStage:
    def test_nominal_from_opf_is_optimal(self, two_bus):
        demand = [0.0, 50.0]
        first = solve_opf(two_bus, demand)
        rec = second_stage(two_bus, demand, first.plan)
        assert rec.cost == pytest.approx(first.cost, abs=1e-6)
        assert rec.adjustment_cost == pytest.approx(0.0, abs=1e-6)

    def test_deficiency_penalty_hand_case(self, two_bus):
        # nominal 40 must ramp to 50: J_n = 500, adjustment 100 * 10
        rec = second_stage(two_bus, [0.0, 50.0], DispatchPlan(np.array([40.0])))
        assert rec.output[0] == pytest.approx(50.0, abs=1e-6)
        assert rec.cost == pytest.approx(1500.0, abs=1e-5)
        assert rec.adjustment_cost == pytest.approx(1000.0, abs=1e-4)

    def test_free_adjustment_ignores_nominal(self):
        net = PowerNetwork(
            n_buses=2,
            lines=(Line(0, 1, 0.1, -100, 100),),
            generators=(
                Generator(bus=0, a=0.0, b=10.0, c=0.0, p_min=0.0, p_max=100.0,
                          flexible=True, zeta_plus=0.0, zeta_minus=0.0),
            ),
        )
        demand = [0.0, 30.0]
        base = solve_opf(net, demand).cost
        for nominal in ([5.0], [80.0]):
            rec = second_stage(net, demand, DispatchPlan(np.array(nominal)))
            assert rec.cost == pytest.approx(base, abs=1e-6)

    def test_nominal_outside_bounds_rejected(self, two_bus):
        with pytest.raises(ValueError, match="bounds"):
            second_stage(two_bus, [0.0, 10.0], DispatchPlan(np.array([150.0])))

    def test_complementary_split(self, two_bus):
        rec = second_stage(two_bus, [0.0, 50.0], DispatchPlan(np.array([40.0])))
        delta = rec.output[0] - 40.0
        assert max(delta, 0.0) * max(-delta, 0.0) <= 1e-8


class TestRandomInstances:
    def test_recourse_consistency_and_feasibility(self):
        rng = np.random.default_rng(77)
        for _ in range(8):
            net, demand = random_three_bus(rng)
            first = solve_opf(net, demand)
            rec = second_stage(net, demand, first.plan)
            scale = 1.0 + abs(first.cost)
            assert rec.cost == pytest.approx(first.cost, abs=1e-6 * scale)
            # nodal balance residual net of slack
            for result in (first, rec):
                p = result.plan.output if result is first else result.output
                inject = np.zeros(3)
                for g, gen in enumerate(net.generators):
                    inject[gen.bus] += p[g]
                flow_out = np.zeros(3)
                for line in net.lines:
                    f = (result.theta[line.from_bus] - result.theta[line.to_bus]) / line.reactance
                    flow_out[line.from_bus] += f
                    flow_out[line.to_bus] -= f
                    assert line.flow_min - 1e-6 <= f <= line.flow_max + 1e-6
                residual = inject - np.asarray(demand) + result.slack - flow_out
                assert np.max(np.abs(residual)) <= 1e-6 * (1.0 + np.linalg.norm(demand))
                lo = net.p_min() - 1e-6
                hi = net.p_max() + 1e-6
                assert np.all(p >= lo) and np.all(p <= hi)


class TestWorstCase:
    def test_zero_noise_equals_nominal(self, two_bus):
        demand = np.array([0.0, 50.0])
        plan = solve_opf(two_bus, demand).plan
        base = second_stage(two_bus, demand, plan).cost
        assert worst_case_cost(two_bus, plan, demand, 0.0, 5, seed=3) == pytest.approx(
            base, abs=1e-9
        )

    def test_dominates_nominal(self, two_bus):
        demand = np.array([0.0, 50.0])
        plan = DispatchPlan(np.array([45.0]))
        base = second_stage(two_bus, demand, plan).cost
        worst = worst_case_cost(two_bus, plan, demand, 2.0, 10, seed=1)
        assert worst >= base - 1e-9

    def test_nested_samples_monotone(self, two_bus):
        demand = np.array([0.0, 50.0])
        plan = DispatchPlan(np.array([45.0]))
        small = worst_case_cost(two_bus, plan, demand, 2.0, 10, seed=5)
        large = worst_case_cost(two_bus, plan, demand, 2.0, 20, seed=5)
        assert large >= small - 1e-12


class TestCostModel:
    def test_collapse_to_deterministic(self, two_bus):
        demand = np.array([0.0, 50.0])
        first = solve_opf(two_bus, demand)
        cert = build_certification_set(demand[None, :], 1, 0.0, seed=0)
        ball = AmbiguityBall(
            center_points=demand[None, :], center_weights=np.array([1.0]), radius=0.0
        )
        sol = solve_ckdro(ball, cert, Gaussian(sigma=20.0), opf_cost_model(two_bus))
        assert sol.value == pytest.approx(first.cost, abs=1e-4 * (1 + first.cost))
        rec = second_stage(two_bus, demand, DispatchPlan(sol.eta))
        assert rec.cost == pytest.approx(first.cost, abs=1e-4 * (1 + first.cost))

    def test_epigraph_certified_by_resolve(self, two_bus):
        rng = np.random.default_rng(31)
        demands = np.abs(rng.normal(40, 8, (3, 1)))
        demands = np.hstack([np.zeros((3, 1)), demands])
        cert = build_certification_set(demands, 5, 1.0, seed=4)
        ball = AmbiguityBall(
            center_points=demands[:1], center_weights=np.array([1.0]), radius=0.5
        )
        ky = Gaussian(sigma=15.0)
        cost = opf_cost_model(two_bus)
        sol = solve_ckdro(ball, cert, ky, cost, tol=1e-8)
        from ckdro.dro import evaluate_dual_function

        for y in cert.points:
            q = cost.evaluate(sol.eta, y)
            f = evaluate_dual_function(sol.alpha, cert, ky, y)
            assert q <= f + sol.f0 + 1e-5 * (1.0 + abs(q))

    def test_decision_box_enforced(self, two_bus):
        demand = np.array([0.0, 120.0])  # above single-generator capacity
        cert = build_certification_set(demand[None, :], 1, 0.0, seed=0)
        ball = AmbiguityBall(
            center_points=demand[None, :], center_weights=np.array([1.0]), radius=0.0
        )
        sol = solve_ckdro(ball, cert, Gaussian(sigma=20.0), opf_cost_model(two_bus))
        assert sol.eta[0] <= 100.0 + 1e-6
