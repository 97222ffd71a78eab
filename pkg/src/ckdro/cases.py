"""Ready-made study cases.

The three-bus case is the workhorse for tests and demos: a small triangle
network with one inflexible baseload block and two flexible units whose
asymmetric adjustment penalties make under-commitment expensive, paired
with a synthetic hourly demand law driven by time of day and temperature.
Temperature draws concentrate in a central band, so queries in the sparse
tails are genuinely harder, which is what the query-adaptive ambiguity
radius reacts to.
"""

from __future__ import annotations

from .kernels import Composite, CyclicGaussian, Gaussian
from .opf import Generator, Line, PowerNetwork
from .synthetic import SyntheticSpec

__all__ = [
    "three_bus_network",
    "three_bus_demand_spec",
    "three_bus_aux_kernel",
    "three_bus_outcome_kernel",
    "three_bus_config_dict",
]


def three_bus_network() -> PowerNetwork:
    return PowerNetwork(
        n_buses=3,
        lines=(
            Line(0, 1, 0.1, -60.0, 60.0),
            Line(1, 2, 0.1, -60.0, 60.0),
            Line(0, 2, 0.1, -60.0, 60.0),
        ),
        generators=(
            Generator(bus=0, a=0.01, b=10.0, c=0.0, p_min=0.0, p_max=20.0, flexible=False),
            Generator(
                bus=1, a=0.02, b=25.0, c=0.0, p_min=0.0, p_max=80.0,
                flexible=True, zeta_plus=15.0, zeta_minus=45.0,
            ),
            Generator(
                bus=2, a=0.05, b=45.0, c=0.0, p_min=0.0, p_max=70.0,
                flexible=True, zeta_plus=15.0, zeta_minus=45.0,
            ),
        ),
    )


def three_bus_demand_spec(n: int = 200) -> SyntheticSpec:
    """Hourly demand over three buses driven by time of day and temperature.

    x = (hour in [0, 24) cyclic, temperature in [-5, 35]); temperatures
    concentrate in [2, 24] with probability 0.9.  Demand is a smooth mean
    profile plus one of three regime offsets (low / typical / high).
    """
    return SyntheticSpec(
        n=n,
        x_low=[0.0, -5.0],
        x_high=[24.0, 35.0],
        periods=(24.0, None),
        weights=[
            [25.0, 8.0, -3.0, 0.45],
            [20.0, 6.0, 2.0, 0.35],
            [15.0, 5.0, -2.0, 0.25],
        ],
        offsets=[[-3.0, -2.0, -2.0], [1.0, 1.0, 0.0], [4.0, 3.0, 3.0]],
        probs=[0.3, 0.5, 0.2],
        core={1: (2.0, 24.0, 0.9)},
    )


def three_bus_aux_kernel() -> Composite:
    return Composite(
        parts=(
            ((0,), CyclicGaussian(period=24.0, sigma=6.0), 1.0),
            ((1,), Gaussian(sigma=14.0), 1.0),
        )
    )


def three_bus_outcome_kernel() -> Gaussian:
    return Gaussian(sigma=8.0)


def three_bus_config_dict(network_path: str, **overrides) -> dict:
    """Benchmark config for the three-bus case as a plain JSON-ready dict."""
    from .kernels import kernel_to_dict
    from .synthetic import spec_to_dict

    base = {
        "seed": 7,
        "aux_kernel": kernel_to_dict(three_bus_aux_kernel()),
        "outcome_kernel": kernel_to_dict(three_bus_outcome_kernel()),
        "lambda_scale": 0.1,
        "gamma": 0.3,
        "sigma_w": 1.1,
        "n_worst_samples": 20,
        "fixed_epsilons": [0.15, 3.0],
        "query_count": 50,
        "network": network_path,
        "synthetic": spec_to_dict(three_bus_demand_spec(200)),
        "solver_tol": 1e-6,
    }
    base.update(overrides)
    return base
