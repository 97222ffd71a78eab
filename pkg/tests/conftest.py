import numpy as np
import pytest

from ckdro.opf import Generator, Line, PowerNetwork


@pytest.fixture
def two_bus():
    """Single generator at bus 0 feeding demand at bus 1 over one line."""
    return PowerNetwork(
        n_buses=2,
        lines=(Line(0, 1, 0.1, -100.0, 100.0),),
        generators=(
            Generator(
                bus=0, a=0.0, b=10.0, c=0.0, p_min=0.0, p_max=100.0,
                flexible=True, zeta_plus=1.0, zeta_minus=100.0,
            ),
        ),
    )


def random_three_bus(rng: np.random.Generator) -> tuple[PowerNetwork, np.ndarray]:
    """Random connected 3-bus triangle instance plus a feasible demand."""
    gens = []
    for bus in range(3):
        gens.append(
            Generator(
                bus=bus,
                a=float(rng.uniform(0.001, 0.05)),
                b=float(rng.uniform(5.0, 40.0)),
                c=float(rng.uniform(0.0, 50.0)),
                p_min=0.0,
                p_max=float(rng.uniform(40.0, 120.0)),
                flexible=bool(bus > 0 or rng.random() < 0.5),
                zeta_plus=float(rng.uniform(1.0, 10.0)),
                zeta_minus=float(rng.uniform(10.0, 80.0)),
            )
        )
    if not any(g.flexible for g in gens):
        gens[-1] = Generator(
            bus=2, a=gens[-1].a, b=gens[-1].b, c=gens[-1].c,
            p_min=0.0, p_max=gens[-1].p_max,
            flexible=True, zeta_plus=2.0, zeta_minus=20.0,
        )
    net = PowerNetwork(
        n_buses=3,
        lines=(
            Line(0, 1, float(rng.uniform(0.05, 0.2)), -150.0, 150.0),
            Line(1, 2, float(rng.uniform(0.05, 0.2)), -150.0, 150.0),
            Line(0, 2, float(rng.uniform(0.05, 0.2)), -150.0, 150.0),
        ),
        generators=tuple(gens),
    )
    capacity = sum(g.p_max for g in gens)
    demand = rng.uniform(0.05, 0.25, size=3) * capacity
    return net, demand
