"""Worst-case expectation over an ambiguity ball: primal vs dual route.

The primal route maximizes the expected cost over probability vectors on
the certification points whose embedding stays inside the ball.  The dual
route solves the finite conic program with a dual function expanded on the
same points.  Strong duality makes the two values coincide, and the value
grows monotonically with the radius.
"""

import numpy as np

from ckdro.dro import build_certification_set, fixed_values_cost, solve_ckdro
from ckdro.embedding import AmbiguityBall
from ckdro.kernels import Gaussian
from ckdro.oracle import primal_inner_max

kernel = Gaussian(sigma=1.0)
rng = np.random.default_rng(5)

points = np.sort(rng.normal(0.0, 1.2, 7))[:, None]
cert = build_certification_set(points, 7, 0.0, seed=0)
q_values = rng.normal(0.0, 1.0, 7)
center_weights = np.array([0.5, 0.3, 0.2])
ball0 = AmbiguityBall(center_points=points[:3], center_weights=center_weights, radius=0.0)

print("certification costs:", np.round(q_values, 3))
print("center expectation :", round(float(center_weights @ q_values[:3]), 4))
print("\nradius   primal (direct max)   dual (conic program)")
for radius in (0.0, 0.1, 0.3, 0.6, 1.0, 2.0):
    ball = AmbiguityBall(
        center_points=ball0.center_points,
        center_weights=ball0.center_weights,
        radius=radius,
    )
    primal = primal_inner_max(ball, cert, kernel, q_values)
    dual = solve_ckdro(
        ball, cert, kernel, fixed_values_cost(cert.points, q_values), tol=1e-9
    ).value
    print(f"  {radius:4.1f}        {primal: .6f}            {dual: .6f}")

print(f"\nlargest certification cost = {q_values.max():.6f}")
print("a big enough ball frees the adversary to put all mass on it")
