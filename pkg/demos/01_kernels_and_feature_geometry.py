"""Kernels and the geometry they induce on the input space.

Shows the feature-space distance d(x, x') = sqrt(2 - 2 k(x, x')) for a
Gaussian kernel saturating at sqrt(2), the Lipschitz relation
d <= ||x - x'|| / sigma, wrapped displacement for cyclic coordinates, and
Gram-matrix positive semidefiniteness.
"""

import numpy as np

from ckdro.kernels import (
    Composite,
    CyclicGaussian,
    Gaussian,
    evaluate,
    gram,
    lipschitz_modulus,
    rkhs_distance,
)

kernel = Gaussian(sigma=1.0)

print("Feature distance vs Euclidean gap (Gaussian, sigma=1):")
for gap in (0.1, 0.5, 1.0, 2.0, 4.0, 10.0):
    d = rkhs_distance(kernel, [0.0], [gap])
    print(f"  ||dx|| = {gap:5.1f}  ->  d = {d:.5f}   (bound {gap / 1.0:.2f})")
print(f"  saturation level sqrt(2) = {np.sqrt(2):.5f}")
print(f"  Lipschitz modulus 1/sigma = {lipschitz_modulus(kernel)}")

print("\nCyclic hours wrap around midnight (period 24, sigma 3):")
cyc = CyclicGaussian(period=24.0, sigma=3.0)
print(f"  k(23h,  1h) = {evaluate(cyc, [23.0], [1.0]):.5f}   (displacement 2h)")
print(f"  k(23h, 11h) = {evaluate(cyc, [23.0], [11.0]):.5f}   (displacement 12h)")

print("\nComposite kernel: cyclic hour block x temperature block")
combo = Composite(
    parts=(
        ((0,), CyclicGaussian(period=24.0, sigma=6.0), 1.0),
        ((1,), Gaussian(sigma=14.0), 1.0),
    )
)
x = [23.0, 18.0]
for other in ([1.0, 19.0], [12.0, 19.0], [1.0, -4.0]):
    print(f"  k({x}, {other}) = {evaluate(combo, x, other):.5f}")

rng = np.random.default_rng(0)
points = np.column_stack([rng.uniform(0, 24, 60), rng.uniform(-5, 35, 60)])
g = gram(combo, points)
print(f"\nGram matrix of 60 random points: min eigenvalue {g.min_eigenvalue():.2e}"
      f", jitter applied {g.jitter:.1e}")
