"""Seeded numerical verification suites behind the ``validate`` subcommand.

Each suite exercises one mathematical claim through the independent
verifiers in :mod:`ckdro.oracle` and reports pass/fail per assertion.  The
suites are sized to finish in well under a minute.
"""

from __future__ import annotations

import numpy as np

from .dro import build_certification_set, fixed_values_cost, solve_ckdro
from .embedding import AmbiguityBall, mmd
from .kernels import Gaussian, gram, lipschitz_modulus, rkhs_distance
from .oracle import (
    DiscreteDistribution,
    lipschitz_check,
    primal_inner_max,
    subset_check,
    wasserstein_discrete,
)

__all__ = ["run_suites"]


def _assertion(name: str, passed: bool, detail: str = "") -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _random_distribution(rng, max_support=4, dim=1) -> DiscreteDistribution:
    n = int(rng.integers(1, max_support + 1))
    w = rng.random(n) + 0.1
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()  # exact unit sum
    return DiscreteDistribution(points=rng.normal(0, 2, (n, dim)), weights=w)


def _suite_transport(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []
    d = wasserstein_discrete(
        DiscreteDistribution([[0.0]], [1.0]), DiscreteDistribution([[3.0]], [1.0])
    )
    out.append(_assertion("dirac-pair-distance", abs(d - 3.0) <= 1e-8, f"{d}"))
    q = _random_distribution(rng)
    same = wasserstein_discrete(q, q)
    out.append(_assertion("identical-distributions-zero", same <= 1e-7, f"{same}"))
    q1, q2 = _random_distribution(rng), _random_distribution(rng)
    sym = abs(wasserstein_discrete(q1, q2) - wasserstein_discrete(q2, q1))
    out.append(_assertion("symmetry", sym <= 1e-7, f"{sym}"))
    return out


def _suite_kantorovich(seed: int) -> list[dict]:
    # sample 1-Lipschitz piecewise-linear test functions; the mean gap they
    # witness can never exceed the transport distance
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(60):
        q1, q2 = _random_distribution(rng), _random_distribution(rng)
        dist = wasserstein_discrete(q1, q2)
        knots = np.sort(rng.normal(0, 3, 8))
        slopes = rng.uniform(-1, 1, 9)

        def h(x):
            val = np.zeros_like(x)
            val += slopes[0] * np.minimum(x - knots[0], 0)
            for i in range(len(knots) - 1):
                val += slopes[i + 1] * np.clip(x, knots[i], knots[i + 1])
            val += slopes[-1] * np.maximum(x - knots[-1], 0)
            return val

        gap = float(
            h(q1.points[:, 0]) @ q1.weights - h(q2.points[:, 0]) @ q2.weights
        )
        worst = max(worst, gap - dist)
    return [_assertion("lipschitz-witness-bounded", worst <= 1e-8, f"max excess {worst}")]


def _suite_feature_metric(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    kernel = Gaussian(sigma=1.0)
    out = []
    # dual form on Diracs: transport with the feature-space ground cost
    worst = 0.0
    for _ in range(40):
        a, b = rng.normal(0, 2, 2), rng.normal(0, 2, 2)
        lp = wasserstein_discrete(
            DiscreteDistribution([a], [1.0]),
            DiscreteDistribution([b], [1.0]),
            metric="rkhs",
            kernel=kernel,
        )
        worst = max(worst, abs(lp - rkhs_distance(kernel, a, b)))
    out.append(_assertion("dirac-feature-transport", worst <= 1e-7, f"max gap {worst}"))
    # saturation and Lipschitz bound on random pairs
    pts = rng.normal(0, 5, (4000, 2))
    dists = np.array([rkhs_distance(kernel, pts[2 * i], pts[2 * i + 1]) for i in range(2000)])
    gaps = np.linalg.norm(pts[0::2] - pts[1::2], axis=1)
    out.append(
        _assertion("saturation-sqrt2", float(np.max(dists)) <= np.sqrt(2) + 1e-9)
    )
    out.append(
        _assertion(
            "distance-lipschitz",
            bool(np.all(dists <= lipschitz_modulus(kernel) * gaps + 1e-9)),
        )
    )
    psd = gram(kernel, rng.normal(0, 1, (40, 2))).min_eigenvalue()
    out.append(_assertion("gram-psd", psd >= -1e-10, f"min eig {psd}"))
    return out


def _suite_expansion_slope(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    kernel = Gaussian(sigma=1.0)
    pts = rng.normal(0, 1, (6, 2))
    alpha = rng.normal(0, 1, 6)
    k = gram(kernel, pts).entries
    norm_f = float(np.sqrt(alpha @ k @ alpha))
    pairs = rng.normal(0, 3, (4000, 2, 2))
    ratio = lipschitz_check(kernel, alpha, pts, pairs)
    bound = lipschitz_modulus(kernel) * norm_f
    return [
        _assertion("expansion-slope-bounded", ratio <= bound + 1e-9, f"{ratio} vs {bound}")
    ]


def _suite_subset(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    kernel = Gaussian(sigma=1.0)
    pairs = [(_random_distribution(rng), _random_distribution(rng)) for _ in range(100)]
    bad = subset_check(pairs, kernel)
    return [_assertion("embedding-ball-inside-transport-ball", bad == 0, f"{bad} violations")]


def _suite_duality(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    kernel = Gaussian(sigma=1.0)
    out = []
    worst = 0.0
    for _ in range(5):
        m = int(rng.integers(3, 8))
        points = np.sort(rng.normal(0, 1.5, m))[:, None]
        cert = build_certification_set(points, m, 0.0, seed=0)
        w = rng.random(2)
        w /= w.sum()
        ball = AmbiguityBall(
            center_points=points[:2], center_weights=w, radius=float(rng.uniform(0.05, 0.6))
        )
        q_values = rng.normal(0, 1, m)
        primal = primal_inner_max(ball, cert, kernel, q_values)
        dual = solve_ckdro(
            ball, cert, kernel, fixed_values_cost(cert.points, q_values), tol=1e-9
        ).value
        worst = max(worst, abs(primal - dual))
    out.append(_assertion("inner-strong-duality", worst <= 1e-5, f"max gap {worst}"))
    return out


def _suite_embedding_error(seed: int) -> list[dict]:
    from .kernels import Gaussian as G
    from .oracle import embedding_convergence
    from .synthetic import SyntheticSpec

    spec = SyntheticSpec(
        n=25,
        x_low=[0.0],
        x_high=[10.0],
        periods=(None,),
        weights=[[0.0, 1.0]],
        offsets=[[-0.5], [0.5]],
        probs=[0.5, 0.5],
    )
    result = embedding_convergence(
        spec, G(sigma=1.0), G(sigma=1.0), [25, 100, 400], trials=3, seed=seed, n_queries=3
    )
    decreasing = all(
        a > b for a, b in zip(result.mean_errors, result.mean_errors[1:])
    )
    return [
        _assertion("error-decreasing-in-n", decreasing, f"{result.mean_errors}"),
        _assertion("loglog-slope-negative", result.slope < 0, f"slope {result.slope}"),
    ]


def run_suites(seed: int = 0) -> dict:
    """Run every verification suite; returns a JSON-serializable summary."""
    suites = {
        "transport": _suite_transport(seed),
        "kantorovich": _suite_kantorovich(seed + 1),
        "feature_metric": _suite_feature_metric(seed + 2),
        "expansion_slope": _suite_expansion_slope(seed + 3),
        "subset": _suite_subset(seed + 4),
        "duality": _suite_duality(seed + 5),
        "embedding_error": _suite_embedding_error(seed + 6),
    }
    payload = {
        "seed": seed,
        "suites": {
            name: {
                "assertions": assertions,
                "passed": all(a["passed"] for a in assertions),
            }
            for name, assertions in suites.items()
        },
    }
    payload["total_assertions"] = sum(len(a) for a in suites.values())
    payload["passed"] = all(s["passed"] for s in payload["suites"].values())
    return payload
