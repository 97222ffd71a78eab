"""Independent brute-force verifiers for the package's mathematical claims.

Everything here is deliberately written against the raw definitions
(transport linear programs, direct maximization over the probability
simplex, Monte-Carlo ratio checks) rather than reusing the assembly code
paths it is meant to verify.  The conic backend is shared, in LP/SOCP mode,
but the programs themselves are built independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import ProgramBuilder, solve_conic
from .embedding import mmd, conditional_weights_plain_batch, regularization_schedule
from .kernels import Kernel, lipschitz_modulus
from .synthetic import SyntheticSpec, synth_generate

__all__ = [
    "DiscreteDistribution",
    "InfeasibleInnerProblem",
    "wasserstein_discrete",
    "primal_inner_max",
    "lipschitz_check",
    "subset_check",
    "embedding_convergence",
    "ConvergenceResult",
]

WEIGHT_SUM_TOLERANCE = 1e-12


class InfeasibleInnerProblem(RuntimeError):
    """The ball is too small to contain any certification-supported law."""


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution: points with nonnegative weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights must have equal length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"weights must sum to one, got {w.sum()}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)


def _cost_matrix(p: DiscreteDistribution, q: DiscreteDistribution, metric, kernel) -> np.ndarray:
    if metric == "euclidean":
        diff = p.points[:, None, :] - q.points[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == "rkhs":
        if kernel is None:
            raise ValueError("rkhs metric requires a kernel")
        k_pp = kernel.diag(p.points)[:, None]
        k_qq = kernel.diag(q.points)[None, :]
        k_pq = kernel.pairwise(p.points, q.points)
        return np.sqrt(np.maximum(k_pp - 2.0 * k_pq + k_qq, 0.0))
    raise ValueError(f"unknown metric {metric!r}")


def wasserstein_discrete(
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    metric: str = "euclidean",
    kernel: Kernel | None = None,
    tol: float = 1e-9,
) -> float:
    """Optimal-transport distance between finite distributions.

    Solves the exact transport linear program (the conic backend in LP
    mode): minimize sum_ij C_ij pi_ij over couplings pi with the two
    prescribed marginals.  With ``metric="rkhs"`` the ground cost is the
    feature-space distance of the given kernel.
    """
    cost = _cost_matrix(p, q, metric, kernel)
    n, m = cost.shape
    builder = ProgramBuilder()
    plan = builder.new_vars(n * m).reshape(n, m)
    for i in range(n):
        for j in range(m):
            builder.add_nonneg([(1.0, plan[i, j])])
            if cost[i, j] != 0.0:
                builder.add_cost(plan[i, j], cost[i, j])
    for i in range(n):
        builder.add_eq([(1.0, plan[i, j]) for j in range(m)], float(p.weights[i]))
    for j in range(m - 1):  # last column constraint is implied by the others
        builder.add_eq([(1.0, plan[i, j]) for i in range(n)], float(q.weights[j]))
    sol = solve_conic(builder.build(), tol=tol)
    if sol.status != "optimal":
        raise RuntimeError(f"transport LP returned status {sol.status}")
    return max(sol.objective, 0.0)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    return (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.T


def primal_inner_max(ball, cert, kernel_y: Kernel, q_values) -> float:
    """Worst-case expected cost over certification-supported distributions.

    Maximizes sum_j p_j q_j over probability vectors p on the certification
    points whose embedding stays within the ball radius of the center.
    Assembled directly from the definition, independent of the dual path.
    """
    q = np.asarray(q_values, dtype=float)
    m = len(cert)
    if q.shape != (m,):
        raise ValueError("one cost value per certification point required")
    l_mat = kernel_y.pairwise(cert.points, cert.points)
    l_mat = 0.5 * (l_mat + l_mat.T)
    l_half = _psd_sqrt(l_mat)

    beta_embedded = np.zeros(m)
    for w, point in zip(ball.center_weights, ball.center_points):
        hits = np.flatnonzero(np.all(np.isclose(cert.points, point, atol=1e-12), axis=1))
        if hits.size == 0:
            raise ValueError("ball center point missing from certification set")
        beta_embedded[hits[0]] += w

    builder = ProgramBuilder()
    p = builder.new_vars(m)
    for j in range(m):
        builder.add_nonneg([(1.0, p[j])])
        builder.add_cost(p[j], -q[j])  # maximize by minimizing the negation
    builder.add_eq([(1.0, p[j]) for j in range(m)], 1.0)
    shift = l_half @ beta_embedded
    rows = [([], float(ball.radius))]
    for r in range(m):
        rows.append(([(l_half[r, j], p[j]) for j in range(m)], -float(shift[r])))
    builder.add_soc(rows)
    sol = solve_conic(builder.build(), tol=1e-9)
    if sol.status == "infeasible":
        raise InfeasibleInnerProblem(
            "no certification-supported distribution lies inside the ball"
        )
    if sol.status != "optimal":
        raise RuntimeError(f"inner maximization returned status {sol.status}")
    return -sol.objective


def lipschitz_check(kernel: Kernel, alpha, points, trial_pairs) -> float:
    """Largest observed slope |f(x1)-f(x2)| / ||x1-x2|| of a kernel expansion.

    ``trial_pairs`` is an array of shape (T, 2, d).  Callers compare the
    result against modulus * ||f|| with ||f|| = sqrt(alpha' K alpha).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(alpha, dtype=float)
    pairs = np.asarray(trial_pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise ValueError("trial_pairs must have shape (T, 2, d)")
    f1 = kernel.pairwise(pairs[:, 0, :], pts) @ a
    f2 = kernel.pairwise(pairs[:, 1, :], pts) @ a
    gaps = np.linalg.norm(pairs[:, 0, :] - pairs[:, 1, :], axis=1)
    keep = gaps > 0
    if not np.any(keep):
        return 0.0
    return float(np.max(np.abs(f1[keep] - f2[keep]) / gaps[keep]))


def subset_check(pairs, kernel: Kernel, tolerance: float = 1e-8) -> int:
    """Count violations of  ||mu_Q - mu_Q0|| <= L * W(Q, Q0)  over pairs.

    The left side is the feature-space norm of the embedding difference and
    the right side the Euclidean transport distance scaled by the kernel's
    Lipschitz modulus; the feature-space ball is contained in the transport
    ball, so the count should be zero.
    """
    modulus = lipschitz_modulus(kernel)
    violations = 0
    for q1, q2 in pairs:
        lhs = mmd(kernel, q1.points, q1.weights, q2.points, q2.weights)
        rhs = modulus * wasserstein_discrete(q1, q2, metric="euclidean")
        if lhs > rhs + tolerance:
            violations += 1
    return violations


@dataclass(frozen=True)
class ConvergenceResult:
    """Mean embedding error per sample count plus the fitted log-log slope."""

    ns: tuple[int, ...]
    mean_errors: tuple[float, ...]
    slope: float


def embedding_convergence(
    spec: SyntheticSpec,
    kernel_x: Kernel,
    kernel_y: Kernel,
    n_list,
    trials: int,
    seed: int,
    n_queries: int = 5,
) -> ConvergenceResult:
    """Average estimation error of the plain conditional embedding vs N.

    For each sample count the error is the feature-space distance between
    the estimated expansion and the generator's exact conditional law,
    averaged over fresh datasets and fixed query points, with the
    regularization following the N**(-1/4) schedule.  The slope comes from
    a least-squares fit in log-log coordinates.
    """
    ns = [int(n) for n in n_list]
    rng = np.random.default_rng(seed)
    queries = spec.sample_x(rng, n_queries)
    errors = []
    for n in ns:
        lam = regularization_schedule(n)
        total = 0.0
        for t in range(trials):
            dataset, truth = synth_generate(spec.with_n(n), seed=int(rng.integers(2**31)))
            w_all = conditional_weights_plain_batch(dataset, kernel_x, lam, queries)
            # one Gram per dataset, reused across queries
            l_yy = kernel_y.pairwise(dataset.ys, dataset.ys)
            l_yy = 0.5 * (l_yy + l_yy.T)
            for w, xq in zip(w_all, queries):
                pts, probs = truth.at(xq)
                l_yt = kernel_y.pairwise(dataset.ys, pts)
                l_tt = kernel_y.pairwise(pts, pts)
                sq = w @ l_yy @ w - 2.0 * w @ l_yt @ probs + probs @ l_tt @ probs
                total += float(np.sqrt(max(sq, 0.0)))
        errors.append(total / (trials * n_queries))
    slope = float(np.polyfit(np.log(ns), np.log(errors), 1)[0])
    return ConvergenceResult(ns=tuple(ns), mean_errors=tuple(errors), slope=slope)
