"""Empirical conditional mean embeddings and query-adaptive ambiguity balls.

Given paired samples (x_i, y_i), the conditional distribution of y at a
query x is represented by a weighted expansion sum_i w_i phi(y_i) in the
outcome feature space, with weights obtained from a regularized Gram solve.
Augmenting the samples with a fictitious observation at the query itself
yields an extra weight whose magnitude measures how much an unseen sample
there would move the estimate; that weight sets the radius of the ambiguity
ball around the empirical embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .kernels import Kernel, rkhs_distances, sup_bound

__all__ = [
    "Dataset",
    "EmbeddingWeights",
    "AmbiguityBall",
    "regularization_schedule",
    "conditional_weights_plain",
    "conditional_weights_augmented",
    "adaptive_radius",
    "ambiguity_ball",
    "mmd",
]

DEFAULT_NEIGHBORS = 50

MMD_RADICAND_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Dataset:
    """Paired auxiliary/outcome samples; rows correspond."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ys = np.atleast_2d(np.asarray(self.ys, dtype=float))
        if xs.shape[0] != ys.shape[0]:
            raise ValueError("xs and ys must have equal length")
        if xs.shape[0] < 1:
            raise ValueError("dataset must contain at least one pair")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self) -> int:
        return self.xs.shape[0]

    def without(self, index: int) -> "Dataset":
        """Copy with one row removed (for held-out queries)."""
        keep = np.arange(len(self)) != index
        return Dataset(self.xs[keep], self.ys[keep])


@dataclass(frozen=True)
class EmbeddingWeights:
    """Solution of the fictitious-sample-augmented Gram system.

    ``beta`` has length m+1: weights for the m selected samples followed by
    the fictitious-sample weight.  ``sample_indices`` are the dataset rows
    the first m weights refer to.
    """

    beta: np.ndarray
    sample_indices: np.ndarray
    lam: float
    query: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        idx = np.asarray(self.sample_indices, dtype=int)
        if beta.shape[0] != idx.shape[0] + 1:
            raise ValueError("beta must have one more entry than sample_indices")
        if not self.lam > 0:
            raise ValueError("lam must be strictly positive")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sample_indices", idx)
        object.__setattr__(self, "query", np.atleast_1d(np.asarray(self.query, dtype=float)))

    @property
    def fictitious(self) -> float:
        """Weight attached to the fictitious sample at the query point."""
        return float(self.beta[-1])


@dataclass(frozen=True)
class AmbiguityBall:
    """Finite expansion center plus a radius in the outcome feature space."""

    center_points: np.ndarray
    center_weights: np.ndarray
    radius: float

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.center_points, dtype=float))
        w = np.asarray(self.center_weights, dtype=float)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("center weights and points must have equal length")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center_points", pts)
        object.__setattr__(self, "center_weights", w)


def regularization_schedule(n: int, c: float = 1.0) -> float:
    """Regularization lambda = c * n**(-1/4)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not c > 0:
        raise ValueError("c must be strictly positive")
    return c * float(n) ** -0.25


def _solve_pd(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system by Cholesky."""
    try:
        factor = sla.cho_factor(mat, lower=True, check_finite=False)
    except sla.LinAlgError as exc:  # impossible for lam > 0 unless data is corrupt
        raise np.linalg.LinAlgError(f"regularized Gram system not PD: {exc}") from exc
    return sla.cho_solve(factor, rhs, check_finite=False)


def conditional_weights_plain(
    dataset: Dataset, kernel_x: Kernel, lam: float, x
) -> np.ndarray:
    """Weights w with mu_hat(.|x) = sum_i w_i phi(y_i).

    Solves (K + lam*N*I) w = k_x for the full dataset; the system is solved
    by factorization, never by forming an explicit inverse.
    """
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    return conditional_weights_plain_batch(dataset, kernel_x, lam, xv[None, :])[0]


def conditional_weights_plain_batch(
    dataset: Dataset, kernel_x: Kernel, lam: float, queries
) -> np.ndarray:
    """Plain conditional weights for several queries off one factorization.

    Returns an array of shape (n_queries, N), one weight row per query.
    """
    if not lam > 0:
        raise ValueError("lam must be strictly positive")
    qs = np.atleast_2d(np.asarray(queries, dtype=float))
    if not np.all(np.isfinite(qs)):
        raise ValueError("query contains non-finite entries")
    n = len(dataset)
    k = kernel_x.pairwise(dataset.xs, dataset.xs)
    k = 0.5 * (k + k.T)
    k_q = kernel_x.pairwise(dataset.xs, qs)
    return _solve_pd(k + lam * n * np.eye(n), k_q).T


def conditional_weights_augmented(
    dataset: Dataset,
    kernel_x: Kernel,
    lam: float,
    x,
    m: int | None = None,
) -> EmbeddingWeights:
    """Embedding weights with a fictitious sample placed at the query.

    The m dataset points nearest to x in the auxiliary feature-space
    distance are kept (ties broken by lower index).  The (m+1)-point system
    uses the augmented Gram matrix with regularization lam*(m+1); the last
    weight belongs to the fictitious sample.
    """
    if not lam > 0:
        raise ValueError("lam must be strictly positive")
    n = len(dataset)
    if m is None:
        m = min(n, DEFAULT_NEIGHBORS)
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xv)):
        raise ValueError("query contains non-finite entries")

    dists = rkhs_distances(kernel_x, dataset.xs, xv)
    order = np.argsort(dists, kind="stable")  # stable sort: ties go to lower index
    selected = np.sort(order[:m])

    pts = dataset.xs[selected]
    k_mm = kernel_x.pairwise(pts, pts)
    k_mm = 0.5 * (k_mm + k_mm.T)
    k_mx = kernel_x.pairwise(pts, xv[None, :])[:, 0]
    k_xx = float(kernel_x.pairwise(xv[None, :], xv[None, :])[0, 0])

    aug = np.empty((m + 1, m + 1))
    aug[:m, :m] = k_mm
    aug[:m, m] = k_mx
    aug[m, :m] = k_mx
    aug[m, m] = k_xx
    rhs = np.concatenate([k_mx, [k_xx]])

    beta = _solve_pd(aug + lam * (m + 1) * np.eye(m + 1), rhs)
    return EmbeddingWeights(beta=beta, sample_indices=selected, lam=lam, query=xv)


def adaptive_radius(weights: EmbeddingWeights, r_bound: float, gamma: float) -> float:
    """Radius |beta_fictitious| * R + gamma * (m+1)**(-1/4)."""
    if not r_bound > 0:
        raise ValueError("r_bound must be strictly positive")
    if not gamma > 0:
        raise ValueError("gamma must be strictly positive")
    count = weights.beta.shape[0]
    return abs(weights.fictitious) * r_bound + gamma * count**-0.25


def ambiguity_ball(
    weights: EmbeddingWeights,
    dataset: Dataset,
    r_bound: float | None = None,
    gamma: float = 1.0,
    kernel_y: Kernel | None = None,
    radius: float | None = None,
) -> AmbiguityBall:
    """Ambiguity ball around the empirical conditional embedding.

    The center keeps only the dataset-sample weights; the fictitious term
    is absorbed into the radius.  ``radius`` overrides the adaptive formula
    with a fixed value.  When ``r_bound`` is omitted it is taken from the
    outcome kernel's uniform bound.
    """
    if r_bound is None:
        if kernel_y is None:
            raise ValueError("need either r_bound or kernel_y to bound the kernel")
        r_bound = sup_bound(kernel_y)
    eps = adaptive_radius(weights, r_bound, gamma) if radius is None else float(radius)
    if eps < 0:
        raise ValueError("radius must be nonnegative")
    return AmbiguityBall(
        center_points=dataset.ys[weights.sample_indices],
        center_weights=weights.beta[:-1].copy(),
        radius=eps,
    )


def mmd(kernel_y: Kernel, points_a, weights_a, points_b, weights_b) -> float:
    """Feature-space norm of the difference of two finite expansions.

    Computes sqrt(v' L v) where v stacks weights_a and -weights_b and L is
    the Gram matrix of the stacked support points.  Tiny negative radicands
    are clamped to zero; anything below -1e-10 is an error.
    """
    pa = np.atleast_2d(np.asarray(points_a, dtype=float))
    pb = np.atleast_2d(np.asarray(points_b, dtype=float))
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    if pa.shape[0] != wa.shape[0] or pb.shape[0] != wb.shape[0]:
        raise ValueError("weights and points must have equal length")
    pts = np.vstack([pa, pb])
    v = np.concatenate([wa, -wb])
    l_mat = kernel_y.pairwise(pts, pts)
    l_mat = 0.5 * (l_mat + l_mat.T)
    radicand = float(v @ l_mat @ v)
    if radicand < -MMD_RADICAND_TOLERANCE:
        raise ValueError(f"negative squared MMD {radicand}: broken kernel")
    return float(np.sqrt(max(radicand, 0.0)))
