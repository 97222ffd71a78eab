"""Finite dual of the distributionally robust problem over an ambiguity ball.

The worst-case expected cost over embeddings within radius eps of the ball
center dualizes to

    min  f0 + sum_i beta_i f(y_i) + eps ||f||
    s.t. q(eta, y_j) <= f(y_j) + f0   for every certification point y_j,

with the dual function f parameterized on the certification set as
f(y) = sum_j alpha_j l(y_j, y) and ||f|| = sqrt(alpha' L alpha).  This
module assembles that program in canonical conic form, with the cost
epigraphs supplied by a pluggable :class:`CostModel`, and solves it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conic import ConicProgram, ConicSolution, ProgramBuilder, SolverFailure, solve_conic
from .embedding import AmbiguityBall
from .kernels import Kernel

__all__ = [
    "CertificationSet",
    "CostModel",
    "DroSolution",
    "build_certification_set",
    "assemble_dual",
    "solve_ckdro",
    "evaluate_dual_function",
    "constant_cost",
    "fixed_values_cost",
]

log = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 0.0


@dataclass(frozen=True)
class CertificationSet:
    """Outcome points the dual constraint is enforced on, with provenance."""

    points: np.ndarray
    source_indices: np.ndarray  # index into the base outcomes each point came from
    noise_sigma: np.ndarray  # per-dimension noise scale used for the padding
    seed: int

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise ValueError("certification set must contain at least one point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(
            self, "source_indices", np.asarray(self.source_indices, dtype=int)
        )
        object.__setattr__(
            self, "noise_sigma", np.atleast_1d(np.asarray(self.noise_sigma, dtype=float))
        )

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class CostModel:
    """Convex scenario cost q(eta, y) in epigraph form.

    ``build_epigraph(builder, eta, y)`` must emit auxiliary variables plus
    cone/equality rows so that the returned variable t satisfies
    t >= q(eta, y); the emission must be deterministic per y.
    ``constrain_decision`` adds the feasible-set rows for eta once per
    program.  ``evaluate`` is an independent evaluator used for checking
    solutions, never by the assembly itself.
    """

    decision_dim: int
    build_epigraph: Callable[[ProgramBuilder, np.ndarray, np.ndarray], int]
    constrain_decision: Callable[[ProgramBuilder, np.ndarray], None] | None = None
    evaluate: Callable[[np.ndarray, np.ndarray], float] | None = None


@dataclass(frozen=True)
class DroSolution:
    """Decision, dual-function coefficients, and the certified value."""

    eta: np.ndarray
    alpha: np.ndarray
    f0: float
    value: float
    status: str
    residuals: tuple[float, float, float]


def constant_cost(value: float) -> CostModel:
    """Cost model q(eta, y) = value with no decision."""

    def build(builder: ProgramBuilder, eta: np.ndarray, y: np.ndarray) -> int:
        t = builder.new_var()
        builder.add_eq([(1.0, t)], float(value))
        return t

    return CostModel(
        decision_dim=0, build_epigraph=build, evaluate=lambda eta, y: float(value)
    )


def fixed_values_cost(cert_points: np.ndarray, values: np.ndarray) -> CostModel:
    """Decision-free cost assigning a fixed value to each certification point."""
    pts = np.atleast_2d(np.asarray(cert_points, dtype=float))
    vals = np.asarray(values, dtype=float)
    if pts.shape[0] != vals.shape[0]:
        raise ValueError("one value per certification point required")

    def lookup(y: np.ndarray) -> float:
        match = np.flatnonzero(np.all(np.isclose(pts, y, atol=1e-12), axis=1))
        if match.size == 0:
            raise ValueError("point not in the certification set")
        return float(vals[match[0]])

    def build(builder: ProgramBuilder, eta: np.ndarray, y: np.ndarray) -> int:
        t = builder.new_var()
        builder.add_eq([(1.0, t)], lookup(y))
        return t

    return CostModel(
        decision_dim=0, build_epigraph=build, evaluate=lambda eta, y: lookup(np.asarray(y))
    )


def build_certification_set(
    outcomes, m_points: int, noise_sigma, seed: int, pool=None
) -> CertificationSet:
    """Certification set from a base set of outcome points.

    Every base outcome is included verbatim (so ambiguity-ball centers are
    always covered), and the set is padded to ``m_points`` with outcomes
    drawn uniformly with replacement from ``pool`` (the base outcomes when
    omitted; pass the full dataset outcomes to approximate their support)
    and perturbed by zero-mean Gaussian noise of scale ``noise_sigma`` (a
    scalar or one scale per outcome dimension).  Deterministic given the
    seed.
    """
    base = np.atleast_2d(np.asarray(outcomes, dtype=float))
    pool_pts = base if pool is None else np.atleast_2d(np.asarray(pool, dtype=float))
    n = base.shape[0]
    if m_points < n:
        raise ValueError(f"m_points must be >= the {n} base outcomes, got {m_points}")
    sigma = np.broadcast_to(
        np.atleast_1d(np.asarray(noise_sigma, dtype=float)), (base.shape[1],)
    ).copy()
    if np.any(sigma < 0):
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    extra = m_points - n
    if extra:
        picks = rng.integers(0, pool_pts.shape[0], size=extra)
        noise = rng.standard_normal((extra, base.shape[1])) * sigma
        points = np.vstack([base, pool_pts[picks] + noise])
        sources = np.concatenate([np.arange(n), picks])
    else:
        points = base.copy()
        sources = np.arange(n)
    return CertificationSet(
        points=points, source_indices=sources, noise_sigma=sigma, seed=int(seed)
    )


def _locate_rows(needles: np.ndarray, haystack: np.ndarray) -> np.ndarray:
    """Index of each needle row in haystack; exact match required."""
    out = np.empty(needles.shape[0], dtype=int)
    for i, row in enumerate(needles):
        hits = np.flatnonzero(np.all(haystack == row, axis=1))
        if hits.size == 0:
            hits = np.flatnonzero(np.all(np.isclose(haystack, row, atol=1e-12), axis=1))
        if hits.size == 0:
            raise ValueError("ambiguity-ball center point missing from certification set")
        out[i] = hits[0]
    return out


def gram_sqrt(l_mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root with eigenvalue flooring at zero."""
    vals, vecs = np.linalg.eigh(l_mat)
    floored = int(np.sum(vals < EIGENVALUE_FLOOR))
    if floored:
        log.info("floored %d negative Gram eigenvalues (min %.3e)", floored, vals[0])
    vals = np.maximum(vals, EIGENVALUE_FLOOR)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _assemble(
    ball: AmbiguityBall, cert: CertificationSet, kernel_y: Kernel, cost: CostModel
):
    """Build the dual conic program; returns (builder output, index layout)."""
    m = len(cert)
    l_mat = kernel_y.pairwise(cert.points, cert.points)
    l_mat = 0.5 * (l_mat + l_mat.T)
    l_half = gram_sqrt(l_mat)
    center_rows = _locate_rows(ball.center_points, cert.points)

    builder = ProgramBuilder()
    eta = builder.new_vars(cost.decision_dim)
    alpha = builder.new_vars(m)
    f0 = builder.new_var()
    s = builder.new_var()

    # objective: f0 + sum_i beta_i * (L alpha)[row_i] + eps * s
    builder.add_cost(f0, 1.0)
    obj_alpha = ball.center_weights @ l_mat[center_rows, :]
    builder.add_cost_terms(
        (coef, alpha[j]) for j, coef in enumerate(obj_alpha) if coef != 0.0
    )
    builder.add_cost(s, float(ball.radius))

    # s >= || L^{1/2} alpha ||
    soc_rows = [([(1.0, s)], 0.0)]
    for r in range(m):
        soc_rows.append(([(l_half[r, j], alpha[j]) for j in range(m)], 0.0))
    builder.add_soc(soc_rows)

    if cost.constrain_decision is not None:
        cost.constrain_decision(builder, eta)

    # scenario constraints: t_j <= f(y_j) + f0 with t_j >= q(eta, y_j)
    for j in range(m):
        t_j = cost.build_epigraph(builder, eta, cert.points[j])
        row = [(l_mat[j, k], alpha[k]) for k in range(m)]
        row.append((1.0, f0))
        row.append((-1.0, t_j))
        builder.add_nonneg(row)

    program = builder.build()
    layout = {"eta": eta, "alpha": alpha, "f0": f0, "s": s}
    return program, layout, l_mat


def assemble_dual(
    ball: AmbiguityBall, cert: CertificationSet, kernel_y: Kernel, cost: CostModel
) -> ConicProgram:
    """Canonical conic form of the dual program over the certification set."""
    program, _, _ = _assemble(ball, cert, kernel_y, cost)
    return program


def solve_ckdro(
    ball: AmbiguityBall,
    cert: CertificationSet,
    kernel_y: Kernel,
    cost: CostModel,
    tol: float = 1e-8,
) -> DroSolution:
    """Assemble and solve the dual; the value upper-bounds the worst-case
    expected cost over ball members supported on the certification set."""
    program, layout, l_mat = _assemble(ball, cert, kernel_y, cost)
    sol = solve_conic(program, tol=tol)
    if sol.status != "optimal":
        raise SolverFailure(f"dual solve returned status {sol.status}")
    alpha = sol.primal[layout["alpha"]]
    f0 = float(sol.primal[layout["f0"]])
    center_rows = _locate_rows(ball.center_points, cert.points)
    norm_f = float(np.sqrt(max(alpha @ l_mat @ alpha, 0.0)))
    value = (
        f0
        + float(ball.center_weights @ (l_mat[center_rows, :] @ alpha))
        + ball.radius * norm_f
    )
    if abs(value - (sol.objective - program.offset)) > 1e-6 * (1.0 + abs(value)):
        raise SolverFailure(
            f"objective reconstruction mismatch: {value} vs {sol.objective}"
        )
    return DroSolution(
        eta=sol.primal[layout["eta"]].copy(),
        alpha=alpha.copy(),
        f0=f0,
        value=value,
        status=sol.status,
        residuals=(sol.residuals.primal, sol.residuals.dual, sol.residuals.gap),
    )


def evaluate_dual_function(
    alpha: np.ndarray, cert: CertificationSet, kernel_y: Kernel, y
) -> float:
    """f(y) = sum_j alpha_j l(y_j, y)."""
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    k_col = kernel_y.pairwise(cert.points, yv[None, :])[:, 0]
    return float(np.asarray(alpha, dtype=float) @ k_col)
