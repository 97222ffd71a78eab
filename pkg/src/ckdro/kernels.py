"""Positive-definite kernels, Gram matrices, and RKHS geometry.

Kernels are small frozen dataclasses that know how to evaluate themselves
pairwise on batches of points.  On top of that this module provides the
feature-space distance d(x, x') = sqrt(k(x,x) - 2 k(x,x') + k(x',x')), the
uniform bound R = sup k, and the modulus L with d(x, x') <= L ||x - x||
used to relate the feature-space geometry to Euclidean geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Kernel",
    "Gaussian",
    "Laplacian",
    "Polynomial",
    "CyclicGaussian",
    "Composite",
    "GramMatrix",
    "UnboundedKernelError",
    "evaluate",
    "gram",
    "rkhs_distance",
    "rkhs_distances",
    "sup_bound",
    "lipschitz_modulus",
    "kernel_from_dict",
    "kernel_to_dict",
]

# Raw Gram matrices are accepted as PSD if no eigenvalue is below this.
PSD_TOLERANCE = 1e-10

# Squared-distance radicands above this (in magnitude) mean a broken kernel.
RADICAND_TOLERANCE = 1e-12


class UnboundedKernelError(ValueError):
    """Raised when a kernel has no uniform bound or Lipschitz modulus."""


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"expected a 2-d array of points, got shape {pts.shape}")
    return pts


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    a2 = np.sum(a * a, axis=1)[:, None]
    b2 = np.sum(b * b, axis=1)[None, :]
    d2 = a2 + b2 - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


class Kernel:
    """Base class; subclasses implement :meth:`pairwise`."""

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel matrix k(a_i, b_j) for two (n, d) / (m, d) batches."""
        raise NotImplementedError

    def diag(self, a: np.ndarray) -> np.ndarray:
        """Vector of k(a_i, a_i); overridden where it is cheap."""
        return np.array([self.pairwise(p[None, :], p[None, :])[0, 0] for p in a])

    def check_dim(self, dim: int) -> None:
        """Raise if the kernel cannot consume ``dim``-dimensional inputs."""

    def __call__(self, x, xp) -> float:
        return evaluate(self, x, xp)


@dataclass(frozen=True)
class Gaussian(Kernel):
    """k(x, x') = exp(-||x - x'||^2 / (2 sigma^2)).

    The bandwidth is the sigma of the exponent; the rate form
    exp(-lam ||.||^2) is available through :attr:`lam`.
    """

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be strictly positive")

    @property
    def lam(self) -> float:
        """Rate parameterization, lam = 1 / (2 sigma^2)."""
        return 1.0 / (2.0 * self.sigma**2)

    def pairwise(self, a, b):
        return np.exp(-_sq_dists(a, b) / (2.0 * self.sigma**2))

    def diag(self, a):
        return np.ones(a.shape[0])


@dataclass(frozen=True)
class Laplacian(Kernel):
    """k(x, x') = exp(-||x - x'||_1 / scale)."""

    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be strictly positive")

    def pairwise(self, a, b):
        d1 = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
        return np.exp(-d1 / self.scale)

    def diag(self, a):
        return np.ones(a.shape[0])


@dataclass(frozen=True)
class Polynomial(Kernel):
    """k(x, x') = (x . x')^degree; unbounded on unbounded domains."""

    degree: int = 2

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be an integer >= 1")

    def pairwise(self, a, b):
        return (a @ b.T) ** self.degree

    def diag(self, a):
        return np.sum(a * a, axis=1) ** self.degree


@dataclass(frozen=True)
class CyclicGaussian(Kernel):
    """Gaussian of the wrapped displacement on a circle of given period.

    Each coordinate is compared through min(|delta| mod T, T - |delta| mod T),
    so e.g. with period 24 the displacement between hour 23 and hour 1 is 2.
    Positive semidefiniteness is checked per Gram matrix rather than assumed.
    """

    period: float = 24.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be strictly positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be strictly positive")

    def wrapped(self, a, b) -> np.ndarray:
        """Pairwise squared wrapped displacement, summed over coordinates."""
        raw = np.abs(a[:, None, :] - b[None, :, :]) % self.period
        wrapped = np.minimum(raw, self.period - raw)
        return np.sum(wrapped**2, axis=2)

    def pairwise(self, a, b):
        return np.exp(-self.wrapped(a, b) / (2.0 * self.sigma**2))

    def diag(self, a):
        return np.ones(a.shape[0])


@dataclass(frozen=True)
class Composite(Kernel):
    """Product of per-block kernels raised to positive weights.

    ``parts`` is a sequence of (dims, kernel, weight) where the dims tuples
    partition range(total_dim).  For Gaussian blocks this is exactly one
    Gaussian whose exponent adds the weighted squared per-block distances,
    which keeps the product positive definite.
    """

    parts: tuple[tuple[tuple[int, ...], Kernel, float], ...]

    def __post_init__(self):
        parts = tuple(
            (tuple(int(i) for i in dims), kern, float(w)) for dims, kern, w in self.parts
        )
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("composite kernel needs at least one part")
        seen: list[int] = []
        for dims, kern, w in parts:
            if not w > 0:
                raise ValueError("part weights must be strictly positive")
            if not isinstance(kern, Kernel):
                raise TypeError("part kernels must be Kernel instances")
            seen.extend(dims)
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("part dimension sets must partition 0..d-1")

    @property
    def total_dim(self) -> int:
        return sum(len(dims) for dims, _, _ in self.parts)

    def check_dim(self, dim: int) -> None:
        if dim != self.total_dim:
            raise ValueError(
                f"composite kernel configured for {self.total_dim} dims, got {dim}"
            )

    def pairwise(self, a, b):
        out = np.ones((a.shape[0], b.shape[0]))
        for dims, kern, w in self.parts:
            cols = list(dims)
            out = out * kern.pairwise(a[:, cols], b[:, cols]) ** w
        return out

    def diag(self, a):
        out = np.ones(a.shape[0])
        for dims, kern, w in self.parts:
            out = out * kern.diag(a[:, list(dims)]) ** w
        return out


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix with the diagonal jitter that was applied.

    ``jitter`` is zero unless the raw matrix failed a Cholesky factorization,
    in which case a recorded multiple of the identity was added.
    """

    entries: np.ndarray
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def evaluate(kernel: Kernel, x, xp) -> float:
    """Evaluate k(x, x') on a single pair of vectors."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    xb = np.atleast_1d(np.asarray(xp, dtype=float))
    if xa.shape != xb.shape:
        raise ValueError(f"dimension mismatch: {xa.shape} vs {xb.shape}")
    kernel.check_dim(xa.shape[0])
    return float(kernel.pairwise(xa[None, :], xb[None, :])[0, 0])


def gram(kernel: Kernel, points: Sequence | np.ndarray) -> GramMatrix:
    """Gram matrix of a point set, jittered only if Cholesky fails.

    The matrix is symmetrized exactly.  If the raw matrix is not numerically
    positive definite, a trace-scaled diagonal shift is added (escalating by
    factors of 10 until Cholesky succeeds) and recorded in the result.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("gram requires a nonempty point list")
    kernel.check_dim(pts.shape[1])
    k = kernel.pairwise(pts, pts)
    k = 0.5 * (k + k.T)
    jitter = 0.0
    base = PSD_TOLERANCE * max(np.trace(k) / k.shape[0], 1.0)
    for attempt in range(12):
        try:
            np.linalg.cholesky(k + jitter * np.eye(k.shape[0]))
            break
        except np.linalg.LinAlgError:
            jitter = base * 10.0**attempt
    else:
        raise np.linalg.LinAlgError("Gram matrix is far from positive semidefinite")
    if jitter > 0.0:
        k = k + jitter * np.eye(k.shape[0])
    return GramMatrix(entries=k, jitter=jitter)


def rkhs_distance(kernel: Kernel, x, xp) -> float:
    """Feature-space distance sqrt(k(x,x) - 2 k(x,x') + k(x',x'))."""
    # grouped so the result is exactly symmetric in (x, x')
    radicand = (
        evaluate(kernel, x, x) + evaluate(kernel, xp, xp)
    ) - 2.0 * evaluate(kernel, x, xp)
    if radicand < -RADICAND_TOLERANCE:
        raise ValueError(f"negative distance radicand {radicand}: broken kernel")
    return math.sqrt(max(radicand, 0.0))


def rkhs_distances(kernel: Kernel, points, x) -> np.ndarray:
    """Feature-space distances from each row of ``points`` to ``x``."""
    pts = _as_points(points)
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if xv.shape[0] != pts.shape[1]:
        raise ValueError(f"dimension mismatch: query {xv.shape[0]} vs points {pts.shape[1]}")
    kernel.check_dim(pts.shape[1])
    k_xx = float(kernel.pairwise(xv[None, :], xv[None, :])[0, 0])
    k_ix = kernel.pairwise(pts, xv[None, :])[:, 0]
    k_ii = kernel.diag(pts)
    radicand = k_ii - 2.0 * k_ix + k_xx
    if np.min(radicand) < -RADICAND_TOLERANCE:
        raise ValueError("negative distance radicand: broken kernel")
    return np.sqrt(np.maximum(radicand, 0.0))


def sup_bound(kernel: Kernel) -> float:
    """Uniform bound R with k(x, x') <= R everywhere.

    Exponential-type kernels (and their composites) are bounded by 1.
    Polynomial kernels have no finite bound on unbounded domains; callers
    must supply R themselves in that case.
    """
    if isinstance(kernel, (Gaussian, Laplacian, CyclicGaussian)):
        return 1.0
    if isinstance(kernel, Composite):
        for _, part, _ in kernel.parts:
            sup_bound(part)
        return 1.0
    raise UnboundedKernelError(f"unbounded kernel: {type(kernel).__name__}")


def lipschitz_modulus(kernel: Kernel) -> float:
    """Constant L with rkhs_distance(x, x') <= L ||x - x'||.

    For a Gaussian with bandwidth sigma this is 1/sigma, from
    1 - exp(-t) <= t applied to the squared distance.  The wrapped Gaussian
    inherits the same constant because wrapping contracts displacements.
    A Laplacian has no finite modulus (the distance scales like the square
    root of the displacement near zero) and the polynomial kernel is not
    translation invariant, so both are rejected.
    """
    if isinstance(kernel, Gaussian):
        return 1.0 / kernel.sigma
    if isinstance(kernel, CyclicGaussian):
        return 1.0 / kernel.sigma
    if isinstance(kernel, Composite):
        moduli = []
        for _, part, w in kernel.parts:
            if not isinstance(part, (Gaussian, CyclicGaussian)):
                raise UnboundedKernelError(
                    f"no Lipschitz modulus for composite part {type(part).__name__}"
                )
            moduli.append(math.sqrt(w) / part.sigma)
        return max(moduli)
    raise UnboundedKernelError(f"no Lipschitz modulus for {type(kernel).__name__}")


def kernel_from_dict(spec: dict) -> Kernel:
    """Build a kernel from its JSON configuration form."""
    kind = spec.get("kind")
    if kind == "gaussian":
        return Gaussian(sigma=float(spec["sigma"]))
    if kind == "laplacian":
        return Laplacian(scale=float(spec["scale"]))
    if kind == "polynomial":
        return Polynomial(degree=int(spec["degree"]))
    if kind == "cyclic_gaussian":
        return CyclicGaussian(period=float(spec["period"]), sigma=float(spec["sigma"]))
    if kind == "composite":
        parts = tuple(
            (tuple(p["dims"]), kernel_from_dict(p["kernel"]), float(p.get("weight", 1.0)))
            for p in spec["parts"]
        )
        return Composite(parts=parts)
    raise ValueError(f"unknown kernel kind: {kind!r}")


def kernel_to_dict(kernel: Kernel) -> dict:
    """Inverse of :func:`kernel_from_dict`."""
    if isinstance(kernel, Gaussian):
        return {"kind": "gaussian", "sigma": kernel.sigma}
    if isinstance(kernel, Laplacian):
        return {"kind": "laplacian", "scale": kernel.scale}
    if isinstance(kernel, Polynomial):
        return {"kind": "polynomial", "degree": kernel.degree}
    if isinstance(kernel, CyclicGaussian):
        return {"kind": "cyclic_gaussian", "period": kernel.period, "sigma": kernel.sigma}
    if isinstance(kernel, Composite):
        return {
            "kind": "composite",
            "parts": [
                {"dims": list(dims), "kernel": kernel_to_dict(part), "weight": w}
                for dims, part, w in kernel.parts
            ],
        }
    raise TypeError(f"cannot serialize kernel {type(kernel).__name__}")
