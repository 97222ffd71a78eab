"""Synthetic paired-sample generator with a known conditional law.

The auxiliary vector x is drawn uniformly per dimension (cyclic dimensions
are annotated with their period).  The outcome is a smooth mean function of
x plus one of finitely many offset vectors drawn with fixed probabilities,
so the true conditional distribution at any query is a finite discrete
expansion that can be compared against estimates exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import Dataset

__all__ = ["SyntheticSpec", "TrueConditional", "synth_generate", "spec_from_dict", "spec_to_dict"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Sampling law: x ~ Uniform(lows, highs), y = mean(x) + offset_k w.p. probs_k.

    ``weights`` maps the feature vector of x (a constant 1, then per
    dimension either the raw value or sin/cos of the scaled angle for
    cyclic dimensions) to the outcome mean.

    ``core`` optionally concentrates the x sampling: a dict mapping a
    dimension index to (low, high, prob) draws that coordinate from the
    core interval with the given probability and from the full range
    otherwise, producing sparsely sampled tail regions.  The conditional
    law of y given x is unaffected.
    """

    n: int
    x_low: np.ndarray
    x_high: np.ndarray
    periods: tuple[float | None, ...]
    weights: np.ndarray
    offsets: np.ndarray
    probs: np.ndarray
    core: dict[int, tuple[float, float, float]] | None = None

    def __eq__(self, other):
        if not isinstance(other, SyntheticSpec):
            return NotImplemented
        return (
            self.n == other.n
            and self.periods == other.periods
            and self.core == other.core
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("x_low", "x_high", "weights", "offsets", "probs")
            )
        )

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.x_low, dtype=float))
        high = np.atleast_1d(np.asarray(self.x_high, dtype=float))
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        offs = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        probs = np.asarray(self.probs, dtype=float)
        if self.n < 1:
            raise ValueError("n must be positive")
        if low.shape != high.shape or np.any(high < low):
            raise ValueError("x bounds malformed")
        if len(self.periods) != low.shape[0]:
            raise ValueError("one period entry (or None) per x dimension")
        if w.shape[1] != self.feature_dim(low.shape[0]):
            raise ValueError(f"weights must have {self.feature_dim(low.shape[0])} columns")
        if offs.shape[0] != probs.shape[0]:
            raise ValueError("one probability per offset")
        if offs.shape[1] != w.shape[0]:
            raise ValueError("offset dimension must match outcome dimension")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be a probability vector")
        if self.core is not None:
            core = {int(d): (float(a), float(b), float(p)) for d, (a, b, p) in self.core.items()}
            for d, (a, b, p) in core.items():
                if not 0 <= d < low.shape[0]:
                    raise ValueError("core dimension out of range")
                if not (low[d] <= a <= b <= high[d]) or not 0.0 <= p <= 1.0:
                    raise ValueError("core interval malformed")
            object.__setattr__(self, "core", core)
        object.__setattr__(self, "x_low", low)
        object.__setattr__(self, "x_high", high)
        object.__setattr__(self, "periods", tuple(self.periods))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "probs", probs)

    def feature_dim(self, dx: int) -> int:
        return 1 + sum(2 if p is not None else 1 for p in self.periods[:dx])

    @property
    def x_dim(self) -> int:
        return self.x_low.shape[0]

    @property
    def outcome_dim(self) -> int:
        return self.weights.shape[0]

    def features(self, xs: np.ndarray) -> np.ndarray:
        """Feature matrix: constant, then raw or sin/cos per dimension."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        cols = [np.ones((xs.shape[0], 1))]
        for d, period in enumerate(self.periods):
            if period is None:
                cols.append(xs[:, d : d + 1])
            else:
                angle = 2.0 * np.pi * xs[:, d : d + 1] / period
                cols.append(np.sin(angle))
                cols.append(np.cos(angle))
        return np.hstack(cols)

    def mean(self, xs: np.ndarray) -> np.ndarray:
        return self.features(xs) @ self.weights.T

    def conditional(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Exact conditional support points and probabilities at a query."""
        mu = self.mean(np.atleast_2d(np.asarray(x, dtype=float)))[0]
        return mu[None, :] + self.offsets, self.probs.copy()

    def sample_x(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random((size, self.x_dim))
        xs = self.x_low + u * (self.x_high - self.x_low)
        if self.core:
            for d, (lo, hi, prob) in sorted(self.core.items()):
                in_core = rng.random(size) < prob
                xs[in_core, d] = lo + rng.random(int(in_core.sum())) * (hi - lo)
        return xs

    def with_n(self, n: int) -> "SyntheticSpec":
        return SyntheticSpec(
            n=n,
            x_low=self.x_low,
            x_high=self.x_high,
            periods=self.periods,
            weights=self.weights,
            offsets=self.offsets,
            probs=self.probs,
            core=self.core,
        )


@dataclass(frozen=True)
class TrueConditional:
    """Handle exposing the generator's exact conditional law."""

    spec: SyntheticSpec

    def at(self, x) -> tuple[np.ndarray, np.ndarray]:
        return self.spec.conditional(x)


def synth_generate(spec: SyntheticSpec, seed: int) -> tuple[Dataset, TrueConditional]:
    """Draw a dataset from the spec; deterministic given the seed."""
    rng = np.random.default_rng(seed)
    xs = spec.sample_x(rng, spec.n)
    choices = rng.choice(spec.probs.shape[0], size=spec.n, p=spec.probs)
    ys = spec.mean(xs) + spec.offsets[choices]
    return Dataset(xs=xs, ys=ys), TrueConditional(spec=spec)


def spec_from_dict(d: dict) -> SyntheticSpec:
    core = d.get("core")
    return SyntheticSpec(
        n=int(d["n"]),
        x_low=np.asarray(d["x_low"], dtype=float),
        x_high=np.asarray(d["x_high"], dtype=float),
        periods=tuple(None if p is None else float(p) for p in d["periods"]),
        weights=np.asarray(d["weights"], dtype=float),
        offsets=np.asarray(d["offsets"], dtype=float),
        probs=np.asarray(d["probs"], dtype=float),
        core=None if core is None else {int(k): tuple(v) for k, v in core.items()},
    )


def spec_to_dict(spec: SyntheticSpec) -> dict:
    return {
        "n": spec.n,
        "x_low": spec.x_low.tolist(),
        "x_high": spec.x_high.tolist(),
        "periods": list(spec.periods),
        "weights": spec.weights.tolist(),
        "offsets": spec.offsets.tolist(),
        "probs": spec.probs.tolist(),
        "core": (
            None
            if spec.core is None
            else {str(k): list(v) for k, v in sorted(spec.core.items())}
        ),
    }
