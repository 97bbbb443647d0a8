"""Univariate symmetric stable and Frechet primitives.

Everything random takes an explicit :class:`numpy.random.Generator`; there
is no module level random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ConfigError

__all__ = [
    "StableIndex",
    "FrechetLaw",
    "as_alpha",
    "sample_sas",
    "stable_tail_constant",
    "frechet_cdf",
    "frechet_quantile",
    "poisson_arrivals",
    "make_rng",
    "derive_seed",
]


@dataclass(frozen=True)
class StableIndex:
    """Index of stability, restricted to the open interval (0, 2)."""

    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 2.0) or not math.isfinite(a):
            raise ConfigError(f"alpha={self.alpha!r} must lie in the open interval (0, 2)")
        object.__setattr__(self, "alpha", a)

    def __float__(self):
        return self.alpha


def as_alpha(alpha) -> float:
    """Validate ``alpha`` (float or :class:`StableIndex`) and return it as float."""
    if isinstance(alpha, StableIndex):
        return alpha.alpha
    return StableIndex(alpha).alpha


@dataclass(frozen=True)
class FrechetLaw:
    """Frechet law with CDF ``exp(-(z/scale)**-alpha)`` on ``z > 0``."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        scale = float(self.scale)
        if not (scale > 0.0 and math.isfinite(scale)):
            raise ConfigError(f"Frechet scale must be positive and finite, got {self.scale!r}")
        object.__setattr__(self, "scale", scale)

    def cdf(self, z):
        return frechet_cdf(self, z)

    def ppf(self, p):
        return frechet_quantile(self, p)


def make_rng(seed) -> np.random.Generator:
    """Generator built from an int seed or a :class:`numpy.random.SeedSequence`."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(root: int, *key: int) -> np.random.SeedSequence:
    """Child seed that depends only on the root seed and the integer key path."""
    return np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in key))


def sample_sas(alpha, scale: float, rng: np.random.Generator, size=None):
    """Draw from the symmetric alpha-stable law with characteristic
    function ``exp(-|scale * theta|**alpha)``.

    Uses the Chambers-Mallows-Stuck transformation of a uniform angle and a
    unit exponential, which is exact in distribution. ``scale=0`` returns
    exact zeros.
    """
    a = as_alpha(alpha)
    scale = float(scale)
    if not math.isfinite(scale) or scale < 0:
        raise ConfigError(f"scale must be finite and non-negative, got {scale!r}")
    u = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size=size)
    w = rng.standard_exponential(size=size)
    x = (
        np.sin(a * u)
        / np.cos(u) ** (1.0 / a)
        * (np.cos((1.0 - a) * u) / w) ** ((1.0 - a) / a)
    )
    out = scale * x
    if size is None:
        return float(out)
    return out


def stable_tail_constant(alpha) -> float:
    """Tail constant ``C_alpha = (int_0^inf x**-alpha sin(x) dx)**-1``.

    For a symmetric stable variable with scale ``sigma`` this is the
    constant in ``P(|X| > x) ~ C_alpha * sigma**alpha * x**-alpha``.
    """
    a = as_alpha(alpha)
    if a == 1.0:
        return 2.0 / math.pi
    return (1.0 - a) / (gamma_fn(2.0 - a) * math.cos(0.5 * math.pi * a))


def frechet_cdf(law: FrechetLaw, z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    pos = z > 0
    with np.errstate(over="ignore"):
        out[pos] = np.exp(-((z[pos] / law.scale) ** (-law.alpha)))
    return out if out.ndim else float(out)


def frechet_quantile(law: FrechetLaw, p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ConfigError("Frechet quantile needs probabilities strictly inside (0, 1)")
    out = law.scale * (-np.log(p)) ** (-1.0 / law.alpha)
    return out if out.ndim else float(out)


def poisson_arrivals(count: int, rng: np.random.Generator) -> np.ndarray:
    """First ``count`` arrival times of a unit rate Poisson process.

    ``count=0`` gives an empty array.
    """
    count = int(count)
    if count < 0:
        raise ConfigError(f"count must be non-negative, got {count}")
    return np.cumsum(rng.standard_exponential(count))
