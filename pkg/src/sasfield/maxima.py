"""Partial maxima on lattice windows and the quantities of their limit
theory: ``b_tau``, ``K_X``, the probability measure ``eta_tau``, the
pair-overlap condition, Frechet goodness of fit and growth exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .actions import GAUSS, LatticeSpec
from .errors import ConfigError, DataError, EfficiencyError, ResourceError, UnsupportedKernelError
from .quadrature import cells_1d, log_normal_density, product_grid
from .stable import FrechetLaw, as_alpha, stable_tail_constant

DEFAULT_LEVEL = 2
DEFAULT_RESOLUTION = 16
GRID_BUDGET = 400_000_000
MIN_ACCEPTANCE = 1e-4

__all__ = [
    "MaximaRecord",
    "LimitLawSpec",
    "KSReport",
    "ConditionReport",
    "GrowthFit",
    "partial_maxima",
    "compute_b_tau",
    "compute_K_X",
    "sample_eta_tau",
    "check_condition",
    "limit_law_test",
    "growth_exponent_fit",
]


@dataclass(frozen=True)
class MaximaRecord:
    tau: float
    M_tau: float
    norm_power: float
    norm_btau: float
    replication: int = 0
    seed: object = None


@dataclass(frozen=True)
class LimitLawSpec:
    alpha: float
    K_X: float
    C_alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        if self.C_alpha is None:
            object.__setattr__(self, "C_alpha", stable_tail_constant(self.alpha))
        if not self.K_X >= 0 or not self.C_alpha > 0:
            raise ConfigError("need K_X >= 0 and C_alpha > 0")

    @property
    def scale(self) -> float:
        return self.C_alpha ** (1.0 / self.alpha) * self.K_X


def _block_lattice(lattice: LatticeSpec, block):
    axis = lattice.axis_points()
    if not block.drivers:
        return np.zeros((1, 1))
    grids = np.meshgrid(*([axis] * len(block.drivers)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _resolution_for(level: int, resolution: int) -> int:
    step = 2**level
    return step * max(1, math.ceil(resolution / step))


def partial_maxima(sample, ladder, b_taus=None, replication: int = 0, resolution: int = DEFAULT_RESOLUTION):
    """``M_tau = max |X_t|`` over lattice points of ``[0, tau]^d`` for each
    tau of an increasing ladder, with both normalisations.

    ``b_taus`` defaults to :func:`compute_b_tau` on the sample's kernel.
    """
    ladder = [float(x) for x in ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("tau ladder must be increasing")
    lat = sample.lattice
    if ladder and ladder[-1] > lat.tau + 1e-12:
        raise ConfigError(f"tau={ladder[-1]} exceeds the sample window {lat.tau}")
    if b_taus is None:
        if sample.kernel is None:
            raise ConfigError("b_tau normalisation needs the kernel or explicit b_taus")
        b_taus = [compute_b_tau(sample.kernel, t, lat.level, resolution) for t in ladder]
    alpha = sample.kernel.alpha if sample.kernel is not None else None
    vals = np.abs(sample.values)
    out = []
    for tau, b in zip(ladder, b_taus):
        i = lat.index_for(tau) + 1
        M = float(vals[(slice(0, i),) * lat.dimension].max())
        power = tau ** (lat.dimension / alpha) if alpha else math.nan
        out.append(MaximaRecord(tau, M, power, float(b), replication, sample.seed))
    return out


def _window_cells(piece, block, tau, res):
    lo, hi = piece.window_box(tau)
    return piece.state_cells(lo, hi, res, axes=block.axes)


@lru_cache(maxsize=256)
def compute_b_tau(kernel, tau: float, level: int = DEFAULT_LEVEL, resolution: int = DEFAULT_RESOLUTION, budget: int = GRID_BUDGET) -> float:
    """``(int_S sup_t |f_t(s)|**alpha mu(ds))**(1/alpha)`` with the sup over
    the level-``level`` lattice in ``[0, tau]^d``.

    The sup of a product of block factors is the product of block sups, so
    the integral factorises over blocks.
    """
    if not tau > 0:
        raise ConfigError("tau must be positive")
    lattice = LatticeSpec(kernel.dimension, level, tau)
    res = _resolution_for(level, resolution)
    total = 0.0
    for piece in kernel.pieces:
        prod = abs(piece.base.amplitude) ** piece.alpha
        for block in piece.blocks:
            if not block.axes:
                continue
            tp = _block_lattice(lattice, block)
            mids, vol = product_grid(_window_cells(piece, block, tau, res), budget)
            if len(mids) * len(tp) > budget:
                raise ResourceError(f"b_tau grid of {len(mids) * len(tp)} evaluations exceeds the budget of {budget}")
            logrho = piece.action.restrict(block.axes, block.drivers).log_density(mids)
            sup = np.zeros(len(mids))
            step = max(1, 2_000_000 // len(tp))
            for a in range(0, len(mids), step):
                F = piece.block_values(block, tp, mids[a : a + step], logrho[a : a + step])
                sup[a : a + step] = np.max(np.abs(F), axis=1)
            prod *= float(np.sum(sup**piece.alpha * vol))
        total += prod
    return total ** (1.0 / kernel.alpha)


def compute_K_X(kernel, level: int = DEFAULT_LEVEL, resolution: int = DEFAULT_RESOLUTION, budget: int = 50_000_000) -> float:
    """``(int_W g(v)**alpha nu(dv))**(1/alpha)`` with
    ``g(v) = sup_s |f(v, s)|`` over level-``level`` lattice points ``s``.

    Needs a mixed moving average layout; with no mixing axes ``nu`` is a
    unit point mass.
    """
    mma = getattr(kernel, "mma", None)
    if mma is None:
        raise UnsupportedKernelError(
            f"kernel {kernel.name!r} has no mixed moving average form; classify and split it first"
        )
    lo, hi = kernel.support_box()
    h = 2.0**-level
    axes_pts = []
    for i in mma.translation_axes:
        k0, k1 = math.ceil(lo[i] / h - 1e-9), math.floor(hi[i] / h + 1e-9)
        axes_pts.append(h * np.arange(k0, k1 + 1, dtype=float))
    if any(len(p) == 0 for p in axes_pts):
        return 0.0
    grids = np.meshgrid(*axes_pts, indexing="ij")
    spts = np.stack([g.ravel() for g in grids], axis=-1)
    res = _resolution_for(level, resolution)
    wcells = kernel.state_cells(lo, hi, res, axes=mma.mixing_axes)
    vpts, vol = product_grid(wcells, budget)
    if mma.mixing_axes:
        logrho = np.zeros(len(vpts))
        for j, i in enumerate(mma.mixing_axes):
            if kernel.action.axes[i].kind == GAUSS:
                logrho += log_normal_density(vpts[:, j])
        weights = vol * np.exp(logrho)
    else:
        weights = np.ones(1)
    if len(vpts) * len(spts) > budget:
        raise ResourceError(f"K_X grid of {len(vpts) * len(spts)} evaluations exceeds the budget of {budget}")
    full = np.empty((len(vpts), len(spts), kernel.action.state_dim))
    for j, i in enumerate(mma.mixing_axes):
        full[:, :, i] = vpts[:, j, None]
    for j, i in enumerate(mma.translation_axes):
        full[:, :, i] = spts[None, :, j]
    g = np.max(np.abs(kernel.base(full)), axis=1)
    return float(np.sum(g**kernel.alpha * weights)) ** (1.0 / kernel.alpha)


# ---------------------------------------------------------------------------
# eta_tau


def _envelope(piece) -> float:
    """Upper bound of ``sup_t |f_t(s)|**alpha * rho(s)`` over s."""
    lo, hi = piece.support_box()
    bound = piece.base.sup_abs() ** piece.alpha
    for i, ax in enumerate(piece.action.axes):
        if ax.kind == GAUSS:
            x = 0.0 if lo[i] <= 0.0 <= hi[i] else min(abs(lo[i]), abs(hi[i]))
            bound *= math.exp(log_normal_density(x))
    return bound


def _sup_weighted(piece, lattice, states):
    """``sup_t |f_t(s)| * rho(s)**(1/alpha)`` for each row of ``states``."""
    out = np.full(len(states), abs(piece.base.amplitude))
    for block in piece.blocks:
        if not block.axes:
            continue
        tp = _block_lattice(lattice, block)
        sub = states[:, list(block.axes)]
        logrho = piece.action.restrict(block.axes, block.drivers).log_density(sub)
        out *= np.max(np.abs(piece.block_values(block, tp, sub, logrho)), axis=1)
    return out


def _lattice_values(piece, lattice, states):
    """Full (n, count) array of ``|f_t(s)|`` over the lattice window."""
    n = len(states)
    acc = np.full((n,) + (lattice.per_axis,) * lattice.dimension, abs(piece.base.amplitude))
    letters = "abcdefghij"
    for block in piece.blocks:
        if not block.axes:
            continue
        tp = _block_lattice(lattice, block)
        F = np.abs(piece.block_values(block, tp, states[:, list(block.axes)]))
        shape = [n] + [1] * lattice.dimension
        F = F.reshape((n,) + (lattice.per_axis,) * len(block.drivers))
        # move block driver axes into their slots
        src = "z" + "".join(letters[k] for k in block.drivers)
        dst = "z" + "".join(letters[k] for k in range(lattice.dimension) if k in block.drivers)
        F = np.einsum(f"{src}->{dst}", F)
        for k in range(lattice.dimension):
            shape[k + 1] = lattice.per_axis if k in block.drivers else 1
        acc = acc * F.reshape(shape)
    return acc.reshape(n, -1)


def _eta_draws(piece, tau, b_tau, rng, size, level, max_rounds=10_000):
    lattice = LatticeSpec(piece.dimension, level, tau)
    lo, hi = piece.window_box(tau)
    L = float(np.prod(hi - lo))
    bound = _envelope(piece)
    rate = b_tau**piece.alpha / (L * bound) if bound > 0 else 0.0
    if rate < MIN_ACCEPTANCE:
        raise EfficiencyError(
            f"eta_tau rejection sampler would accept about {rate:.2e} of proposals; use a tighter proposal"
        )
    batch = max(64, int(2 * size / min(max(rate, 1e-3), 1.0)))
    kept, got = [], 0
    for _ in range(max_rounds):
        s = lo + (hi - lo) * rng.random((batch, len(lo)))
        u = rng.random(batch)
        dens = _sup_weighted(piece, lattice, s) ** piece.alpha
        acc = s[u * bound < dens]
        kept.append(acc)
        got += len(acc)
        if got >= size:
            return np.concatenate(kept)[:size]
    raise EfficiencyError("eta_tau rejection sampler did not finish")


def sample_eta_tau(kernel, tau: float, b_tau: float, rng, size: int | None = None, level: int = DEFAULT_LEVEL):
    """Draws from ``eta_tau`` with density ``b_tau**-alpha sup_t |f_t|**alpha``
    with respect to ``mu``, by rejection from the uniform law on the
    window box.

    Returns one state point (``size=None``) or a (size, k) array.  Only
    single-piece kernels are supported here.
    """
    if len(kernel.pieces) != 1:
        raise UnsupportedKernelError("eta_tau sampling is implemented for single-piece kernels")
    n = 1 if size is None else int(size)
    states = _eta_draws(kernel.pieces[0], tau, b_tau, rng, n, level)
    return states[0] if size is None else states


@dataclass
class ConditionReport:
    taus: list
    probabilities: np.ndarray
    standard_errors: np.ndarray
    b_taus: np.ndarray
    epsilon: float
    pairs: int
    b_slope: float
    threshold: float

    @property
    def sufficient(self) -> bool:
        """Whether ``tau**(-d/(2 alpha)) b_tau`` appears to grow without bound."""
        return self.b_slope > self.threshold


def check_condition(kernel, taus, epsilon: float, pairs: int, rng, level: int = DEFAULT_LEVEL, resolution: int = DEFAULT_RESOLUTION) -> ConditionReport:
    """Monte Carlo estimate, per tau, of the probability that two independent
    ``eta_tau`` draws share a lattice time ``t`` where both normalised
    kernel values ``|f_t(U)| / sup_u |f_u(U)|`` exceed ``epsilon``."""
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if pairs < 1000:
        raise ConfigError("check_condition needs at least 1000 pairs")
    if len(kernel.pieces) != 1:
        raise UnsupportedKernelError("the pair condition is implemented for single-piece kernels")
    piece = kernel.pieces[0]
    taus = [float(t) for t in taus]
    probs, ses, bs = [], [], []
    for tau in taus:
        b = compute_b_tau(kernel, tau, level, resolution)
        bs.append(b)
        lattice = LatticeSpec(kernel.dimension, level, tau)
        U = sample_eta_tau(kernel, tau, b, rng, size=2 * pairs, level=level)
        U1, U2 = U[:pairs], U[pairs:]
        hits = np.zeros(pairs, dtype=bool)
        step = max(1, 2_000_000 // lattice.count)
        for a in range(0, pairs, step):
            r = []
            for Uj in (U1[a : a + step], U2[a : a + step]):
                v = _lattice_values(piece, lattice, Uj)
                sup = v.max(axis=1, keepdims=True)
                r.append(v > epsilon * sup)
            hits[a : a + step] = np.any(r[0] & r[1], axis=1)
        p = float(hits.mean())
        probs.append(p)
        ses.append(math.sqrt(max(p * (1 - p), 0.0) / pairs))
    bs = np.array(bs)
    slope = float(np.polyfit(np.log(taus), np.log(bs), 1)[0]) if len(taus) >= 2 else math.nan
    threshold = kernel.dimension / (2.0 * kernel.alpha)
    return ConditionReport(taus, np.array(probs), np.array(ses), bs, float(epsilon), pairs, slope, threshold)


# ---------------------------------------------------------------------------
# statistics


@dataclass
class KSReport:
    statistic: float
    n: int
    critical_5pct: float
    pvalue: float
    scale: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_5pct


def limit_law_test(values, law: LimitLawSpec, min_size: int = 500) -> KSReport:
    """One-sample Kolmogorov-Smirnov test of normalised maxima against the
    Frechet law with scale ``C_alpha**(1/alpha) * K_X``."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DataError("no values to test")
    if np.any(~(x > 0)):
        raise DataError("normalised maxima must be positive")
    if x.size < min_size:
        raise DataError(f"need at least {min_size} values, got {x.size}")
    if not law.scale > 0:
        raise DataError("limit law has zero scale (K_X = 0)")
    fl = FrechetLaw(law.alpha, law.scale)
    res = stats.kstest(x, fl.cdf)
    crit = float(stats.kstwo.ppf(0.95, x.size))
    return KSReport(float(res.statistic), int(x.size), crit, float(res.pvalue), law.scale)


@dataclass
class GrowthFit:
    exponent: float
    intercept: float
    residuals: np.ndarray

    @property
    def rms_residual(self) -> float:
        return float(np.sqrt(np.mean(self.residuals**2)))


def growth_exponent_fit(taus, medians) -> GrowthFit:
    """Least-squares slope of ``log median`` against ``log tau``."""
    t = np.asarray(taus, dtype=float)
    m = np.asarray(medians, dtype=float)
    if t.shape != m.shape:
        raise DataError("taus and medians differ in length")
    if t.size < 4:
        raise DataError("growth fit needs a ladder of at least 4 points")
    if np.any(~(m > 0)) or np.any(~(t > 0)):
        raise DataError("growth fit needs positive taus and medians")
    x, y = np.log(t), np.log(m)
    slope, icpt = np.polyfit(x, y, 1)
    return GrowthFit(float(slope), float(icpt), y - (slope * x + icpt))
