"""Nonsingular R^d actions, base functions, kernels and dyadic lattices.

A state space is a finite product of one-dimensional factors, each an
:class:`Axis`: the real line with Lebesgue measure (``line``), the real
line with the standard Gaussian measure (``gauss``) or the circle
``[0, 1)`` with Lebesgue measure (``torus``).  Axis ``i`` is translated by
``rate * t[driver]``; undriven axes are left alone (they play the role of
the mixing space in a mixed moving average).

For a kernel with action ``phi``, Radon-Nikodym flow ``w`` and sign
cocycle ``c``, the stationary family is::

    f_t(s) = c_t(s) * w_t(s)**(1/alpha) * f(phi_t(s))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, NumericRangeError, ResourceError
from .quadrature import cells_1d, log_normal_density
from .stable import as_alpha

LINE, GAUSS, TORUS = "line", "gauss", "torus"
DISSIPATIVE, CONSERVATIVE = "dissipative", "conservative"

DEFAULT_POINT_BUDGET = 20_000_000

__all__ = [
    "LINE",
    "GAUSS",
    "TORUS",
    "DISSIPATIVE",
    "CONSERVATIVE",
    "Axis",
    "ActionDescriptor",
    "Indicator",
    "Tent",
    "Cosine",
    "Table",
    "BaseFunction",
    "MMAForm",
    "KernelDescriptor",
    "DirectSumKernel",
    "Block",
    "LatticeSpec",
    "lattice_points",
    "evaluate_kernel",
    "IdentityReport",
    "check_action_identities",
    "builtin_kernel",
    "direct_sum",
    "FAMILIES",
    "BASES",
]


# ---------------------------------------------------------------------------
# actions


@dataclass(frozen=True)
class Axis:
    kind: str
    driver: int | None = None
    rate: float = 1.0
    signed: bool = False

    def __post_init__(self):
        if self.kind not in (LINE, GAUSS, TORUS):
            raise ConfigError(f"unknown axis kind {self.kind!r}")
        if self.signed and self.kind == TORUS:
            raise ConfigError("the floor sign cocycle is only defined on line factors")
        if self.driver is not None and (self.rate == 0 or not math.isfinite(self.rate)):
            raise ConfigError("driven axes need a finite non-zero rate")


def _reduce_torus(x):
    x = np.mod(x, 1.0)
    return np.where(x >= 1.0, 0.0, x)


@dataclass(frozen=True)
class ActionDescriptor:
    """Product action of R^d on a product of line, Gaussian-line and torus
    factors, with closed-form Radon-Nikodym flow and sign cocycle."""

    dimension: int
    axes: tuple[Axis, ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigError("dimension must be a positive integer")
        object.__setattr__(self, "axes", tuple(self.axes))
        for ax in self.axes:
            if ax.driver is not None and not (0 <= ax.driver < self.dimension):
                raise ConfigError(f"axis driver {ax.driver} outside 0..{self.dimension - 1}")

    @property
    def state_dim(self) -> int:
        return len(self.axes)

    def _shift(self, ax: Axis, t):
        return ax.rate * t[..., ax.driver]

    def transform(self, t, s):
        """phi_t(s); ``t`` has shape (..., d) and ``s`` (..., k), broadcast."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        cols = []
        for i, ax in enumerate(self.axes):
            x = s[..., i]
            if ax.driver is not None:
                x = x + self._shift(ax, t)
            if ax.kind == TORUS:
                x = _reduce_torus(x)
            cols.append(x)
        lead = np.broadcast_shapes(t.shape[:-1], s.shape[:-1])
        return np.stack([np.broadcast_to(c, lead) for c in cols], axis=-1)

    def log_rn_derivative(self, t, s):
        """log w_t(s), the log density of mu o phi_t against mu."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        out = np.zeros(np.broadcast_shapes(t.shape[:-1], s.shape[:-1]))
        for i, ax in enumerate(self.axes):
            if ax.kind == GAUSS and ax.driver is not None:
                u = self._shift(ax, t)
                out = out - s[..., i] * u - 0.5 * u * u
        return out

    def rn_derivative(self, t, s):
        return np.exp(self.log_rn_derivative(t, s))

    def cocycle(self, t, s):
        """c_t(s) in {-1, +1}; nontrivial only on ``signed`` axes."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        parity = np.zeros(np.broadcast_shapes(t.shape[:-1], s.shape[:-1]), dtype=np.int64)
        for i, ax in enumerate(self.axes):
            if ax.signed and ax.driver is not None:
                si = s[..., i]
                parity = parity + (np.floor(si + self._shift(ax, t)) - np.floor(si)).astype(np.int64)
        return np.where(parity % 2 == 0, 1.0, -1.0)

    def log_density(self, s):
        """log of d(mu)/d(Lebesgue) at ``s``."""
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape[:-1])
        for i, ax in enumerate(self.axes):
            if ax.kind == GAUSS:
                out = out + log_normal_density(s[..., i])
        return out

    def hopf_label(self) -> str | None:
        """Analytic conservative/dissipative label for compactly supported f.

        Every time coordinate has to push some non-compact factor off to
        infinity for the kernel integral over R^d to converge.
        """
        for k in range(self.dimension):
            if not any(ax.driver == k and ax.kind != TORUS for ax in self.axes):
                return CONSERVATIVE
        return DISSIPATIVE

    def restrict(self, axes_idx, drivers):
        """Sub-action on the given axes, driven by the given time coordinates."""
        remap = {k: j for j, k in enumerate(drivers)}
        axes = []
        for i in axes_idx:
            ax = self.axes[i]
            drv = remap[ax.driver] if ax.driver is not None else None
            axes.append(Axis(ax.kind, drv, ax.rate, ax.signed))
        return type(self)(max(len(drivers), 1), tuple(axes))


# ---------------------------------------------------------------------------
# base functions


class Factor:
    """One factor of a base function, acting on ``ndim`` consecutive axes."""

    ndim = 1

    def __call__(self, x):
        raise NotImplementedError

    def bounds(self):
        raise NotImplementedError

    def sup_abs(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Indicator(Factor):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError(f"indicator needs lo < hi, got [{self.lo}, {self.hi}]")

    def __call__(self, x):
        x = x[..., 0]
        return ((x >= self.lo) & (x <= self.hi)).astype(float)

    def bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    def sup_abs(self):
        return 1.0


@dataclass(frozen=True)
class Tent(Factor):
    """Triangle with apex value 1 at ``center``."""

    center: float = 0.5
    halfwidth: float = 0.5

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ConfigError("triangle halfwidth must be positive")

    def __call__(self, x):
        return np.maximum(0.0, 1.0 - np.abs(x[..., 0] - self.center) / self.halfwidth)

    def bounds(self):
        return np.array([self.center - self.halfwidth]), np.array([self.center + self.halfwidth])

    def sup_abs(self):
        return 1.0


@dataclass(frozen=True)
class Cosine(Factor):
    """``cos(2 pi frequency x + phase)`` on ``[lo, hi]``, zero outside."""

    frequency: float = 1.0
    phase: float = 0.0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError("sinusoid support needs lo < hi")

    def __call__(self, x):
        x = x[..., 0]
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, np.cos(2.0 * math.pi * self.frequency * x + self.phase), 0.0)

    def bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    def sup_abs(self):
        return 1.0


@dataclass(frozen=True, eq=False)
class Table(Factor):
    """Piecewise constant on the cells ``[e_i, e_{i+1})`` of a rectangular
    grid, zero outside.  Full support of the resulting kernel is the
    caller's responsibility."""

    edges: tuple
    values: np.ndarray

    def __post_init__(self):
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != len(edges):
            raise ConfigError("table values must have one dimension per edge vector")
        for e, n in zip(edges, values.shape):
            if len(e) != n + 1 or np.any(np.diff(e) <= 0):
                raise ConfigError("table edges must be increasing with len(values)+1 entries")
        if not np.all(np.isfinite(values)):
            raise ConfigError("table values must be finite")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @property
    def ndim(self):
        return len(self.edges)

    def __call__(self, x):
        idx = []
        inside = np.ones(x.shape[:-1], dtype=bool)
        for j, e in enumerate(self.edges):
            k = np.searchsorted(e, x[..., j], side="right") - 1
            inside &= (k >= 0) & (k < len(e) - 1)
            idx.append(np.clip(k, 0, len(e) - 2))
        return np.where(inside, self.values[tuple(idx)], 0.0)

    def bounds(self):
        return np.array([e[0] for e in self.edges]), np.array([e[-1] for e in self.edges])

    def sup_abs(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __eq__(self, other):
        return (
            isinstance(other, Table)
            and len(self.edges) == len(other.edges)
            and all(np.array_equal(a, b) for a, b in zip(self.edges, other.edges))
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((tuple(tuple(e) for e in self.edges), self.values.tobytes()))


@dataclass(frozen=True)
class BaseFunction:
    """``amplitude * prod_i factor_i(s[slice_i])`` with consecutive slices."""

    factors: tuple[Factor, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not math.isfinite(self.amplitude):
            raise ConfigError("amplitude must be finite")

    @property
    def ndim(self) -> int:
        return sum(f.ndim for f in self.factors)

    @cached_property
    def slices(self) -> tuple[tuple[int, ...], ...]:
        out, start = [], 0
        for f in self.factors:
            out.append(tuple(range(start, start + f.ndim)))
            start += f.ndim
        return tuple(out)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], float(self.amplitude))
        for f, sl in zip(self.factors, self.slices):
            out = out * f(s[..., list(sl)])
        return out

    def bounds(self):
        lo, hi = zip(*(f.bounds() for f in self.factors))
        return np.concatenate(lo), np.concatenate(hi)

    def sup_abs(self) -> float:
        return abs(self.amplitude) * math.prod(f.sup_abs() for f in self.factors)

    def scaled(self, a: float) -> "BaseFunction":
        return BaseFunction(self.factors, self.amplitude * a)


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class MMAForm:
    """Mixed moving average layout ``f(v, t + s)``: which axes are the
    mixing coordinates ``v`` and which are translated (in driver order).
    With no mixing axes the mixing measure is a unit point mass."""

    mixing_axes: tuple[int, ...]
    translation_axes: tuple[int, ...]


@dataclass(frozen=True)
class Block:
    """Axes, time coordinates and base factors that only interact among
    themselves; kernel values factor as a product over blocks."""

    axes: tuple[int, ...]
    drivers: tuple[int, ...]
    factors: tuple[int, ...]


@dataclass(frozen=True)
class KernelDescriptor:
    action: ActionDescriptor
    base: BaseFunction
    alpha: float
    name: str = "kernel"
    mma: MMAForm | None = None
    tags: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        if self.base.ndim != self.action.state_dim:
            raise ConfigError(
                f"base function acts on {self.base.ndim} axes but the state space has "
                f"{self.action.state_dim}"
            )

    @property
    def pieces(self):
        return (self,)

    @property
    def dimension(self) -> int:
        return self.action.dimension

    @property
    def label(self) -> str | None:
        return self.action.hopf_label()

    def scaled(self, a: float) -> "KernelDescriptor":
        return KernelDescriptor(self.action, self.base.scaled(a), self.alpha, self.name, self.mma)

    def support_box(self):
        """Bounding box of supp(f); torus axes are clipped to [0, 1]."""
        lo, hi = self.base.bounds()
        lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
        for i, ax in enumerate(self.action.axes):
            if ax.kind == TORUS:
                lo[i], hi[i] = max(lo[i], 0.0), min(hi[i], 1.0)
                if hi[i] <= lo[i] or (lo[i] <= 0.0 and hi[i] >= 1.0):
                    lo[i], hi[i] = 0.0, 1.0
        return lo, hi

    def window_box(self, tau: float):
        """Box containing supp(f_t) for every t in [0, tau]^d."""
        lo, hi = self.support_box()
        for i, ax in enumerate(self.action.axes):
            if ax.kind == TORUS:
                lo[i], hi[i] = 0.0, 1.0
            elif ax.driver is not None:
                reach = ax.rate * tau
                lo[i] -= max(0.0, reach)
                hi[i] -= min(0.0, reach)
        return lo, hi

    def alignment(self):
        """Per-axis grid offsets that put the jumps of f on cell boundaries."""
        lo, _ = self.base.bounds()
        return [float(x) for x in lo]

    def state_cells(self, lo, hi, resolution: int, axes=None):
        """Aligned 1-D midpoint cells of the box ``[lo, hi]`` for each axis."""
        axes = range(self.action.state_dim) if axes is None else axes
        offsets = self.alignment()
        h = 1.0 / resolution
        return [cells_1d(lo[i], hi[i], h, offsets[i] % h) for i in axes]

    def weighted_values(self, t, s):
        """``f_t(s) * rho(s)**(1/alpha)`` with ``rho = d mu / d Lebesgue``.

        Integrating ``|.|**alpha`` of this against Lebesgue measure gives the
        mu-integral of ``|f_t|**alpha``.  Evaluated in log space, so far
        tails of Gaussian factors neither overflow nor give 0 * inf.
        """
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        fval = self.base(self.action.transform(t, s))
        lw = self.action.log_rn_derivative(t, s) + self.action.log_density(s)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.where(fval != 0.0, self.action.cocycle(t, s) * fval * np.exp(lw / self.alpha), 0.0)
        if not np.all(np.isfinite(out)):
            raise NumericRangeError("non-finite weighted kernel value")
        return out

    @cached_property
    def blocks(self) -> tuple[Block, ...]:
        k = self.action.state_dim
        d = self.dimension
        parent = list(range(k + d))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def union(i, j):
            parent[find(i)] = find(j)

        for sl in self.base.slices:
            for i in sl[1:]:
                union(sl[0], i)
        for i, ax in enumerate(self.action.axes):
            if ax.driver is not None:
                union(i, k + ax.driver)
        groups: dict[int, list[int]] = {}
        for node in range(k + d):
            groups.setdefault(find(node), []).append(node)
        blocks = []
        for nodes in groups.values():
            axes = tuple(n for n in nodes if n < k)
            drivers = tuple(n - k for n in nodes if n >= k)
            facs = tuple(j for j, sl in enumerate(self.base.slices) if sl[0] in axes)
            blocks.append(Block(axes, drivers, facs))
        blocks.sort(key=lambda b: (b.axes[0] if b.axes else k + b.drivers[0]))
        return tuple(blocks)

    def block_values(self, block: Block, tpts, states, log_extra=None, chunk=4_000_000):
        """Unscaled kernel values of one block.

        ``tpts`` has shape (m, len(block.drivers)) and ``states`` shape
        (J, len(block.axes)).  Returns the (J, m) array of
        ``c * exp((log w + log_extra)/alpha) * prod factors(phi_t(s))``
        restricted to the block (amplitude excluded).
        """
        tpts = np.asarray(tpts, dtype=float)
        if not block.drivers:
            # undriven block: constant in t, one column per requested time point
            tpts = np.zeros((tpts.shape[0] if tpts.ndim == 2 else 1, 1))
        tpts = tpts.reshape(-1, max(len(block.drivers), 1))
        states = np.asarray(states, dtype=float).reshape(-1, len(block.axes))
        J, m = states.shape[0], tpts.shape[0]
        if not block.axes:
            return np.ones((J, m))
        sub = self.action.restrict(block.axes, block.drivers)
        local = {ax: j for j, ax in enumerate(block.axes)}
        facs = [(self.base.factors[j], [local[a] for a in self.base.slices[j]]) for j in block.factors]
        need_w = any(ax.kind == GAUSS and ax.driver is not None for ax in sub.axes)
        need_c = any(ax.signed and ax.driver is not None for ax in sub.axes)
        out = np.empty((J, m))
        step = max(1, chunk // max(m, 1))
        for a in range(0, J, step):
            s = states[a : a + step, None, :]
            t = tpts[None, :, :]
            x = sub.transform(t, s)
            val = np.ones(x.shape[:-1])
            for fac, idx in facs:
                val = val * fac(x[..., idx])
            if need_w or log_extra is not None:
                lw = sub.log_rn_derivative(t, s) if need_w else 0.0
                if log_extra is not None:
                    lw = lw + np.asarray(log_extra)[a : a + step, None]
                with np.errstate(over="ignore", invalid="ignore"):
                    val = np.where(val != 0.0, val * np.exp(lw / self.alpha), 0.0)
            if need_c:
                val = val * sub.cocycle(t, s)
            out[a : a + step] = val
        if not np.all(np.isfinite(out)):
            raise NumericRangeError("kernel values overflowed while evaluating a lattice block")
        return out


@dataclass(frozen=True)
class DirectSumKernel:
    """Kernel on a disjoint union of state spaces; the field is the sum of
    independent stochastic integrals over the pieces."""

    pieces: tuple[KernelDescriptor, ...]
    name: str = "direct_sum"

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise ConfigError("a direct sum needs at least one piece")
        a = {p.alpha for p in self.pieces}
        d = {p.dimension for p in self.pieces}
        if len(a) != 1 or len(d) != 1:
            raise ConfigError("direct-sum pieces must share alpha and dimension")

    @property
    def alpha(self) -> float:
        return self.pieces[0].alpha

    @property
    def dimension(self) -> int:
        return self.pieces[0].dimension

    @property
    def label(self) -> str | None:
        labels = {p.label for p in self.pieces}
        return labels.pop() if len(labels) == 1 else None

    @property
    def mma(self):
        return None

    def scaled(self, a: float) -> "DirectSumKernel":
        return DirectSumKernel(tuple(p.scaled(a) for p in self.pieces), self.name)


def direct_sum(*kernels, name: str | None = None) -> DirectSumKernel:
    pieces = []
    for k in kernels:
        pieces.extend(k.pieces)
    return DirectSumKernel(tuple(pieces), name or "+".join(k.name for k in kernels))


def evaluate_kernel(kernel, t, s, piece: int = 0):
    """f_t(s) = c_t(s) w_t(s)**(1/alpha) f(phi_t(s)), vectorised over
    broadcastable ``t`` (..., d) and ``s`` (..., k)."""
    k = kernel.pieces[piece]
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.ndim == 0:
        t = t.reshape(1)
    if s.ndim == 0:
        s = s.reshape(1)
    fval = k.base(k.action.transform(t, s))
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(k.action.log_rn_derivative(t, s) / k.alpha)
        out = np.where(fval != 0.0, k.action.cocycle(t, s) * w * fval, 0.0)
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(out)))[0]
        raise NumericRangeError(f"non-finite kernel value at t={t.tolist()}, s={s.tolist()} (index {bad.tolist()})")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class LatticeSpec:
    """Points of 2**-level Z^d inside [0, tau]^d."""

    dimension: int
    level: int
    tau: float

    def __post_init__(self):
        if self.dimension < 1:
            raise ConfigError("lattice dimension must be positive")
        if self.level < 0:
            raise ConfigError("lattice level must be non-negative")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError("lattice window tau must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 ** -self.level

    @property
    def per_axis(self) -> int:
        return int(math.floor(self.tau * 2**self.level)) + 1

    @property
    def count(self) -> int:
        return self.per_axis**self.dimension

    def axis_points(self) -> np.ndarray:
        return np.arange(self.per_axis, dtype=float) * self.spacing

    def index_for(self, tau: float) -> int:
        """Largest per-axis index whose coordinate is <= tau."""
        return int(math.floor(tau * 2**self.level))


def lattice_points(spec: LatticeSpec, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """Lexicographically ordered (count, d) array of the lattice window."""
    n = spec.count
    if n > budget:
        raise ResourceError(f"lattice has {n} points, above the budget of {budget}")
    axis = spec.axis_points()
    grids = np.meshgrid(*([axis] * spec.dimension), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


# ---------------------------------------------------------------------------
# identity checks


@dataclass
class IdentityReport:
    trials: int
    max_deviation: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def _rel(a, b):
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    return np.abs(a - b) / scale


def _state_deviation(action, a, b):
    dev = np.zeros(a.shape[:-1])
    for i, ax in enumerate(action.axes):
        if ax.kind == TORUS:
            d = np.abs(a[..., i] - b[..., i])
            d = np.minimum(d, 1.0 - d)
        else:
            d = np.abs(a[..., i] - b[..., i]) / np.maximum(1.0, np.maximum(np.abs(a[..., i]), np.abs(b[..., i])))
        dev = np.maximum(dev, d)
    return dev


def check_action_identities(action, trials: int, rng, tol: float = 1e-10) -> IdentityReport:
    """Randomised check of the group law, the Radon-Nikodym cocycle
    identity ``w_{u+v}(s) = w_v(s) w_u(phi_v(s))`` and the sign cocycle
    identity, plus the identities at 0."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    d, k = action.dimension, action.state_dim
    u = rng.normal(0.0, 2.0, size=(trials, d))
    v = rng.normal(0.0, 2.0, size=(trials, d))
    s = np.empty((trials, k))
    for i, ax in enumerate(action.axes):
        s[:, i] = rng.uniform(0.0, 1.0, trials) if ax.kind == TORUS else rng.normal(0.0, 2.0, trials)
    zero = np.zeros_like(u)

    phi_v = action.transform(v, s)
    dev = {}
    dev["group_law"] = np.maximum(
        _state_deviation(action, action.transform(u + v, s), action.transform(u, phi_v)),
        _state_deviation(action, action.transform(zero, s), s),
    )
    w_uv = action.rn_derivative(u + v, s)
    w_prod = action.rn_derivative(v, s) * action.rn_derivative(u, phi_v)
    dev["rn_cocycle"] = np.maximum(_rel(w_uv, w_prod), _rel(action.rn_derivative(zero, s), 1.0))
    c_uv = action.cocycle(u + v, s)
    c_prod = action.cocycle(v, s) * action.cocycle(u, phi_v)
    dev["sign_cocycle"] = np.maximum(np.abs(c_uv - c_prod), np.abs(action.cocycle(zero, s) - 1.0)) / 2.0

    violations = []
    for name, arr in dev.items():
        for j in np.flatnonzero(arr > tol):
            violations.append((name, int(j), float(arr[j])))
    return IdentityReport(trials, {n: float(np.max(a)) for n, a in dev.items()}, violations)


# ---------------------------------------------------------------------------
# catalog

FAMILIES = ("translation", "torus_rotation", "gaussian_translation", "product")
BASES = ("indicator", "triangle", "sinusoid", "tabulated")
_KIND = {"translation": LINE, "torus_rotation": TORUS, "gaussian_translation": GAUSS}


def _factor(base, *, lo, hi, center, halfwidth, frequency, phase, table):
    if base == "indicator":
        return Indicator(lo, hi)
    if base == "triangle":
        return Tent(center, halfwidth)
    if base == "sinusoid":
        return Cosine(frequency, phase, lo, hi)
    if base == "tabulated":
        if table is None:
            raise ConfigError("tabulated base function needs a table=(edges, values)")
        edges, values = table
        if np.ndim(edges[0]) == 0:
            edges = (edges,)
        return Table(tuple(edges), values)
    raise ConfigError(f"unknown base function {base!r}; choose one of {', '.join(BASES)}")


def builtin_kernel(
    family: str,
    alpha,
    *,
    dimension: int = 1,
    base: str = "indicator",
    components=None,
    cocycle: str = "none",
    amplitude: float = 1.0,
    lo: float = 0.0,
    hi: float = 1.0,
    center: float = 0.5,
    halfwidth: float = 0.5,
    frequency: float = 1.0,
    phase: float = 0.0,
    table=None,
    rate: float = 1.0,
    mixing_width: float | None = None,
    name: str | None = None,
) -> KernelDescriptor:
    """Kernel from the built-in catalog.

    ``translation``, ``torus_rotation`` and ``gaussian_translation`` act
    coordinatewise on R^d, [0,1)^d and (R, N(0,1))^d.  ``product`` takes a
    list of one-dimensional component families, one per time coordinate;
    torus components carry the constant base function 1.  A multi-axis
    ``table`` gives a single non-separable factor.
    """
    if family not in FAMILIES:
        raise ConfigError(f"unknown kernel family {family!r}; choose one of {', '.join(FAMILIES)}")
    if cocycle not in ("none", "floor"):
        raise ConfigError(f"unknown cocycle {cocycle!r}; choose 'none' or 'floor'")
    signed = cocycle == "floor"
    fac_args = dict(lo=lo, hi=hi, center=center, halfwidth=halfwidth, frequency=frequency, phase=phase, table=table)

    if family == "product":
        if not components:
            raise ConfigError("product family needs a non-empty list of components")
        kinds = []
        for c in components:
            if c not in _KIND:
                raise ConfigError(f"unknown product component {c!r}")
            kinds.append(_KIND[c])
        if dimension not in (1, len(kinds)):
            raise ConfigError(f"product of {len(kinds)} components has dimension {len(kinds)}, not {dimension}")
        dimension = len(kinds)
    else:
        if components:
            raise ConfigError("components are only meaningful for the product family")
        if dimension < 1:
            raise ConfigError("dimension must be a positive integer")
        kinds = [_KIND[family]] * dimension

    axes, factors = [], []
    multi_table = base == "tabulated" and table is not None and np.ndim(table[0][0]) > 0 and len(table[0]) > 1
    if multi_table and len(table[0]) != dimension:
        raise ConfigError(f"tabulated base has {len(table[0])} axes but the family needs {dimension}")
    for k, kind in enumerate(kinds):
        axes.append(Axis(kind, k, rate if kind == TORUS else 1.0, signed and kind != TORUS))
        if multi_table:
            continue
        if family == "product" and kind == TORUS:
            factors.append(Indicator(0.0, 1.0))
        elif kind == TORUS and base == "indicator" and (lo, hi) == (0.0, 1.0):
            factors.append(Indicator(0.0, 1.0))
        else:
            factors.append(_factor(base, **fac_args))
    if multi_table:
        factors.append(_factor(base, **fac_args))

    mma = None
    if family == "translation":
        mixing = ()
        if mixing_width is not None and mixing_width > 0:
            axes.append(Axis(LINE, None))
            factors.append(Indicator(0.0, float(mixing_width)))
            mixing = (len(axes) - 1,)
        mma = MMAForm(mixing, tuple(range(dimension)))
    elif mixing_width:
        raise ConfigError("mixing_width only applies to the translation family")

    action = ActionDescriptor(dimension, tuple(axes))
    kname = name or (f"{family}[{'x'.join(components)}]" if family == "product" else f"{family}[{base}]")
    return KernelDescriptor(action, BaseFunction(tuple(factors), amplitude), alpha, kname, mma)
