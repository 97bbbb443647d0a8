"""Truncated LePage series for ``X_t = int f_t dM`` on lattice windows.

With ``Gamma_j`` unit Poisson arrivals, ``eps_j`` random signs and ``V_j``
uniform on a box ``S0`` of Lebesgue volume ``L`` containing every relevant
support,

    X_t = kappa * sum_j eps_j Gamma_j**(-1/alpha) rho(V_j)**(1/alpha) f_t(V_j),
    kappa = (C_alpha * L)**(1/alpha),

where ``rho`` is the density of the control measure with respect to
Lebesgue measure.  The terms beyond ``J`` are replaced by a centred
Gaussian field with the conditional covariance of the omitted series
given ``Gamma_J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .actions import LatticeSpec, lattice_points
from .errors import ConfigError, DataError, NumericRangeError, ResourceError, ShapeError
from .quadrature import cells_1d, product_grid
from .stable import as_alpha, make_rng, poisson_arrivals, stable_tail_constant

DEFAULT_HITS = 25
MIN_TERMS = 200
EXACT_BUDGET = 20_000_000

__all__ = [
    "SeriesConfig",
    "FieldSample",
    "FieldSimulator",
    "default_series_config",
    "exact_scale",
    "simulate_field",
    "char_function_test",
    "CFTestReport",
    "calibrate_normalization",
    "save_field_sample",
    "load_field_sample",
]


# ---------------------------------------------------------------------------
# exact scale of linear combinations


def _combo_box(piece, ts):
    lo0, hi0 = piece.support_box()
    lo, hi = lo0.copy(), hi0.copy()
    for i, ax in enumerate(piece.action.axes):
        if ax.kind == "torus":
            lo[i], hi[i] = 0.0, 1.0
        elif ax.driver is not None:
            shifts = ax.rate * ts[:, ax.driver]
            lo[i] = lo0[i] - shifts.max()
            hi[i] = hi0[i] - shifts.min()
    return lo, hi


def exact_scale(kernel, combo, resolution: int = 32, budget: int = EXACT_BUDGET) -> float:
    """Scale of ``sum_j c_j X_{t_j}``, i.e. the L^alpha(mu) norm of
    ``sum_j c_j f_{t_j}``, by aligned midpoint quadrature."""
    if not combo:
        raise ConfigError("combination must be non-empty")
    coeffs = np.array([float(c) for c, _ in combo])
    if not np.all(np.isfinite(coeffs)):
        raise ConfigError("coefficients must be finite")
    ts = np.array([np.atleast_1d(np.asarray(t, dtype=float)) for _, t in combo])
    total = 0.0
    for piece in kernel.pieces:
        if ts.shape[1] != piece.dimension:
            raise ConfigError(f"time points must have dimension {piece.dimension}")
        lo, hi = _combo_box(piece, ts)
        pts, vol = product_grid(piece.state_cells(lo, hi, resolution), budget // max(len(ts), 1))
        acc = np.zeros(len(pts))
        for c, t in zip(coeffs, ts):
            if c != 0.0:
                acc += c * piece.weighted_values(t[None, :], pts)
        total += float(np.sum(np.abs(acc) ** piece.alpha * vol))
    return total ** (1.0 / kernel.alpha)


# ---------------------------------------------------------------------------
# configuration and samples


@dataclass(frozen=True)
class SeriesConfig:
    """Series settings: term budget, per-piece boxes S0, normalisation
    kappa, seed and how the omitted tail is handled."""

    terms: int
    boxes: tuple
    normalization: float
    seed: int | None = None
    remainder: str = "gaussian"
    remainder_resolution: int = 4

    def __post_init__(self):
        if self.terms < 1:
            raise ConfigError("term budget must be positive")
        if self.remainder not in ("gaussian", "none"):
            raise ConfigError("remainder must be 'gaussian' or 'none'")
        if not (self.normalization > 0 and math.isfinite(self.normalization)):
            raise ConfigError("normalisation constant must be positive")
        boxes = tuple((tuple(map(float, lo)), tuple(map(float, hi))) for lo, hi in self.boxes)
        for lo, hi in boxes:
            if any(b <= a for a, b in zip(lo, hi)):
                raise ConfigError("S0 boxes must have positive volume")
        object.__setattr__(self, "boxes", boxes)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([math.prod(b - a for a, b in zip(lo, hi)) for lo, hi in self.boxes])


def lepage_normalization(alpha, volume: float) -> float:
    return (stable_tail_constant(alpha) * volume) ** (1.0 / as_alpha(alpha))


def default_series_config(kernel, lattice: LatticeSpec, seed=None, terms=None, remainder="gaussian", hits=DEFAULT_HITS):
    """Boxes from the lattice window, the LePage constant for their total
    volume, and ``J = max(200, hits * L / |supp f|)`` so that on average
    ``hits`` of the kept terms land in the support of each ``f_t``."""
    boxes, supp = [], []
    for piece in kernel.pieces:
        lo, hi = piece.window_box(lattice.tau)
        boxes.append((lo, hi))
        slo, shi = piece.support_box()
        supp.append(float(np.prod(shi - slo)))
    vol = float(sum(np.prod(hi - lo) for lo, hi in boxes))
    if terms is None:
        terms = max(MIN_TERMS, math.ceil(hits * vol / min(supp)))
    res = max(4, 2**lattice.level)
    return SeriesConfig(int(terms), tuple(boxes), lepage_normalization(kernel.alpha, vol), seed, remainder, res)


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One realisation on a lattice window; ``values`` has shape
    ``(per_axis,) * d`` in lexicographic (row-major) order."""

    lattice: LatticeSpec
    values: np.ndarray
    kernel: object = None
    config: SeriesConfig | None = None
    seed: object = None
    kernel_name: str = field(default="")

    def __post_init__(self):
        if not self.kernel_name and self.kernel is not None:
            object.__setattr__(self, "kernel_name", self.kernel.name)
        if not np.all(np.isfinite(self.values)):
            raise NumericRangeError("field sample contains non-finite values")

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


# ---------------------------------------------------------------------------
# simulator


class FieldSimulator:
    """Holds the per-(kernel, lattice, config) precomputation; each call to
    :meth:`sample` draws one independent realisation."""

    def __init__(self, kernel, lattice: LatticeSpec, config: SeriesConfig, budget: int = 200_000_000):
        self.kernel = kernel
        self.lattice = lattice
        self.config = config
        self.alpha = kernel.alpha
        if lattice.dimension != kernel.dimension:
            raise ConfigError("lattice dimension differs from the kernel dimension")
        if len(config.boxes) != len(kernel.pieces):
            raise ConfigError("series config needs one S0 box per kernel piece")
        for piece, (lo, hi) in zip(kernel.pieces, config.boxes):
            need_lo, need_hi = piece.window_box(lattice.tau)
            if np.any(np.array(lo) > need_lo + 1e-12) or np.any(np.array(hi) < need_hi - 1e-12):
                raise ConfigError(
                    f"S0 box {lo}..{hi} does not contain the supports of f_t on the window "
                    f"({need_lo.tolist()}..{need_hi.tolist()})"
                )
        m = lattice.per_axis
        if config.terms * m > budget:
            raise ResourceError(f"{config.terms} terms x {m} lattice points exceeds the budget of {budget}")
        self.volumes = config.volumes
        self.volume = float(self.volumes.sum())
        self._axis = lattice.axis_points()
        self._letters = "abcdefghijklmnopqrstuvw"
        self._remainder = None
        if config.remainder == "gaussian":
            self._remainder = [self._remainder_factors(p, box) for p, box in zip(kernel.pieces, config.boxes)]

    # einsum subscripts: jumps use 'z', time coordinates 'a', 'b', ...
    def _block_points(self, block):
        if not block.drivers:
            return np.zeros((1, 1))
        grids = np.meshgrid(*([self._axis] * len(block.drivers)), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def _subscripts(self, block):
        return "".join(self._letters[k] for k in block.drivers)

    def _block_tensor(self, block, F):
        shape = (F.shape[0],) + (self.lattice.per_axis,) * len(block.drivers)
        return F.reshape(shape)

    def _remainder_factors(self, piece, box):
        lo, hi = np.array(box[0]), np.array(box[1])
        res = self.config.remainder_resolution
        out = []
        for block in piece.blocks:
            cells = piece.state_cells(lo, hi, res, axes=block.axes)
            mids, vol = product_grid(cells, 50_000_000)
            if block.axes:
                logrho = piece.action.restrict(block.axes, block.drivers).log_density(mids)
            else:
                logrho = None
            G = piece.block_values(block, self._block_points(block), mids, logrho)
            G = G * np.sqrt(vol)[:, None]
            out.append((block, self._block_tensor(block, G)))
        return out

    def _contract(self, weights, factors, lead):
        """sum over the leading index of weights * prod of block tensors."""
        ops, subs = [], []
        for block, T in factors:
            ops.append(T)
            subs.append(lead + self._subscripts(block))
        outsub = "".join(self._letters[k] for k in range(self.lattice.dimension))
        expr = ",".join([lead] + subs) + "->" + outsub
        return np.einsum(expr, weights, *ops, optimize=True)

    def sample(self, rng) -> np.ndarray:
        cfg = self.config
        a = self.alpha
        J = cfg.terms
        d = self.lattice.dimension
        amp_pieces = [p.base.amplitude for p in self.kernel.pieces]
        gam = poisson_arrivals(J, rng)
        eps = rng.integers(0, 2, size=J) * 2.0 - 1.0
        if len(self.kernel.pieces) > 1:
            which = rng.choice(len(self.kernel.pieces), size=J, p=self.volumes / self.volume)
        else:
            which = np.zeros(J, dtype=np.int64)
        coef = cfg.normalization * eps * gam ** (-1.0 / a)
        X = np.zeros((self.lattice.per_axis,) * d)
        for p, (piece, (lo, hi)) in enumerate(zip(self.kernel.pieces, cfg.boxes)):
            idx = np.flatnonzero(which == p)
            lo, hi = np.array(lo), np.array(hi)
            V = lo + (hi - lo) * rng.random((len(idx), len(lo)))
            if amp_pieces[p] == 0.0 or len(idx) == 0:
                continue
            factors = []
            for block in piece.blocks:
                if block.axes:
                    sub = piece.action.restrict(block.axes, block.drivers)
                    logrho = sub.log_density(V[:, block.axes])
                else:
                    logrho = None
                F = piece.block_values(block, self._block_points(block), V[:, list(block.axes)], logrho)
                factors.append((block, self._block_tensor(block, F)))
            X = X + amp_pieces[p] * self._contract(coef[idx], factors, "z")
        if self._remainder is not None:
            sigma = cfg.normalization * math.sqrt(gam[-1] ** (1.0 - 2.0 / a) / ((2.0 / a - 1.0) * self.volume))
            for p, factors in enumerate(self._remainder):
                shape = tuple(T.shape[0] for _, T in factors)
                Z = rng.standard_normal(shape)
                if amp_pieces[p] == 0.0:
                    continue
                letters = "zyxwvu"[: len(factors)]
                ops = [Z] + [T for _, T in factors]
                subs = [letters] + [letters[i] + self._subscripts(b) for i, (b, _) in enumerate(factors)]
                outsub = "".join(self._letters[k] for k in range(d))
                X = X + amp_pieces[p] * sigma * np.einsum(",".join(subs) + "->" + outsub, *ops, optimize=True)
        if not np.all(np.isfinite(X)):
            bad = int(np.flatnonzero(~np.isfinite(X.ravel()))[0])
            raise NumericRangeError(f"series produced a non-finite value at lattice index {bad}")
        return X

    def field_sample(self, seed) -> FieldSample:
        values = self.sample(make_rng(seed))
        return FieldSample(self.lattice, values, self.kernel, self.config, seed)


def simulate_field(kernel, lattice: LatticeSpec, config: SeriesConfig | None = None, rng=None) -> FieldSample:
    """One realisation of the field on ``lattice``.

    With ``rng=None`` the generator is seeded from ``config.seed``, so a
    sample is reproducible from (kernel, lattice, config) alone.
    """
    if config is None:
        config = default_series_config(kernel, lattice)
    sim = FieldSimulator(kernel, lattice, config)
    if rng is None:
        if config.seed is None:
            raise ConfigError("simulate_field needs an rng or a seeded config")
        rng = make_rng(config.seed)
    return FieldSample(lattice, sim.sample(rng), kernel, config, config.seed)


# ---------------------------------------------------------------------------
# validation


@dataclass
class CFTestReport:
    rows: list  # (combo index, theta, empirical, target, se, z)
    scales: list
    threshold: float = 4.0

    @property
    def max_abs_z(self) -> float:
        return max((abs(r[5]) for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_abs_z <= self.threshold


def char_function_test(replications, combos, kernel, thetas, points, *, threshold: float = 4.0, scales=None) -> CFTestReport:
    """Compare empirical ``E cos(theta * sum c_j X_{t_j})`` with
    ``exp(-(theta * scale)**alpha)``.

    ``replications`` is an (N, n_points) array, ``points`` the lattice
    coordinates of its columns, ``combos`` a list of (coefficients, column
    indices).  The standard error uses the model variance of the cosine,
    ``(1 + phi(2 theta))/2 - phi(theta)**2``.
    """
    X = np.asarray(replications, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    if X.ndim != 2 or X.shape[1] != len(pts):
        raise ShapeError(f"replications of shape {X.shape} do not match {len(pts)} lattice points")
    N = X.shape[0]
    a = kernel.alpha
    rows, out_scales = [], []
    for ci, (coeffs, idx) in enumerate(combos):
        coeffs = np.asarray(coeffs, dtype=float)
        idx = np.asarray(idx, dtype=int)
        if coeffs.shape != idx.shape:
            raise ShapeError("each combination needs one coefficient per lattice index")
        sc = scales[ci] if scales is not None else exact_scale(kernel, [(c, pts[i]) for c, i in zip(coeffs, idx)])
        out_scales.append(sc)
        y = X[:, idx] @ coeffs
        for th in thetas:
            emp = float(np.mean(np.cos(th * y)))
            phi1 = math.exp(-((abs(th) * sc) ** a))
            phi2 = math.exp(-((2 * abs(th) * sc) ** a))
            var = max((1.0 + phi2) / 2.0 - phi1**2, 0.0)
            se = math.sqrt(var / N)
            z = 0.0 if se == 0.0 else (emp - phi1) / se
            if se == 0.0 and abs(emp - phi1) > 1e-12:
                z = math.inf
            rows.append((ci, float(th), emp, phi1, se, z))
    return CFTestReport(rows, out_scales, threshold)


def calibrate_normalization(kernel, lattice: LatticeSpec, config: SeriesConfig, replications: int, rng, point: int = 0):
    """Empirical check of ``kappa``: simulate, estimate the scale at one
    lattice point from the characteristic function at ``1/scale`` and
    return ``(calibrated kappa, empirical/exact scale ratio)``."""
    sim = FieldSimulator(kernel, lattice, config)
    pts = lattice_points(lattice)
    target = exact_scale(kernel, [(1.0, pts[point])])
    if target == 0:
        raise DataError("reference point has zero scale")
    vals = np.array([sim.sample(rng).reshape(-1)[point] for _ in range(replications)])
    m = float(np.mean(np.cos(vals / target)))
    if not m > 0:
        raise DataError("empirical characteristic function is not positive; cannot calibrate")
    emp = target * (-math.log(m)) ** (1.0 / kernel.alpha)
    ratio = emp / target
    return config.normalization / ratio, ratio


# ---------------------------------------------------------------------------
# persistence

_HEADER_KEYS = ("kernel", "dimension", "level", "tau", "terms", "normalization", "remainder", "seed")


def save_field_sample(sample: FieldSample, path) -> None:
    """Text table: ``# key = value`` header lines, then one value per line
    in row-major lattice order, printed with 17 significant digits."""
    cfg = sample.config
    meta = {
        "kernel": sample.kernel_name,
        "dimension": sample.lattice.dimension,
        "level": sample.lattice.level,
        "tau": repr(float(sample.lattice.tau)),
        "terms": cfg.terms if cfg else "",
        "normalization": repr(float(cfg.normalization)) if cfg else "",
        "remainder": cfg.remainder if cfg else "",
        "seed": "" if sample.seed is None else str(sample.seed),
    }
    lines = [f"# {k} = {meta[k]}" for k in _HEADER_KEYS]
    lines += [f"{v:.17g}" for v in sample.flat]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_field_sample(path) -> FieldSample:
    """Inverse of :func:`save_field_sample`; the series config is not
    restored, only the lattice, values, seed and kernel name."""
    meta, values = {}, []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = val.strip()
        elif line.strip():
            try:
                values.append(float(line))
            except ValueError:
                raise DataError(f"{path}: line {n} is not a number: {line.strip()!r}") from None
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise DataError(f"{path}: missing header keys {', '.join(missing)}")
    try:
        lattice = LatticeSpec(int(meta["dimension"]), int(meta["level"]), float(meta["tau"]))
    except (ValueError, ConfigError) as exc:
        raise DataError(f"{path}: bad lattice header ({exc})") from None
    arr = np.array(values)
    if arr.size != lattice.count:
        raise ShapeError(f"file holds {arr.size} values but the lattice has {lattice.count} points")
    seed = meta["seed"] or None
    if seed is not None and seed.isdigit():
        seed = int(seed)
    return FieldSample(lattice, arr.reshape((lattice.per_axis,) * lattice.dimension), None, None, seed, meta["kernel"])
