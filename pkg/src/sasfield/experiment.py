"""Declarative experiment runner.

A config is a line-oriented ``key = value`` file with dotted section
prefixes::

    kernel.family = translation
    kernel.alpha = 1.5
    lattice.taus = 25, 50, 100, 200
    run.operation = maxima
    run.replications = 2000
    run.seed = 7

:func:`run` executes one operation over seeded replications and returns a
:class:`ResultTable`; :func:`report` renders a table as aligned text plus a
plot-ready CSV companion.
"""

from __future__ import annotations

import csv
import difflib
import hashlib
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .actions import BASES, CONSERVATIVE, FAMILIES, LatticeSpec, builtin_kernel
from .errors import ConfigError, DataError, ResourceError, SasFieldError
from .hopf import DEFAULT_RADII, classify
from .lepage import FieldSample, FieldSimulator, default_series_config, save_field_sample
from .maxima import (
    LimitLawSpec,
    check_condition,
    compute_b_tau,
    compute_K_X,
    growth_exponent_fit,
    limit_law_test,
    partial_maxima,
)
from .stable import as_alpha, derive_seed, stable_tail_constant

OPERATIONS = ("simulate", "classify", "maxima", "limit-test", "condition-check")
COLUMNS = (
    "experiment_id",
    "operation",
    "replication",
    "tau",
    "raw_value",
    "normalization",
    "statistic",
    "value",
    "seed",
    "config_hash",
)
SUMMARY_COLUMNS = ("operation", "statistic", "tau", "count", "median", "q25", "q75", "value")
POWER_STAT = "M_tau/tau^(d/alpha)"
BTAU_STAT = "M_tau/b_tau"

__all__ = [
    "OPERATIONS",
    "COLUMNS",
    "ExperimentConfig",
    "KernelSection",
    "LatticeSection",
    "RunSection",
    "ResultTable",
    "parse_config",
    "format_config",
    "load_config",
    "config_hash",
    "build_kernel",
    "run",
    "report",
    "write_report",
]


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class KernelSection:
    family: str = ""
    alpha: float = math.nan
    dimension: int = 1
    base: str = "indicator"
    components: tuple = ()
    cocycle: str = "none"
    amplitude: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    center: float = 0.5
    halfwidth: float = 0.5
    frequency: float = 1.0
    phase: float = 0.0
    table_edges: tuple = ()
    table_values: tuple = ()
    rate: float = 1.0
    mixing_width: float | None = None


@dataclass(frozen=True)
class LatticeSection:
    level: int = 2
    taus: tuple = (25.0, 50.0, 100.0, 200.0)


@dataclass(frozen=True)
class RunSection:
    id: str = "experiment"
    operation: str = "maxima"
    replications: int = 100
    seed: int | None = None
    terms: int | None = None
    remainder: str = "gaussian"
    resolution: int = 16
    budget: int = 400_000_000
    epsilon: float = 0.5
    pairs: int = 2000
    sample_count: int = 16
    radii: tuple = DEFAULT_RADII
    save_fields: bool = False
    output: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: KernelSection
    lattice: LatticeSection
    run: RunSection

    @property
    def window(self) -> float:
        return float(self.lattice.taus[-1])


_SECTIONS = {"kernel": KernelSection, "lattice": LatticeSection, "run": RunSection}
_REQUIRED = ("kernel.family", "kernel.alpha", "run.seed")
# keys that never change results and therefore stay out of the config hash
_UNHASHED = ("run.output",)

_FLOAT_LISTS = {"lattice.taus", "run.radii", "kernel.table_edges", "kernel.table_values"}
_STR_LISTS = {"kernel.components"}
_OPTIONAL = {"run.seed", "run.terms", "kernel.mixing_width"}


def _kind(key: str):
    section, name = key.split(".", 1)
    for f in fields(_SECTIONS[section]):
        if f.name == name:
            return f
    raise KeyError(key)


def _all_keys():
    return [f"{s}.{f.name}" for s, cls in _SECTIONS.items() for f in fields(cls)]


def _convert(key: str, raw: str):
    raw = raw.strip()
    if key in _OPTIONAL and raw.lower() in ("", "auto", "none"):
        return None
    if key in _FLOAT_LISTS or key in _STR_LISTS:
        body = raw.strip("[]() ")
        items = [x.strip() for x in body.split(",") if x.strip()] if body else []
        if key in _STR_LISTS:
            return tuple(items)
        return tuple(float(x) for x in items)
    default = getattr(_SECTIONS[key.split(".")[0]](), key.split(".", 1)[1])
    typ = _kind(key).type
    if "bool" in str(typ):
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    if "int" in str(typ):
        value = float(raw)
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if "float" in str(typ) or isinstance(default, float):
        return float(raw)
    return raw


def _validate(cfg: ExperimentConfig, build: bool = True) -> list:
    problems = []
    k, lat, r = cfg.kernel, cfg.lattice, cfg.run
    try:
        as_alpha(k.alpha)
    except ConfigError as exc:
        problems.append(f"kernel.alpha: {exc}")
    if k.family not in FAMILIES:
        problems.append(f"kernel.family: unknown family {k.family!r}; choose one of {', '.join(FAMILIES)}")
    if k.base not in BASES:
        problems.append(f"kernel.base: unknown base {k.base!r}; choose one of {', '.join(BASES)}")
    if k.dimension < 1:
        problems.append("kernel.dimension: must be a positive integer")
    if lat.level < 0:
        problems.append("lattice.level: must be a non-negative integer")
    if not lat.taus:
        problems.append("lattice.taus: ladder must not be empty")
    elif any(t <= 0 for t in lat.taus):
        problems.append("lattice.taus: every tau must be positive")
    elif any(b <= a for a, b in zip(lat.taus, lat.taus[1:])):
        problems.append("lattice.taus: ladder not increasing")
    if r.operation not in OPERATIONS:
        problems.append(f"run.operation: unknown operation {r.operation!r}; choose one of {', '.join(OPERATIONS)}")
    if r.replications < 1:
        problems.append("run.replications: must be positive")
    if r.seed is not None and r.seed < 0:
        problems.append("run.seed: must be a non-negative integer")
    if r.terms is not None and r.terms < 1:
        problems.append("run.terms: must be positive")
    if r.remainder not in ("gaussian", "none"):
        problems.append("run.remainder: choose 'gaussian' or 'none'")
    if r.resolution < 1 or r.budget < 1:
        problems.append("run.resolution and run.budget must be positive")
    if not r.epsilon > 0:
        problems.append("run.epsilon: must be positive")
    if r.pairs < 1 or r.sample_count < 1:
        problems.append("run.pairs and run.sample_count must be positive")
    if len(r.radii) < 3 or any(b <= a for a, b in zip(r.radii, r.radii[1:])):
        problems.append("run.radii: need a strictly increasing ladder of at least 3 radii")
    if build and not problems:
        try:
            build_kernel(cfg)
        except ConfigError as exc:
            problems.append(f"kernel: {exc}")
    return problems


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text.

    Every problem is collected before raising, so a single
    :class:`ConfigError` lists all of them in ``violations``.
    """
    values = {s: {} for s in _SECTIONS}
    problems, seen = [], set()
    known = _all_keys()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in known:
            near = difflib.get_close_matches(key, known, n=1, cutoff=0.5)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            problems.append(f"unknown key {key!r}{hint}")
            continue
        if key in seen:
            problems.append(f"duplicate key {key!r} (line {lineno})")
            continue
        seen.add(key)
        try:
            section, name = key.split(".", 1)
            values[section][name] = _convert(key, raw)
        except ValueError as exc:
            problems.append(f"{key}: cannot parse {raw!r} ({exc})")
    missing = [key for key in _REQUIRED if key not in seen]
    problems += [f"missing required key {key!r}" for key in missing]
    cfg = ExperimentConfig(*(_SECTIONS[s](**values[s]) for s in _SECTIONS))
    if cfg.run.seed is None and "run.seed" not in missing:
        problems.append("run.seed: unseeded runs are not allowed")
    # value checks run even when keys were wrong, so one pass reports everything
    problems += [p for p in _validate(cfg, build=not problems) if not p.startswith(tuple(missing))]
    if problems:
        raise ConfigError(_summary(problems), problems)
    return cfg


def _summary(problems):
    return f"{len(problems)} config problem(s):\n  " + "\n  ".join(problems)


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: ExperimentConfig, hashed_only: bool = False) -> str:
    """Canonical text form; ``parse_config(format_config(c)) == c``."""
    lines = []
    for section in _SECTIONS:
        part = getattr(cfg, section)
        for f in fields(part):
            key = f"{section}.{f.name}"
            if hashed_only and key in _UNHASHED:
                continue
            lines.append(f"{key} = {_format_value(getattr(part, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(format_config(cfg, hashed_only=True).encode()).hexdigest()[:16]


def with_overrides(cfg: ExperimentConfig, operation=None, seed=None, output=None) -> ExperimentConfig:
    run_part = cfg.run
    if operation is not None:
        run_part = replace(run_part, operation=operation)
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        run_part = replace(run_part, seed=int(seed))
    if output is not None:
        run_part = replace(run_part, output=str(output))
    return replace(cfg, run=run_part)


def build_kernel(cfg: ExperimentConfig):
    k = cfg.kernel
    table = None
    if k.base == "tabulated":
        table = (k.table_edges, k.table_values)
    return builtin_kernel(
        k.family,
        k.alpha,
        dimension=k.dimension,
        base=k.base,
        components=list(k.components) or None,
        cocycle=k.cocycle,
        amplitude=k.amplitude,
        lo=k.lo,
        hi=k.hi,
        center=k.center,
        halfwidth=k.halfwidth,
        frequency=k.frequency,
        phase=k.phase,
        table=table,
        rate=k.rate,
        mixing_width=k.mixing_width,
    )


# ---------------------------------------------------------------------------
# result table


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        if text.lstrip("-").isdigit():
            return int(text)
        return float(text)
    except ValueError:
        return text


class ResultTable:
    """Append-only list of result rows; columns are :data:`COLUMNS`."""

    def __init__(self, rows=()):
        self._rows = []
        for row in rows:
            self.append(row)

    def append(self, row):
        if isinstance(row, dict):
            missing = set(COLUMNS) - set(row)
            if missing:
                raise DataError(f"result row lacks columns {sorted(missing)}")
            row = tuple(row[c] for c in COLUMNS)
        if len(row) != len(COLUMNS):
            raise DataError(f"result row has {len(row)} fields, expected {len(COLUMNS)}")
        self._rows.append(tuple(row))

    def extend(self, rows):
        for row in rows:
            self.append(row)

    @property
    def rows(self):
        return tuple(self._rows)

    def records(self):
        return [dict(zip(COLUMNS, r)) for r in self._rows]

    def __len__(self):
        return len(self._rows)

    def __eq__(self, other):
        return isinstance(other, ResultTable) and self.to_csv() == other.to_csv()

    def select(self, **where):
        return [r for r in self.records() if all(r[k] == v for k, v in where.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self._rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("result table is empty") from None
        if tuple(header) != COLUMNS:
            raise DataError(f"unexpected result table header {header}")
        table = cls()
        for line in reader:
            table.append(tuple(_parse_cell(x) for x in line))
        return table

    @classmethod
    def read(cls, path) -> "ResultTable":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read result table {path}: {exc}") from exc
        return cls.from_csv(text)


# ---------------------------------------------------------------------------
# running


def _seed_label(root: int, rep: int) -> str:
    return f"{root}:{rep}"


def _rep_rng(root: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(root, rep)))


class _Context:
    """Per-process precomputation shared by all replications of one run."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.kernel = build_kernel(cfg)
        self.lattice = LatticeSpec(self.kernel.dimension, cfg.lattice.level, cfg.window)
        series = default_series_config(self.kernel, self.lattice, cfg.run.seed, cfg.run.terms, cfg.run.remainder)
        self.simulator = FieldSimulator(self.kernel, self.lattice, series)
        self.b_taus = None
        if cfg.run.operation in ("maxima", "limit-test"):
            self.b_taus = [
                compute_b_tau(self.kernel, t, cfg.lattice.level, cfg.run.resolution, cfg.run.budget)
                for t in cfg.lattice.taus
            ]

    def row(self, rep, tau, raw, norm, stat, value, seed=None):
        return (self.cfg.run.id, self.cfg.run.operation, rep, tau, raw, norm, stat, value, seed, self.hash)


_CONTEXT = {}


def _context(cfg):
    key = config_hash(cfg)
    if key not in _CONTEXT:
        _CONTEXT.clear()
        _CONTEXT[key] = _Context(cfg)
    return _CONTEXT[key]


def _replication_rows(ctx: _Context, rep: int):
    cfg = ctx.cfg
    label = _seed_label(cfg.run.seed, rep)
    values = ctx.simulator.sample(_rep_rng(cfg.run.seed, rep))
    sample = FieldSample(ctx.lattice, values, ctx.kernel, ctx.simulator.config, label)
    if cfg.run.operation == "simulate":
        if cfg.run.save_fields and cfg.run.output:
            folder = Path(cfg.run.output).with_suffix("").as_posix() + "_fields"
            Path(folder).mkdir(parents=True, exist_ok=True)
            save_field_sample(sample, Path(folder) / f"rep{rep:06d}.txt")
        flat = sample.flat
        return [
            ctx.row(rep, cfg.window, float(np.max(np.abs(flat))), 1.0, "max_abs", float(np.max(np.abs(flat))), label),
            ctx.row(rep, cfg.window, float(flat[0]), 1.0, "value_at_origin", float(flat[0]), label),
        ]
    rows = []
    for rec in partial_maxima(sample, cfg.lattice.taus, ctx.b_taus, rep):
        rows.append(ctx.row(rep, rec.tau, rec.M_tau, rec.norm_power, POWER_STAT, rec.M_tau / rec.norm_power, label))
        rows.append(ctx.row(rep, rec.tau, rec.M_tau, rec.norm_btau, BTAU_STAT, rec.M_tau / rec.norm_btau, label))
    return rows


def _run_batch(cfg: ExperimentConfig, reps):
    """Rows for a batch of replications.  Single-threaded BLAS keeps the
    floating point reductions independent of the worker layout."""
    out = []
    with threadpool_limits(1):
        ctx = _context(cfg)
        for rep in reps:
            try:
                out.extend(_replication_rows(ctx, rep))
            except ResourceError as exc:
                raise ResourceError(f"replication {rep}: {exc}") from exc
            except SasFieldError as exc:
                out.append(ctx.row(rep, None, None, None, "error", f"{type(exc).__name__}: {exc}", _seed_label(cfg.run.seed, rep)))
    return out


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def _replicate(cfg: ExperimentConfig, jobs: int):
    reps = list(range(cfg.run.replications))
    if jobs <= 1 or len(reps) < 2:
        return _run_batch(cfg, reps)
    # build the shared precomputation once so setup errors surface here
    with threadpool_limits(1):
        _context(cfg)
    nbatch = min(len(reps), 4 * jobs)
    batches = [reps[i::nbatch] for i in range(nbatch)]
    rows = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_run_batch, [cfg] * nbatch, batches):
            rows.extend(part)
    return rows


def _order(rows):
    """Order-normalise rows by replication id (aggregate rows last)."""
    idx = {id(r): i for i, r in enumerate(rows)}
    return sorted(rows, key=lambda r: (r[2] is None, r[2] if r[2] is not None else 0, idx[id(r)]))


def _limit_rows(cfg, ctx, rows):
    """KS rows at the largest tau of the ladder."""
    tau = cfg.window
    alpha = ctx.kernel.alpha
    out = []
    if ctx.kernel.label == CONSERVATIVE or getattr(ctx.kernel, "mma", None) is None:
        stat = BTAU_STAT
        law = LimitLawSpec(alpha, 1.0)
        asserted = False
    else:
        stat = POWER_STAT
        k_x = compute_K_X(ctx.kernel, cfg.lattice.level, cfg.run.resolution)
        law = LimitLawSpec(alpha, k_x)
        asserted = True
        out.append(ctx.row(None, None, None, None, "K_X", k_x))
    values = [r[7] for r in rows if r[6] == stat and r[3] == tau]
    ks = limit_law_test(values, law)
    norm = ctx.b_taus[-1] if stat == BTAU_STAT else tau ** (ctx.kernel.dimension / alpha)
    out += [
        ctx.row(None, tau, None, norm, "C_alpha", stable_tail_constant(alpha)),
        ctx.row(None, tau, None, norm, "frechet_scale", law.scale),
        ctx.row(None, tau, None, norm, "ks_normalized_by", stat),
        ctx.row(None, tau, None, norm, "ks_statistic", ks.statistic),
        ctx.row(None, tau, None, norm, "ks_critical_5pct", ks.critical_5pct),
        ctx.row(None, tau, None, norm, "ks_pvalue", ks.pvalue),
        ctx.row(None, tau, None, norm, "ks_n", ks.n),
        ctx.row(None, tau, None, norm, "ks_passed", int(ks.passed) if asserted else "not asserted"),
    ]
    return out


def run(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Execute ``cfg.run.operation``; identical configs give identical tables
    whatever ``jobs`` is."""
    op = cfg.run.operation
    if op not in OPERATIONS:
        raise ConfigError(f"unknown operation {op!r}")
    if cfg.run.seed is None:
        raise ConfigError("run.seed: unseeded runs are not allowed")
    h = config_hash(cfg)
    root = cfg.run.seed
    kernel = build_kernel(cfg)
    table = ResultTable()

    def row(rep, tau, raw, norm, stat, value, seed=None):
        return (cfg.run.id, op, rep, tau, raw, norm, stat, value, seed, h)

    if op == "classify":
        rep = classify(kernel, cfg.run.sample_count, cfg.run.radii, _rep_rng(root, 0), resolution=4)
        rec = rep.as_record()
        table.append(row(None, None, rec["min_slope"], None, "verdict", rep.verdict, _seed_label(root, 0)))
        return table

    if op == "condition-check":
        rep = check_condition(
            kernel, cfg.lattice.taus, cfg.run.epsilon, cfg.run.pairs, _rep_rng(root, 0), cfg.lattice.level, cfg.run.resolution
        )
        label = _seed_label(root, 0)
        for tau, p, se, b in zip(rep.taus, rep.probabilities, rep.standard_errors, rep.b_taus):
            table.append(row(None, tau, float(p), None, "pair_probability", float(p), label))
            table.append(row(None, tau, float(se), None, "pair_probability_se", float(se), label))
            table.append(row(None, tau, float(b), None, "b_tau", float(b), label))
        table.append(row(None, None, None, None, "b_tau_slope", rep.b_slope, label))
        table.append(row(None, None, None, None, "slope_threshold", rep.threshold, label))
        table.append(row(None, None, None, None, "sufficient", int(rep.sufficient), label))
        return table

    rows = _order(_replicate(cfg, jobs))
    table.extend(rows)
    if op == "limit-test":
        with threadpool_limits(1):
            table.extend(_limit_rows(cfg, _context(cfg), rows))
    return table


# ---------------------------------------------------------------------------
# reporting


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _g(x, width=12):
    if isinstance(x, float):
        return f"{x:>{width}.6g}"
    return f"{str(x):>{width}}"


def report(table: ResultTable):
    """Render a result table.  Returns ``(text, summary_rows)`` where the
    summary rows follow :data:`SUMMARY_COLUMNS`."""
    if len(table) == 0:
        raise DataError("cannot report on an empty result table")
    records = table.records()
    ops = []
    for r in records:
        if r["operation"] not in ops:
            ops.append(r["operation"])
    lines, summary = [], []
    for op in ops:
        recs = [r for r in records if r["operation"] == op]
        ids = sorted({str(r["experiment_id"]) for r in recs})
        lines.append(f"== {op} ({', '.join(ids)}) ==")
        errors = [r for r in recs if r["statistic"] == "error"]
        if errors:
            lines.append(f"  {len(errors)} replication(s) failed; first: {errors[0]['value']}")
        per_rep = [r for r in recs if r["replication"] is not None and r["statistic"] != "error"]
        aggregate = [r for r in recs if r["replication"] is None]
        stats = []
        for r in per_rep:
            if r["statistic"] not in stats:
                stats.append(r["statistic"])
        for stat in stats:
            by_tau = {}
            for r in per_rep:
                if r["statistic"] == stat and _num(r["value"]):
                    by_tau.setdefault(r["tau"], []).append(r["value"])
            taus = sorted(by_tau)
            lines.append(f"  {stat}")
            lines.append(f"  {'tau':>10} {'count':>7} {'median':>12} {'q25':>12} {'q75':>12} {'IQR':>12}")
            medians = []
            for tau in taus:
                v = np.asarray(by_tau[tau], dtype=float)
                q25, med, q75 = (float(x) for x in np.quantile(v, [0.25, 0.5, 0.75]))
                medians.append(med)
                lines.append(f"  {tau:>10.6g} {len(v):>7d} {_g(med)} {_g(q25)} {_g(q75)} {_g(q75 - q25)}")
                summary.append((op, stat, tau, len(v), med, q25, q75, None))
            if stat in (POWER_STAT, BTAU_STAT) and len(medians) > 1:
                dec = all(b < a for a, b in zip(medians, medians[1:]))
                if stat == POWER_STAT and dec:
                    lines.append("  median of M_tau/tau^(d/alpha) decreasing along the ladder")
                raw = {}
                for r in per_rep:
                    if r["statistic"] == stat and _num(r["raw_value"]):
                        raw.setdefault(r["tau"], []).append(r["raw_value"])
                raw_med = [float(np.median(raw[t])) for t in taus]
                if len(taus) >= 4 and all(m > 0 for m in medians):
                    fit_raw = growth_exponent_fit(taus, raw_med)
                    fit_norm = growth_exponent_fit(taus, medians)
                    if stat == POWER_STAT:
                        lines.append(f"  growth exponent of median M_tau: {fit_raw.exponent:.4f} (residual {fit_raw.rms_residual:.3g})")
                        summary.append((op, "growth_exponent_M_tau", None, len(taus), None, None, None, fit_raw.exponent))
                    lines.append(f"  growth exponent of median {stat}: {fit_norm.exponent:.4f} (residual {fit_norm.rms_residual:.3g})")
                    summary.append((op, f"growth_exponent_{stat}", None, len(taus), None, None, None, fit_norm.exponent))
        if aggregate:
            lines.append(f"  {'statistic':<22} {'tau':>10} {'value':>14}")
            for r in aggregate:
                tau = "" if r["tau"] is None else f"{r['tau']:.6g}"
                val = r["value"]
                sval = f"{val:.6g}" if isinstance(val, float) else str(val)
                lines.append(f"  {r['statistic']:<22} {tau:>10} {sval:>14}")
                summary.append((op, r["statistic"], r["tau"], 1, None, None, None, val))
        lines.append("")
    return "\n".join(lines), summary


def summary_csv(summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in summary:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def companion_paths(out) -> tuple:
    """Paths of the text report and summary CSV that accompany ``out``."""
    out = Path(out)
    stem = out.with_suffix("") if out.suffix in (".csv", ".txt") else out
    return stem.with_name(stem.name + ".report.txt"), stem.with_name(stem.name + ".summary.csv")


def write_report(table: ResultTable, out) -> tuple:
    text, summary = report(table)
    txt, scsv = companion_paths(out)
    txt.write_text(text, encoding="utf-8")
    scsv.write_text(summary_csv(summary), encoding="utf-8")
    return txt, scsv
