import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sasfield.actions import (
    GAUSS,
    LINE,
    TORUS,
    ActionDescriptor,
    Axis,
    BaseFunction,
    Indicator,
    KernelDescriptor,
    LatticeSpec,
    Table,
    Tent,
    builtin_kernel,
    check_action_identities,
    direct_sum,
    evaluate_kernel,
    lattice_points,
)
from sasfield.errors import ConfigError, NumericRangeError, ResourceError
from sasfield.lepage import exact_scale


def catalog():
    """Every built-in family, with a few base functions and the sign cocycle."""
    return [
        builtin_kernel("translation", 1.5),
        builtin_kernel("translation", 0.8, base="triangle", dimension=2),
        builtin_kernel("translation", 1.2, cocycle="floor"),
        builtin_kernel("translation", 1.5, mixing_width=2.0),
        builtin_kernel("torus_rotation", 1.5),
        builtin_kernel("torus_rotation", 1.1, base="sinusoid", rate=math.sqrt(2)),
        builtin_kernel("gaussian_translation", 1.5, base="triangle"),
        builtin_kernel("gaussian_translation", 0.7, cocycle="floor", dimension=2),
        builtin_kernel("product", 1.5, components=["translation", "torus_rotation"]),
        builtin_kernel("product", 1.3, components=["gaussian_translation", "torus_rotation"], cocycle="floor"),
        builtin_kernel("translation", 1.5, base="tabulated", table=([0.0, 0.5, 1.0], [1.0, -2.0])),
    ]


def brute_lattice(d, n, tau):
    """Enumerate 2^-n Z^d within [0, tau]^d with exact rational arithmetic."""
    h = Fraction(1, 2**n)
    tau = Fraction(tau)
    axis = []
    k = 0
    while k * h <= tau:
        axis.append(float(k * h))
        k += 1
    return [list(p) for p in itertools.product(axis, repeat=d)]


class TestLattice:
    def test_integer_lattice(self):
        assert lattice_points(LatticeSpec(1, 0, 2.0)).ravel().tolist() == [0.0, 1.0, 2.0]

    def test_two_dim_half(self):
        pts = lattice_points(LatticeSpec(2, 1, 1.0))
        assert len(pts) == 9
        assert {tuple(p) for p in pts} == set(itertools.product([0.0, 0.5, 1.0], repeat=2))

    def test_eighths(self):
        assert lattice_points(LatticeSpec(1, 3, 0.4)).ravel().tolist() == [0.0, 0.125, 0.25, 0.375]

    def test_lexicographic(self):
        pts = lattice_points(LatticeSpec(3, 1, 1.0))
        assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)

    @settings(max_examples=100, deadline=None)
    @given(d=st.integers(1, 3), n=st.integers(0, 3), tau=st.floats(0.01, 4.0))
    def test_count_formula(self, d, n, tau):
        spec = LatticeSpec(d, n, tau)
        pts = lattice_points(spec)
        assert spec.count == (math.floor(tau * 2**n) + 1) ** d == len(pts)
        assert pts.tolist() == brute_lattice(d, n, tau)

    def test_budget(self):
        with pytest.raises(ResourceError, match="1002001"):
            lattice_points(LatticeSpec(2, 2, 250.0), budget=1000)

    @pytest.mark.parametrize("args", [(0, 1, 1.0), (1, -1, 1.0), (1, 1, 0.0), (1, 1, float("inf"))])
    def test_invalid(self, args):
        with pytest.raises(ConfigError):
            LatticeSpec(*args)


class TestEvaluate:
    @pytest.mark.parametrize("kernel", catalog(), ids=lambda k: k.name)
    def test_identity_at_zero(self, kernel, rng):
        lo, hi = kernel.support_box()
        s = lo + (hi - lo) * rng.random((200, len(lo)))
        t0 = np.zeros((200, kernel.dimension))
        assert np.array_equal(evaluate_kernel(kernel, t0, s), kernel.base(s))

    def test_translation_indicator(self):
        k = builtin_kernel("translation", 1.5)
        t = np.linspace(-3, 3, 121)[:, None]
        for s in (-2.5, -1.0, 0.0, 0.3, 1.0, 2.2):
            expected = ((s + t[:, 0] >= 0) & (s + t[:, 0] <= 1)).astype(float)
            assert np.array_equal(evaluate_kernel(k, t, np.array([[s]])), expected)

    def test_gaussian_translation_density_ratio(self, rng):
        alpha = 1.3
        k = builtin_kernel("gaussian_translation", alpha, base="triangle", center=0.2, halfwidth=1.5)
        t = rng.normal(0, 1.5, size=(1000, 1))
        s = rng.normal(0, 1.5, size=(1000, 1))
        ratio = stats.norm.pdf(s + t) / stats.norm.pdf(s)
        tent = np.maximum(0, 1 - np.abs(s + t - 0.2) / 1.5)
        expected = (ratio ** (1 / alpha) * tent)[:, 0]
        got = evaluate_kernel(k, t, s)
        assert np.allclose(got, expected, rtol=1e-12, atol=1e-300)
        w = k.action.rn_derivative(t, s)
        assert np.allclose(w, np.exp(-s[:, 0] * t[:, 0] - t[:, 0] ** 2 / 2), rtol=1e-13)

    def test_rotation_constant(self, rng):
        k = builtin_kernel("torus_rotation", 1.5)
        t = rng.normal(0, 10, size=(500, 1))
        s = rng.random((500, 1))
        assert np.all(evaluate_kernel(k, t, s) == 1.0)

    def test_floor_cocycle_value(self):
        k = builtin_kernel("translation", 1.5, cocycle="floor", lo=-5.0, hi=5.0)
        for s, t in [(0.3, 0.5), (0.3, 0.8), (0.3, 1.9), (-0.2, 0.1), (2.5, -1.0)]:
            sign = (-1) ** (math.floor(s + t) - math.floor(s))
            assert evaluate_kernel(k, np.array([t]), np.array([s])) == sign

    def test_overflow_is_numeric_range_error(self):
        k = builtin_kernel("gaussian_translation", 1.5, base="triangle")
        with pytest.raises(NumericRangeError, match="t="):
            evaluate_kernel(k, np.array([1000.0]), np.array([-999.5]))

    def test_weighted_values_log_space(self):
        # far Gaussian tails: rho underflows but rho * w stays moderate
        k = builtin_kernel("gaussian_translation", 1.5, base="triangle")
        v = k.weighted_values(np.array([[40.0]]), np.array([[-39.5]]))
        expected = math.exp((-0.5 * 0.5**2 - 0.5 * math.log(2 * math.pi)) / 1.5)
        assert v[0] == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("kernel", catalog(), ids=lambda k: k.name)
    def test_blocks_reproduce_kernel(self, kernel, rng):
        lo, hi = kernel.window_box(3.0)
        s = lo + (hi - lo) * rng.random((300, len(lo)))
        t = 3.0 * rng.random((1, kernel.dimension))
        full = kernel.weighted_values(t, s)
        prod = np.full(len(s), kernel.base.amplitude)
        for block in kernel.blocks:
            if not block.axes:
                continue
            sub = kernel.action.restrict(block.axes, block.drivers)
            logrho = sub.log_density(s[:, list(block.axes)])
            prod = prod * kernel.block_values(block, t[:, list(block.drivers)], s[:, list(block.axes)], logrho)[:, 0]
        assert np.allclose(full, prod, rtol=1e-12, atol=1e-300)


class CorruptedAction(ActionDescriptor):
    """Radon-Nikodym flow deliberately off by a factor of 2."""

    def log_rn_derivative(self, t, s):
        return super().log_rn_derivative(t, s) + math.log(2.0)


class TestIdentities:
    @pytest.mark.parametrize("kernel", catalog(), ids=lambda k: k.name)
    def test_builtin_families(self, kernel, rng):
        rep = check_action_identities(kernel.action, 1000, rng)
        assert rep.ok, rep.max_deviation
        assert max(rep.max_deviation.values()) <= 1e-10

    def test_floor_cocycle_is_nontrivial(self, rng):
        action = builtin_kernel("translation", 1.5, cocycle="floor").action
        t = rng.normal(0, 2, (1000, 1))
        s = rng.normal(0, 2, (1000, 1))
        c = action.cocycle(t, s)
        assert set(np.unique(c)) == {-1.0, 1.0}

    def test_corrupted_flow_flagged_everywhere(self, rng):
        bad = CorruptedAction(1, (Axis(GAUSS, 0),))
        rep = check_action_identities(bad, 1000, rng)
        flagged = {j for name, j, _ in rep.violations if name == "rn_cocycle"}
        assert flagged == set(range(1000))
        assert rep.max_deviation["rn_cocycle"] == pytest.approx(0.5)

    def test_torus_wraps(self):
        action = ActionDescriptor(1, (Axis(TORUS, 0, rate=0.3),))
        out = action.transform(np.array([[10.0]]), np.array([[0.5]]))
        assert out[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert 0.0 <= out[0, 0] < 1.0


class TestCatalog:
    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="unknown kernel family"):
            builtin_kernel("spiral", 1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="dimension"):
            builtin_kernel("product", 1.5, components=["translation", "torus_rotation"], dimension=3)
        with pytest.raises(ConfigError):
            KernelDescriptor(ActionDescriptor(1, (Axis(LINE, 0),)), BaseFunction((Indicator(), Indicator())), 1.5)

    def test_bad_alpha(self):
        with pytest.raises(ConfigError):
            builtin_kernel("translation", 2.0)

    def test_mma_only_for_translation(self):
        assert builtin_kernel("translation", 1.5).mma is not None
        for fam, kw in [("torus_rotation", {}), ("gaussian_translation", {}), ("product", {"components": ["translation", "torus_rotation"]})]:
            assert builtin_kernel(fam, 1.5, **kw).mma is None

    def test_labels(self):
        assert builtin_kernel("translation", 1.5).label == "dissipative"
        assert builtin_kernel("gaussian_translation", 1.5).label == "dissipative"
        assert builtin_kernel("torus_rotation", 1.5).label == "conservative"
        assert builtin_kernel("product", 1.5, components=["translation", "torus_rotation"]).label == "conservative"
        mixed = direct_sum(builtin_kernel("translation", 1.5), builtin_kernel("torus_rotation", 1.5))
        assert mixed.label is None

    def test_product_blocks(self):
        k = builtin_kernel("product", 1.5, components=["translation", "torus_rotation"])
        assert [b.axes for b in k.blocks] == [(0,), (1,)]
        assert [b.drivers for b in k.blocks] == [(0,), (1,)]

    def test_table_equality_and_hash(self):
        a = Table(([0.0, 1.0, 2.0],), [1.0, 3.0])
        b = Table(([0.0, 1.0, 2.0],), [1.0, 3.0])
        assert a == b and hash(a) == hash(b)
        assert a != Table(([0.0, 1.0, 2.0],), [1.0, 4.0])

    def test_tabulated_piecewise_constant(self):
        k = builtin_kernel("translation", 1.0, base="tabulated", table=([0.0, 0.5, 1.0], [1.0, -2.0]))
        s = np.array([[-0.1], [0.0], [0.25], [0.5], [0.99], [1.0]])
        assert k.base(s).tolist() == [0.0, 1.0, 1.0, -2.0, -2.0, 0.0]

    def test_tent_apex(self):
        assert Tent(0.5, 0.5)(np.array([[0.5]]))[0] == 1.0


class TestStationaryNorms:
    @pytest.mark.parametrize(
        "kernel",
        [k for k in catalog() if k.base.factors and not isinstance(k.base.factors[0], Table)],
        ids=lambda k: k.name,
    )
    def test_alpha_norm_invariant_under_shift(self, kernel, rng):
        d = kernel.dimension
        base = exact_scale(kernel, [(1.0, np.zeros(d))], resolution=64)
        for _ in range(3):
            t = rng.uniform(-2, 2, d)
            h = rng.uniform(-2, 2, d)
            shifted = exact_scale(kernel, [(1.0, t + h)], resolution=64)
            assert shifted == pytest.approx(base, rel=2e-3)
