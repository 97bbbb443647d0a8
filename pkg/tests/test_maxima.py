import math

import numpy as np
import pytest
from scipy import stats

from sasfield.actions import LatticeSpec, builtin_kernel
from sasfield.errors import ConfigError, DataError, EfficiencyError, ResourceError, UnsupportedKernelError
from sasfield.lepage import FieldSample, FieldSimulator, default_series_config
from sasfield.maxima import (
    LimitLawSpec,
    check_condition,
    compute_b_tau,
    compute_K_X,
    growth_exponent_fit,
    limit_law_test,
    partial_maxima,
    sample_eta_tau,
)
from sasfield.stable import FrechetLaw, frechet_quantile, make_rng, sample_sas, stable_tail_constant

TRANSLATION = builtin_kernel("translation", 1.5)
ROTATION = builtin_kernel("torus_rotation", 1.5)
PRODUCT = builtin_kernel("product", 1.5, components=["translation", "torus_rotation"])


def pair_probability_on_lattice(tau, h=0.25, n=3000):
    """P(two uniform points on [-tau, 1] share a lattice t in [0, tau] with
    both in the indicator window), by midpoint integration over the square."""
    u = -tau + (tau + 1) * (np.arange(n) + 0.5) / n
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    lo = np.maximum(np.maximum(-U1, -U2), 0.0)
    hi = np.minimum(np.minimum(1 - U1, 1 - U2), tau)
    return float(np.mean(np.floor(hi / h + 1e-12) >= np.ceil(lo / h - 1e-12)))


class TestPartialMaxima:
    def test_constant_field(self):
        lat = LatticeSpec(1, 0, 4.0)
        s = FieldSample(lat, np.full(5, -2.5), TRANSLATION)
        recs = partial_maxima(s, [1.0, 2.0, 4.0])
        assert [r.M_tau for r in recs] == [2.5, 2.5, 2.5]

    def test_hand_built(self):
        lat = LatticeSpec(1, 0, 2.0)
        s = FieldSample(lat, np.array([1.0, -5.0, 2.0]), TRANSLATION)
        recs = partial_maxima(s, [1.0, 2.0])
        assert [r.M_tau for r in recs] == [5.0, 5.0]
        assert recs[0].norm_power == pytest.approx(1.0)
        assert recs[1].norm_power == pytest.approx(2 ** (1 / 1.5))
        assert recs[1].norm_btau == pytest.approx(3 ** (1 / 1.5), rel=1e-12)

    def test_monotone_on_simulated(self):
        k = PRODUCT
        lat = LatticeSpec(2, 1, 8.0)
        sim = FieldSimulator(k, lat, default_series_config(k, lat))
        rng = make_rng(4)
        for rep in range(5):
            s = FieldSample(lat, sim.sample(rng), k)
            recs = partial_maxima(s, [1.0, 2.0, 4.0, 8.0], replication=rep)
            m = [r.M_tau for r in recs]
            assert all(b >= a for a, b in zip(m, m[1:]))
            assert m[-1] == np.max(np.abs(s.values))

    def test_errors(self):
        s = FieldSample(LatticeSpec(1, 0, 2.0), np.zeros(3), TRANSLATION)
        with pytest.raises(ConfigError):
            partial_maxima(s, [1.0, 3.0])
        with pytest.raises(ConfigError):
            partial_maxima(s, [2.0, 1.0])


class TestBTau:
    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_translation_closed_form(self, tau):
        assert compute_b_tau(TRANSLATION, tau) == pytest.approx((tau + 1) ** (1 / 1.5), rel=1e-10)

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_rotation_is_one(self, tau):
        assert compute_b_tau(ROTATION, tau) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("tau", [1.0, 10.0, 100.0])
    def test_product_factorises(self, tau):
        assert compute_b_tau(PRODUCT, tau) == pytest.approx((tau + 1) ** (1 / 1.5), rel=1e-10)

    def test_gaussian_translation_brute_force(self):
        # int sup_t phi(s + t) 1_[0,1](s + t) ds over lattice t, brute force on a fine grid
        alpha, tau = 1.3, 3.0
        k = builtin_kernel("gaussian_translation", alpha)
        t = np.arange(0, tau + 1e-12, 0.25)
        s = np.linspace(-tau - 0.5, 1.5, 200_001)
        u = s[:, None] + t[None, :]
        dens = np.where((u >= 0) & (u <= 1), stats.norm.pdf(u), 0.0).max(axis=1)
        expected = np.trapezoid(dens, s) ** (1 / alpha)
        assert compute_b_tau(k, tau, resolution=256) == pytest.approx(expected, rel=1e-4)

    def test_monotone_in_tau_and_level(self):
        k = builtin_kernel("translation", 1.2, base="triangle", center=0.3, halfwidth=0.4)
        taus = [1.0, 2.0, 5.0, 9.0]
        vals = [compute_b_tau(k, t) for t in taus]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        levels = [compute_b_tau(k, 3.0, level=n) for n in range(4)]
        assert all(b >= a - 1e-12 for a, b in zip(levels, levels[1:]))

    def test_budget(self):
        with pytest.raises(ResourceError):
            compute_b_tau(TRANSLATION, 50.0, budget=1000)


class TestKX:
    def test_indicator(self):
        assert compute_K_X(TRANSLATION) == pytest.approx(1.0)

    def test_homogeneity(self):
        assert compute_K_X(builtin_kernel("translation", 1.5, amplitude=-3.0)) == pytest.approx(3.0)

    def test_triangle_on_dyadic_apex(self):
        alpha = 1.5
        k = builtin_kernel("translation", alpha, base="triangle", center=0.5, mixing_width=3.0)
        assert compute_K_X(k) == pytest.approx(3 ** (1 / alpha), rel=1e-12)

    def test_monotone_in_level(self):
        k = builtin_kernel("translation", 1.5, base="triangle", center=0.3, halfwidth=0.5)
        vals = [compute_K_X(k, level=n) for n in range(5)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= 1.0 and vals[-1] > 0.9

    def test_needs_mma(self):
        with pytest.raises(UnsupportedKernelError, match="classify"):
            compute_K_X(PRODUCT)


class TestEta:
    def test_uniform_for_translation(self, rng):
        tau = 10.0
        x = sample_eta_tau(TRANSLATION, tau, compute_b_tau(TRANSLATION, tau), rng, size=10_000)[:, 0]
        res = stats.kstest(x, stats.uniform(-tau, tau + 1).cdf)
        assert res.statistic < stats.kstwo.ppf(0.99, x.size)

    def test_draws_in_support(self, rng):
        k = builtin_kernel("translation", 1.2, base="triangle", center=0.3, halfwidth=0.2)
        x = sample_eta_tau(k, 4.0, compute_b_tau(k, 4.0), rng, size=2000)
        lat = LatticeSpec(1, 2, 4.0)
        t = lat.axis_points()
        sup = np.max(np.maximum(0, 1 - np.abs(x + t[None, :] - 0.3) / 0.2), axis=1)
        assert np.all(sup > 0)

    def test_box_mass_gaussian(self, rng):
        alpha, tau = 1.5, 2.0
        k = builtin_kernel("gaussian_translation", alpha)
        b = compute_b_tau(k, tau, resolution=128)
        x = sample_eta_tau(k, tau, b, rng, size=20_000)[:, 0]
        # analytic mass of [-1, 0.5] by brute-force quadrature of the density
        t = np.arange(0, tau + 1e-12, 0.25)
        s = np.linspace(-1.0, 0.5, 100_001)
        u = s[:, None] + t[None, :]
        dens = np.where((u >= 0) & (u <= 1), stats.norm.pdf(u), 0.0).max(axis=1)
        mass = np.trapezoid(dens, s) / b**alpha
        frac = np.mean((x >= -1.0) & (x <= 0.5))
        assert abs(frac - mass) <= 3 * math.sqrt(mass * (1 - mass) / x.size)

    def test_efficiency_error(self, rng):
        k = builtin_kernel("translation", 1.5, base="triangle", center=0.1, halfwidth=1e-6)
        with pytest.raises(EfficiencyError, match="tighter proposal"):
            sample_eta_tau(k, 50.0, compute_b_tau(k, 50.0), rng)


class TestCondition:
    def test_translation_matches_overlap_oracle(self, rng):
        rep = check_condition(TRANSLATION, [10.0, 40.0], 0.5, 4000, rng)
        for tau, p, se in zip(rep.taus, rep.probabilities, rep.standard_errors):
            assert abs(p - pair_probability_on_lattice(tau)) <= 4 * se
        assert rep.probabilities[1] < 0.4 * rep.probabilities[0]
        assert rep.sufficient and rep.b_slope == pytest.approx(1 / 1.5, abs=0.05)

    def test_oracle_close_to_continuum(self):
        # the continuum overlap (2L-1)/L^2 overstates the lattice value slightly
        for tau in (10.0, 40.0):
            L = tau + 1
            assert 0.85 < pair_probability_on_lattice(tau) / ((2 * L - 1) / L**2) < 1.0

    def test_epsilon_above_one(self, rng):
        rep = check_condition(TRANSLATION, [5.0], 1.5, 1000, rng)
        assert rep.probabilities[0] == 0.0

    def test_se_shrinks(self, rng):
        small = check_condition(TRANSLATION, [10.0], 0.5, 1000, rng).standard_errors[0]
        big = check_condition(TRANSLATION, [10.0], 0.5, 16000, rng).standard_errors[0]
        assert big == pytest.approx(small / 4, rel=0.2)

    def test_preconditions(self, rng):
        with pytest.raises(ConfigError):
            check_condition(TRANSLATION, [5.0], 0.5, 10, rng)
        with pytest.raises(ConfigError):
            check_condition(TRANSLATION, [5.0], 0.0, 1000, rng)


class TestLimitLaw:
    def test_synthetic_frechet_passes(self, rng):
        law = LimitLawSpec(1.5, 1.0)
        x = frechet_quantile(FrechetLaw(1.5, law.scale), rng.random(2000))
        rep = limit_law_test(x, law)
        assert rep.passed and rep.n == 2000
        assert rep.critical_5pct == pytest.approx(stats.kstwo.ppf(0.95, 2000))
        assert law.scale == pytest.approx(stable_tail_constant(1.5) ** (1 / 1.5))

    def test_scaled_draws_fail(self, rng):
        law = LimitLawSpec(1.5, 1.0)
        x = 2 * frechet_quantile(FrechetLaw(1.5, law.scale), rng.random(2000))
        assert not limit_law_test(x, law).passed

    def test_data_errors(self):
        law = LimitLawSpec(1.5, 1.0)
        with pytest.raises(DataError):
            limit_law_test([], law)
        with pytest.raises(DataError):
            limit_law_test(np.r_[np.ones(600), 0.0], law)
        with pytest.raises(DataError):
            limit_law_test(np.ones(100), law)

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            LimitLawSpec(1.5, -1.0)
        with pytest.raises(ConfigError):
            LimitLawSpec(2.5, 1.0)


class TestGrowth:
    def test_exact_power(self):
        taus = np.array([10.0, 20.0, 50.0, 100.0, 200.0])
        fit = growth_exponent_fit(taus, taus**0.7)
        assert abs(fit.exponent - 0.7) < 1e-12

    def test_constant(self):
        fit = growth_exponent_fit([1, 2, 3, 4], [5.0] * 4)
        assert abs(fit.exponent) < 1e-12

    def test_errors(self):
        with pytest.raises(DataError):
            growth_exponent_fit([1, 2, 3], [1, 2, 3])
        with pytest.raises(DataError):
            growth_exponent_fit([1, 2, 3, 4], [1, 2, 0, 3])


def test_maxima_match_exact_moving_sum_simulator():
    """For the indicator kernel on the quarter lattice, X_{k/4} is a moving
    sum of four iid SaS increments of scale 4^(-1/alpha); maxima from the
    series simulator must agree in law with maxima of that exact field."""
    alpha, tau, n = 1.5, 50.0, 2000
    lat = LatticeSpec(1, 2, tau)
    sim = FieldSimulator(TRANSLATION, lat, default_series_config(TRANSLATION, lat))
    rng = make_rng(77)
    ours = np.array([np.max(np.abs(sim.sample(rng))) for _ in range(n)])
    m = lat.per_axis
    inc = sample_sas(alpha, 0.25 ** (1 / alpha), make_rng(78), size=(n, m + 3))
    cs = np.concatenate([np.zeros((n, 1)), np.cumsum(inc, axis=1)], axis=1)
    exact = np.max(np.abs(cs[:, 4:] - cs[:, :-4]), axis=1)
    assert stats.ks_2samp(ours, exact).pvalue > 0.001
