import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasfield.errors import ResourceError
from sasfield.quadrature import cells_1d, log_normal_density, product_grid


def test_cells_cover_interval():
    mids, lens = cells_1d(-1.3, 2.1, 0.25, offset=0.1, cuts=(0.0, 1.0))
    assert lens.sum() == pytest.approx(3.4, abs=1e-12)
    edges = np.concatenate([[-1.3], -1.3 + np.cumsum(lens)])
    for c in (0.0, 1.0, 0.1, 0.35):
        assert np.min(np.abs(edges - c)) < 1e-12


def test_empty_interval():
    mids, lens = cells_1d(1.0, 1.0, 0.5)
    assert mids.size == 0 and lens.size == 0


@settings(max_examples=100, deadline=None)
@given(
    lo=st.floats(-5, 5),
    width=st.floats(0.01, 5),
    h=st.floats(0.05, 1.0),
    a=st.floats(-5, 5),
    b=st.floats(0.01, 3),
)
def test_exact_for_aligned_indicator(lo, width, h, a, b):
    """Integral of 1_[a, a+b] is exact when a and a+b are cut points."""
    hi = lo + width
    mids, lens = cells_1d(lo, hi, h, offset=a % h, cuts=(a, a + b))
    val = np.sum(((mids >= a) & (mids <= a + b)) * lens)
    exact = max(0.0, min(hi, a + b) - max(lo, a))
    assert val == pytest.approx(exact, abs=1e-9)


def test_product_grid_volume():
    cells = [cells_1d(0, 1, 0.1), cells_1d(0, 2, 0.5), cells_1d(-1, 1, 1.0)]
    pts, vol = product_grid(cells, 10_000)
    assert pts.shape == (10 * 4 * 2, 3)
    assert vol.sum() == pytest.approx(4.0)


def test_product_grid_budget():
    with pytest.raises(ResourceError, match="budget"):
        product_grid([cells_1d(0, 10, 0.01)] * 2, 1000)


def test_log_normal_density():
    x = np.linspace(-3, 3, 7)
    assert np.allclose(np.exp(log_normal_density(x)), np.exp(-x**2 / 2) / np.sqrt(2 * np.pi))
