import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rk4_variance
from seasonalvol.correlation import (
    corr_term_structure,
    deterministic_variance,
    instantaneous_correlation,
    loading_integral,
)
from seasonalvol.model import ModelConfig, VolFactor
from seasonalvol.seasonality import SeasonalitySpec, theta_eval

EARLY = (0.0, 0.4)
LATE = (0.5, 0.95)


def section(curve, lo, hi):
    mask = (curve.grid > lo) & (curve.grid <= hi)
    return curve.difference[mask]


def test_variance_fixed_point():
    f = VolFactor(1.0, 1.3, 0.0, 0.0, 0.07, SeasonalitySpec.constant(0.07))
    assert np.allclose(deterministic_variance(f, np.linspace(0, 3, 7)), 0.07, rtol=1e-13)
    assert deterministic_variance(f, 0.0) == pytest.approx(0.07)


def test_variance_matches_rk4(table2):
    f = table2[1].factors[0]
    ts, vs = rk4_variance(lambda t: theta_eval(f.seasonality, t), f.kappa, f.v0, 2.0)
    ours = deterministic_variance(f, ts[::500])
    assert np.abs(ours - vs[::500]).max() <= 1e-9


def test_variance_requires_deterministic():
    f = VolFactor(1.0, 1.0, 0.3, 0.0, 0.1, SeasonalitySpec.constant(0.1))
    with pytest.raises(ValueError, match="sigma"):
        deterministic_variance(f, 1.0)


def test_loading_integral_degenerate_rate():
    f = VolFactor(1.0, 0.8, 0.0, 0.0, 0.1, SeasonalitySpec("sinusoid", 0.25, 0.15, 7 / 12))
    a = loading_integral(f, 1.5, 0.8)
    b = loading_integral(f, 1.5, 0.8 + 2e-6)
    assert a == pytest.approx(b, rel=1e-5)


def test_equal_lambdas_give_one(table2):
    m = table2[1]
    same = m.with_factors([f.with_(lam=1.0) for f in m.factors])
    assert instantaneous_correlation(same, 0.3, 1.0, 2.0, 0.1, 0.04) == pytest.approx(1.0, abs=1e-12)


def test_single_variance_gives_one(table2):
    assert instantaneous_correlation(table2[1], 0.3, 1.0, 2.0, 0.1, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_both_zero_rejected(table2):
    with pytest.raises(ValueError, match="undefined"):
        instantaneous_correlation(table2[1], 0.3, 1.0, 2.0, 0.0, 0.0)


def test_swap_symmetry(table2):
    m = table2[1]
    f1, f2 = m.factors
    swapped = m.with_factors([f2, f1])
    a = instantaneous_correlation(m, 0.0, 1.0, 2.0, 0.10, 0.04)
    b = instantaneous_correlation(swapped, 0.0, 1.0, 2.0, 0.04, 0.10)
    assert a == pytest.approx(b, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0.0, 1.0), v1=st.floats(1e-4, 1.0), v2=st.floats(1e-4, 1.0), c=st.floats(0.01, 100))
def test_bounds_and_scale_invariance(table2, t, v1, v2, c):
    m = table2[2]
    r = instantaneous_correlation(m, t, 1.0, 2.0, v1, v2)
    assert 0 < r <= 1 + 1e-12
    assert instantaneous_correlation(m, t, 1.0, 2.0, c * v1, c * v2) == pytest.approx(r, abs=1e-12)


def test_no_seasonality_zero_difference(table2):
    m = table2[1]
    flat = m.with_factors([f.with_(seasonality=SeasonalitySpec("sinusoid", f.seasonality.a, 0.0, 0.0))
                           for f in m.factors])
    assert np.all(corr_term_structure(flat, 1.0, 2.0).difference == 0)


def test_default_grid(table2):
    curve = corr_term_structure(table2[1], 1.0, 2.0)
    assert curve.grid.size == 601 and curve.grid[-1] == 1.0
    assert np.all(np.abs(curve.values) <= 1 + 1e-12)


def test_case1_low_then_high(table2):
    curve = corr_term_structure(table2[1], 1.0, 2.0)
    assert np.all(section(curve, *EARLY) < 0)
    assert np.all(section(curve, *LATE) > 0)


def test_case2_opposite(table2):
    curve = corr_term_structure(table2[2], 1.0, 2.0)
    assert np.all(section(curve, *EARLY) > 0)
    assert np.all(section(curve, *LATE) < 0)


def test_requires_deterministic(table4):
    with pytest.raises(ValueError, match="sigma"):
        corr_term_structure(table4.model, 1.0, 2.0)


def test_requires_two_factors():
    m = ModelConfig.flat([VolFactor(1.0, 1.0, 0.0, 0.0, 0.1, SeasonalitySpec.constant(0.1))])
    with pytest.raises(ValueError, match="two-factor"):
        instantaneous_correlation(m, 0.1, 1.0, 2.0, 0.1, 0.1)
