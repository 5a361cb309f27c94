from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conex.fit import (OscillatoryWindow, edge_decay, expansion_residual, fit_coefficients,
                       fit_exponent)
from conex.liouville import SectorSpec, oracle_field

T = np.logspace(-3, -1, 60)


def test_pure_power():
    f = fit_exponent(T, 3 * T**4)
    assert f.exponent == pytest.approx(4.0, abs=1e-6)
    assert not f.log_flag
    assert f.r2 == pytest.approx(1.0)
    assert f.n_samples == 60 and f.window == (T[0], T[-1])


def test_log_detected():
    f = fit_exponent(T, T**4 * np.log(1 / T))
    assert f.log_flag
    assert f.exponent == pytest.approx(4.0, abs=1e-3)
    # the plain power law is visibly off here, which is why the log model is needed
    assert abs(f.power_law_exponent - 4.0) > 0.1


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 4.0])
def test_exact_on_monomials(a):
    assert abs(fit_exponent(T, 2.0 * T**a).exponent - a) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.3, 6.0), st.floats(1e-6, 1e6), st.booleans())
def test_scale_invariance(a, scale, with_log):
    y = T**a * (np.log(1 / T) if with_log else 1.0)
    f1, f2 = fit_exponent(T, y), fit_exponent(T, scale * y)
    assert f1.log_flag == f2.log_flag
    assert f1.exponent == pytest.approx(f2.exponent, abs=1e-6)


def test_negative_samples_and_zeros():
    f = fit_exponent(T, -5 * T**2)
    assert f.exponent == pytest.approx(2.0, abs=1e-9)
    y = T**3
    y[::7] = 0.0
    assert fit_exponent(T, y).exponent == pytest.approx(3.0, abs=1e-9)


def test_errors():
    with pytest.raises(OscillatoryWindow, match="oscillatory, refine window"):
        fit_exponent(T, np.sin(1 / T) * T**2)
    with pytest.raises(ValueError):
        fit_exponent(T[:5], T[:5])
    with pytest.raises(ValueError):
        fit_exponent(T, T, window=(1e-3, 1.1e-3))


def test_edge_decay_examples():
    alpha = math.pi / 2
    th = (np.arange(2048) + 0.5) * alpha / 2048
    assert edge_decay(th, np.sin(2 * th) ** 2, alpha).exponent == pytest.approx(2.0, rel=1e-2)
    assert edge_decay(th, np.sin(2 * th) ** 2, alpha, side="right").exponent == pytest.approx(2.0, rel=1e-2)
    assert edge_decay(th, np.full_like(th, 3.0), alpha).exponent == pytest.approx(0.0, abs=1e-12)


@pytest.fixture(scope="module")
def quadrant_oracle():
    spec = SectorSpec(0.5, 1.0, 16, 256)
    r = np.exp(np.linspace(math.log(1e-3), math.log(0.5), 301))
    return oracle_field(spec, r)


def test_expansion_residual_orders(quadrant_oracle):
    f = quadrant_oracle
    win, rwin = (1e-2, 0.3), (1e-2, 1e-1)
    slopes = []
    for keep in ([4.0], [4.0, 6.0], [4.0, 6.0, 8.0]):
        extra = [e for e in (6.0, 8.0, 10.0, 12.0, 14.0, 16.0) if e not in keep]
        c = fit_coefficients(f.r, f.v, keep, win, extra=extra)
        rep = expansion_residual(f.r, f.v, c, max(keep), rwin)
        assert rep.passed
        slopes.append(rep.slope)
    assert slopes[0] >= 5.9 and slopes[1] >= 7.9
    assert slopes[0] <= slopes[1] + 1e-3 <= slopes[2] + 1e-3


def test_expansion_residual_exact_fit(quadrant_oracle):
    f = quadrant_oracle
    c = {4.0: 2 * np.sin(2 * f.theta) ** 2}
    v = np.outer(f.r**4, c[4.0])
    rep = expansion_residual(f.r, v, c, 4.0, (1e-2, 1e-1))
    assert np.max(rep.max_residual) <= 1e-15 * np.max(np.abs(v))


def test_expansion_residual_failure_report(quadrant_oracle):
    f = quadrant_oracle
    rep = expansion_residual(f.r, f.v, {}, 4.0, (1e-2, 1e-1))
    assert not rep.passed
    assert rep.slope == pytest.approx(4.0, abs=0.01)
    assert set(rep.to_dict()) >= {"slope", "order", "eps_min", "passed"}


def test_fitted_leading_coefficient(quadrant_oracle):
    f = quadrant_oracle
    c = fit_coefficients(f.r, f.v, [4.0], (1e-2, 0.3), extra=[6, 8, 10, 12, 14, 16])
    assert np.allclose(c[4.0], 2 * np.sin(2 * f.theta) ** 2, rtol=1e-8, atol=1e-12)
