import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfsh.errors import ConfigError, NegativeAmplitude, StressFreeDivergence, WrongVariant
from mfsh.model import (Model, ModelParams, equivalent_g, exact_window, linear_growth_trivial,
                        mu_existence, projection_keeps, filter_factor, stripe_beta,
                        stripe_is_exact)


def test_beta_value():
    p = ModelParams.model2(0.1, 0.05, 5.0)
    e = 1 - 1.05 ** 2
    assert p.beta == pytest.approx((0.1 - e * e) / 3, rel=1e-15)
    assert stripe_beta(p).wavenumber == 1.05
    assert stripe_beta(p).amplitude == pytest.approx(2 * math.sqrt(p.beta))


def test_below_existence_raises():
    with pytest.raises(NegativeAmplitude):
        stripe_beta(ModelParams.model2(1e-4, 0.1, 1.0))


def test_on_existence_curve_is_zero():
    q = 0.03
    assert stripe_beta(ModelParams.model2(mu_existence(q), q, 1.0)).beta == 0.0


def test_variant_fields():
    with pytest.raises(WrongVariant):
        ModelParams(Model.TWO, 0.1, 0.0, g=1.0, g_m=3.0)
    with pytest.raises(WrongVariant):
        ModelParams(Model.ONE, 0.1, 0.0, g=1.0, g_m=3.0, pr=1.0, c2=2.0)
    with pytest.raises(ConfigError):
        ModelParams(Model.ONE, 0.1, 0.0, g_m=3.0)
    with pytest.raises(WrongVariant):
        ModelParams.model2(0.1, 0.0, 1.0).c
    with pytest.raises(ConfigError):
        ModelParams.model1(0.1, 0.0, 10.0, pr=0.0)


def test_coupling_accessors():
    p1 = ModelParams.model1(0.1, 0.0, 10.0)
    p2 = ModelParams.model2(0.1, 0.0, 3.0)
    assert p1.coupling == 10.0 and p1.with_coupling(20.0).g_m == 20.0
    assert p2.coupling == 3.0 and p2.with_coupling(4.0).g == 4.0
    assert p1.c == pytest.approx(math.sqrt(2))


def test_equivalent_g():
    assert equivalent_g(ModelParams.model1(0.1, 0.0, 10.0, pr=2.0, c2=2.0)) == 2.5
    with pytest.raises(StressFreeDivergence):
        equivalent_g(ModelParams.model1(0.1, 0.0, 10.0, c2=0.0))
    with pytest.raises(WrongVariant):
        equivalent_g(ModelParams.model2(0.1, 0.0, 1.0))


def test_trivial_growth():
    p = ModelParams.model1(0.1, 0.0, 10.0, pr=2.0, c2=2.0)
    s1, s2 = linear_growth_trivial(p, np.array([0.0, 1.0]))
    np.testing.assert_allclose(s1, [0.1 - 1.0, 0.1])
    np.testing.assert_allclose(s2, [-4.0, -6.0])
    assert linear_growth_trivial(ModelParams.model2(0.1, 0.0, 1.0), 1.0)[1] is None


def test_projection_and_filter():
    p = ModelParams.model2(0.1, 0.0, 1.0)
    np.testing.assert_array_equal(projection_keeps(p, np.array([2.5, 2.51])), [True, False])
    assert filter_factor(p, 0.0) == 1.0
    assert filter_factor(p, 1.0) == pytest.approx(math.exp(-6.25))


def test_exact_window():
    lo, hi = exact_window()
    assert lo == pytest.approx(2.5 / 3 - 1) and hi == 1.5
    assert stripe_is_exact(ModelParams.model2(0.1, 0.0, 1.0))
    assert not stripe_is_exact(ModelParams.model2(0.1, -0.2, 1.0))
    with pytest.warns(UserWarning):
        stripe_is_exact(ModelParams.model2(0.1, 0.0, 1.0, alpha=3.5))


@given(st.floats(-0.3, 0.3), st.floats(0.0, 1.0), st.floats(1e-6, 1.0))
def test_beta_monotone_in_mu(q, mu, dmu):
    mu = mu + mu_existence(q)
    b0 = ModelParams.model2(mu, q, 1.0).beta
    b1 = ModelParams.model2(mu + dmu, q, 1.0).beta
    assert b1 > b0 >= 0.0
