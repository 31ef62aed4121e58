import json
import math

import numpy as np
import pytest

from mfsh.classifiers import InstabilityKind as K, eckhaus_mu, zigzag_mu
from mfsh.errors import ConfigError, CorrectorDivergence, NoCrossing
from mfsh.model import ModelParams
from mfsh.series import det_series
from mfsh.tracer import (HALF_PI, BoundaryCurve, Plane, condition_residual, find_crossing,
                         indicator, n_aux, newton, polar_limit, seed_on_line, trace_both,
                         trace_boundary)


def test_plane_round_trip():
    tpl = ModelParams.model2(1.0, 0.0, 1.0)
    pl = Plane("g-qs", 0.1)
    p = pl.params(tpl, *pl.from_display(200.0, 0.3))
    assert p.g == pytest.approx(200.0) and p.mu == 0.1 and p.q == pytest.approx(0.3 * math.sqrt(0.1))
    assert pl.to_display(*pl.from_display(200.0, 0.3)) == pytest.approx((200.0, 0.3))
    assert Plane().labels == ("q", "mu")
    with pytest.raises(ConfigError):
        Plane("g-qs")
    with pytest.raises(ConfigError):
        Plane("mu-q")


@pytest.mark.parametrize("q,g", [(0.05, 5.0), (-0.08, 0.5), (0.2, 50.0)])
def test_polar_limit_matches_series(q, g):
    # small root of the 2x2 problem: lambda ~ det / tr with tr -> -6 beta
    p = ModelParams.model2(eckhaus_mu(q) * 1.3 + 0.01, q, g)
    c = det_series(p)
    th = np.linspace(0.0, HALF_PI, 7)
    cs, sn = np.cos(th), np.sin(th)
    ref = -(c.a * cs ** 4 + c.b * cs ** 2 * sn ** 2 + c.c * sn ** 4) / (6 * p.beta)
    s, w = polar_limit(p, th)
    np.testing.assert_allclose(s, ref, rtol=1e-6, atol=1e-9 * np.max(np.abs(ref)))
    assert np.all(w == 0)


def test_residual_arity():
    p = ModelParams.model2(0.1, 0.05, 5.0)
    assert n_aux(K.SVI_I, p) == 1 and n_aux(K.CROSS_ROLL, p) == 2 and n_aux(K.ECKHAUS, p) == 0
    assert n_aux(K.SVI_I, ModelParams.model1(0.1, 0.05, 10.0, c2=0.0)) == 0
    with pytest.raises(ConfigError):
        condition_residual(K.SVI_I, p, ())
    with pytest.raises(ConfigError):
        n_aux(K.ANNULUS, p)


def test_indicator_signs():
    q = 0.1
    stable = ModelParams.model2(eckhaus_mu(q) * 1.5, q, 0.5)
    unstable = ModelParams.model2(eckhaus_mu(q) * 0.8, q, 0.5)
    assert indicator(K.ECKHAUS, stable) < 0 < indicator(K.ECKHAUS, unstable)
    assert indicator(K.EXISTENCE, stable) < 0


def test_newton_quadratic():
    x, fn, it = newton(lambda x: np.array([x[0] ** 2 - 2.0, x[1] - x[0]]), np.array([1.0, 0.0]))
    assert x == pytest.approx([math.sqrt(2), math.sqrt(2)], rel=1e-12)


def test_newton_diverges():
    with pytest.raises(CorrectorDivergence):
        newton(lambda x: np.array([x[0] ** 2 + 1.0]), np.array([0.3]))


def test_eckhaus_trace_matches_closed_form():
    tpl = ModelParams.model2(1.0, 0.0, 5.0)
    c = trace_boundary(K.ECKHAUS, tpl, (0.1, eckhaus_mu(0.1) * 1.05), bounds=(0.05, 0.2, 0, 1),
                       max_steps=400)
    pts = np.array(c.points)
    assert len(pts) > 5
    ref = np.array([eckhaus_mu(q) for q in pts[:, 0]])
    np.testing.assert_allclose(pts[:, 1], ref, rtol=1e-6)
    assert c.stop_reason == "left the plane bounds"


def test_trace_both_covers_both_sides():
    tpl = ModelParams.model2(1.0, 0.0, 5.0)
    c = trace_both(K.ECKHAUS, tpl, (0.1, eckhaus_mu(0.1)), bounds=(0.05, 0.15, 0, 1), max_steps=40)
    q = np.array(c.points)[:, 0]
    assert q.min() < 0.06 and q.max() > 0.14
    assert np.all(np.diff(q) > 0)
    assert ";" in c.stop_reason


def test_zigzag_eckhaus_crossing_polished():
    tpl = ModelParams.model2(1.0, 0.0, 50.0)
    kw = dict(bounds=(-0.05, -0.002, 0, 1), max_steps=60)
    z = trace_both(K.ZIGZAG, tpl, (-0.02, zigzag_mu(-0.02, 50.0)), **kw)
    e = trace_both(K.ECKHAUS, tpl, (-0.02, eckhaus_mu(-0.02)), **kw)
    x = find_crossing(z, e)
    assert x.polished
    q, mu = x.point
    assert zigzag_mu(q, 50.0) == pytest.approx(eckhaus_mu(q), rel=1e-8)
    assert mu == pytest.approx(eckhaus_mu(q), rel=1e-8)
    assert find_crossing(z, z).degenerate


def test_no_crossing():
    tpl = ModelParams.model2(1.0, 0.0, 0.5)
    kw = dict(bounds=(-0.1, -0.05, 0, 1), max_steps=30)
    z = trace_both(K.ZIGZAG, tpl, (-0.07, zigzag_mu(-0.07, 0.5)), **kw)
    e = trace_both(K.ECKHAUS, tpl, (-0.07, eckhaus_mu(-0.07)), **kw)
    with pytest.raises(NoCrossing):
        find_crossing(z, e, touch_tol=0.0)


def test_seed_on_line_svi():
    tpl = ModelParams.model2(1.0, 0.0, 0.5)
    u, v, aux = seed_on_line(K.SVI_I, tpl, Plane(), 0.2, 0.3, 1.0)
    assert u == 0.2 and 0.3 < v < 1.0
    assert 0 < aux[0] < HALF_PI
    assert np.max(np.abs(condition_residual(K.SVI_I, tpl.with_(q=u, mu=v), aux))) < 1e-6


def test_curve_serialization():
    tpl = ModelParams.model2(1.0, 0.0, 5.0)
    c = trace_boundary(K.ECKHAUS, tpl, (0.1, eckhaus_mu(0.1)), bounds=(0.09, 0.11, 0, 1), max_steps=5)
    lines = c.to_csv().splitlines()
    assert lines[0] == "kind,q,mu,k,l,theta,freq"
    assert len(lines) == len(c) + 1
    doc = json.loads(c.to_json())
    assert doc["kind"] == "eckhaus" and len(doc["points"]) == len(c)
    assert isinstance(c, BoundaryCurve)


def _probe(kind, p, aux):
    """Signed growth along the direction the boundary condition refers to."""
    from mfsh.stability import growth
    from mfsh.tracer import ring_radius
    e = 0.5 * ring_radius(p)
    if kind is K.ECKHAUS:
        return growth(p, np.array([e]), np.array([0.0]))[0][0]
    if kind is K.ZIGZAG:
        return growth(p, np.array([0.0]), np.array([e]))[0][0]
    if kind is K.SVI_I:
        th = aux[0]
        return growth(p, np.array([e * np.cos(th)]), np.array([e * np.sin(th)]))[0][0]
    # l-curvature at the on-axis k_max, Richardson over two step sizes
    k = aux[0]
    h = 0.02 * k
    s = growth(p, np.full(3, k), np.array([0.0, h, h / 2]))[0]
    return (4 * (s[2] - s[0]) / (h / 2) ** 2 - (s[1] - s[0]) / h ** 2) / 3


@pytest.mark.parametrize("g,kind,u", [(5.0, K.SVI_I, 0.05), (5.0, K.ECKHAUS, 0.1),
                                      (0.5, K.SVI_II, 0.05), (50.0, K.ZIGZAG, -0.05)])
def test_traced_points_flip_sign(g, kind, u):
    from mfsh.model import mu_existence
    tpl = ModelParams.model2(1.0, 0.0, g)
    lo = mu_existence(u) * (1.05 if kind is K.SVI_II else 1 + 1e-9)
    hi = eckhaus_mu(u) if kind is K.SVI_II else 1.0
    su, sv, a = seed_on_line(kind, tpl, Plane(), u, lo, hi, n=80)
    b = (-0.1, -0.02, 0, 1) if u < 0 else (0.02, 0.1, 0, 1)
    c = trace_both(kind, tpl, (su, sv), aux=a, bounds=b, max_steps=200)
    assert len(c) > 5
    for i in range(0, len(c), max(1, len(c) // 8)):
        q, mu = c.points[i]
        below = _probe(kind, tpl.with_(q=q, mu=mu - 1e-6), c.aux[i])
        above = _probe(kind, tpl.with_(q=q, mu=mu + 1e-6), c.aux[i])
        assert below > 0 > above, (q, mu, below, above)


@pytest.mark.parametrize("g", [10.0, 1e3, 1e5])
def test_svi1_family_transition_scales_with_inverse_g(g):
    # the curve runs from the 12 q^2 regime to the 8 q regime; the crossover,
    # taken where it meets their geometric mean, sits at q ~ 1/g
    from mfsh.model import mu_existence
    tpl = ModelParams.model2(1.0, 0.0, g)
    u = 1.0 / g
    su, sv, a = seed_on_line(K.SVI_I, tpl, Plane(), u, mu_existence(u) * (1 + 1e-9), 100 * u, n=80)
    c = trace_both(K.SVI_I, tpl, (su, sv), aux=a, bounds=(0.05 / g, min(20 / g, 0.3), 0, 1),
                   max_steps=600, h0=1e-2 / g, h_max=1e-1 / g, h_min=1e-6 / g)
    P = np.array(c.points)
    P = P[np.argsort(P[:, 0])]
    r = P[:, 1] / np.sqrt(96 * P[:, 0] ** 3)
    j = np.flatnonzero(np.diff(np.sign(r - 1)))
    assert len(j) >= 1
    qt = P[j, 0] * g
    assert np.all((qt > 1 / 3) & (qt < 3)), qt
