import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfsh.errors import NoInteriorMax
from mfsh.growth_field import annulus_test, contours, features, find_cr_max, scan, to_svg
from mfsh.model import ModelParams, mu_existence
from mfsh.stability import GrowthRateField

FIG13 = dict(a=(8.5e-4, 0.002), b=(5.5e-4, 0.003), c=(5.5e-4, 0.0034))


def _p13(tag):
    mu, q = FIG13[tag]
    return ModelParams.model1(mu, q, 1000.0, pr=1.0, c2=2.0)


def test_scan_threads_identical():
    p = _p13("b")
    a = scan(p, resolution=32)
    b = scan(p, resolution=32, threads=3)
    np.testing.assert_array_equal(a.sigma, b.sigma)
    np.testing.assert_array_equal(a.omega, b.omega)


@given(st.floats(-0.2, 0.2), st.floats(1e-3, 0.3), st.floats(0.1, 1e3))
def test_scan_even_in_l(q, dmu, g):
    p = ModelParams.model2(mu_existence(q) + dmu, q, g)
    f = scan(p, (0.0, 0.5, -0.4, 0.4), resolution=(9, 17))
    np.testing.assert_allclose(f.sigma, f.sigma[::-1], rtol=1e-9, atol=1e-14)


def test_fig13a_positive_only_away_from_origin():
    p = _p13("a")
    f = scan(p, resolution=128)
    kk, ll = np.meshgrid(f.k_axis, f.l_axis)
    near = np.hypot(kk, ll) < 0.02
    assert np.all(f.sigma[near] <= 0)
    assert f.sigma.max() > 0


def test_fig13d_positive_near_origin_over_angles():
    p = ModelParams.model1(2.5e-4, 0.00225, 1000.0, pr=1.0, c2=2.0)
    th = np.linspace(0.05, 1.5, 30)
    from mfsh.stability import growth
    s, _ = growth(p, 1e-3 * np.cos(th), 1e-3 * np.sin(th))
    assert 0 < np.mean(s > 0) < 1


def test_subcritical_all_negative():
    p = ModelParams.model2(-0.05, 0.0, 1.0)
    # no stripe exists below onset; the trivial state's growth is negative everywhere
    from mfsh.model import linear_growth_trivial
    K = np.linspace(0, 3, 301)
    assert np.all(linear_growth_trivial(p, K)[0] < 0)


@pytest.mark.parametrize("tag,n", [("b", 2), ("c", 1)])
def test_component_counts(tag, n):
    p = _p13(tag)
    assert features(scan(p, resolution=256), p).n_positive_components == n


def test_contours_closed_or_on_edge():
    p = _p13("b")
    f = scan(p, resolution=128)
    k0, k1, l0, l1 = f.k_axis[0], f.k_axis[-1], f.l_axis[0], f.l_axis[-1]
    for c in contours(f, 0.0):
        closed = np.allclose(c[0], c[-1])
        on_edge = all(np.isclose(pt[0], [k0, k1]).any() or np.isclose(pt[1], [l0, l1]).any()
                      for pt in (c[0], c[-1]))
        assert closed or on_edge


def test_annulus_flags_for_plain_sh():
    for mu, q, expect in ((0.01, -0.05, True), (0.1, 0.125, True), (0.1, -0.1, False), (0.1, 0.05, False)):
        p = ModelParams.model2(mu, q, 0.0)
        f = scan(p, (0.0, 2.2, 0.0, 1.2), resolution=256)
        assert features(f, p).annulus_flag is expect, (mu, q)


def test_annulus_synthetic():
    k = np.linspace(0, 2.2, 221)
    l = np.linspace(0, 1.2, 121)
    kk, ll = np.meshgrid(k, l)
    ring = np.abs(np.hypot(kk - 1.0, ll) - 1.0) < 0.05
    f = GrowthRateField(k, l, np.where(ring, 1.0, -1.0), np.zeros_like(kk))
    assert annulus_test(f, 0.0)
    lobe = ring & (kk > 1.8)
    g = GrowthRateField(k, l, np.where(lobe, 1.0, -1.0), np.zeros_like(kk))
    assert not annulus_test(g, 0.0)


def test_cr_max_location():
    # cross-roll unstable point of the no-slip, g_m = 1000 diagram
    k, l, s, w = find_cr_max(_p13("a"))
    assert 0.02 <= k <= 0.06 and 0.1 <= l <= 0.3
    assert s > 0 and w == 0.0


def test_cr_max_stable_to_multistart_density():
    p = _p13("a")
    a = find_cr_max(p)
    b = find_cr_max(p, n_starts=10)
    assert a[0] == pytest.approx(b[0], abs=1e-6) and a[1] == pytest.approx(b[1], abs=1e-6)


def test_no_interior_max():
    p = ModelParams.model2(0.1, 0.0, 0.1)
    with pytest.raises(NoInteriorMax):
        find_cr_max(p)


def test_fig15d_single_component_holds_max():
    p = ModelParams.model1(0.1, 0.05, 1000.0, pr=1.0, c2=0.0)
    ft = features(scan(p, (0.0, 1.0, 0.0, 1.0), resolution=256), p)
    assert ft.n_positive_components == 1 and ft.global_max[2] > 0


def test_outputs(tmp_path):
    p = _p13("b")
    f = scan(p, resolution=32)
    ft = features(f, p)
    doc = json.loads(json.dumps(ft.to_json_dict()))
    assert doc["n_positive_components"] == ft.n_positive_components
    svg = to_svg(f)
    assert svg.startswith("<svg") and 'stroke="black"' in svg and 'fill="red"' in svg
