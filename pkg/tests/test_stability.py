import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from mfsh.errors import OriginSingular
from mfsh.model import ModelParams, mu_existence
from mfsh.stability import (all_roots, build_matrix, char_poly, cubic_roots, eigenvalues, growth,
                            m_coefficients, sigma_max_field, trace_closed_form)

import oracle

POINTS = [
    ("m2", ModelParams.model2(0.1, 0.05, 5.0), 0.07, 0.11),
    ("m2-neg-q", ModelParams.model2(0.3, -0.1, 0.5), 0.2, 0.05),
    ("m1-noslip", ModelParams.model1(0.2, 0.02, 50.0, pr=1.0, c2=2.0), 0.05, 0.3),
    ("m1-stressfree", ModelParams.model1(0.1, -0.05, 1000.0, pr=0.5, c2=0.0), 0.01, 0.02),
]


def _sym(p):
    if p.model == 2:
        return oracle.matrix(2, p.mu, p.q, p.g)
    return oracle.matrix(1, p.mu, p.q, p.g_m, p.pr, p.c2)


@pytest.mark.parametrize("name,p,k,l", POINTS, ids=[x[0] for x in POINTS])
def test_matrix_entries_match_symbolic(name, p, k, l):
    ref = np.array(oracle.numeric_matrix(_sym(p), k, l), dtype=float)
    np.testing.assert_allclose(build_matrix(p, k, l).entries, ref, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("name,p,k,l", POINTS, ids=[x[0] for x in POINTS])
def test_char_poly_matches_symbolic(name, p, k, l):
    J = oracle.numeric_matrix(_sym(p), k, l)
    lam = sp.symbols("lam")
    ref = sp.Poly((lam * sp.eye(J.shape[0]) - J).det(), lam).all_coeffs()[1:]
    ref = [float(c) for c in ref]
    got = char_poly(p, np.array(k), np.array(l))
    np.testing.assert_allclose([float(c) for c in got], ref, rtol=1e-10)


def test_char_poly_keeps_precision_near_origin():
    # det is O(eps^2) while entries are O(beta): the factored form keeps it
    p = ModelParams.model2(0.1, 0.05, 5.0)
    eps = 1e-5
    J = oracle.numeric_matrix(_sym(p), eps * 0.6, eps * 0.8)
    ref = float(J.det())
    got = float(char_poly(p, np.array(eps * 0.6), np.array(eps * 0.8))[1])
    assert got == pytest.approx(ref, rel=1e-8)


def test_origin_excluded():
    p = ModelParams.model2(0.1, 0.0, 1.0)
    with pytest.raises(OriginSingular):
        build_matrix(p, 0.0, 0.0)
    s, w = growth(p, np.array([0.0]), np.array([0.0]))
    assert s[0] == 0.0 and w[0] == 0.0


@pytest.mark.parametrize("name,p,k,l", POINTS, ids=[x[0] for x in POINTS])
def test_trace_closed_form(name, p, k, l):
    assert trace_closed_form(p, k, l) == pytest.approx(np.trace(build_matrix(p, k, l).entries))


def test_m_coefficients_model1_only_m7():
    assert m_coefficients(ModelParams.model2(0.1, 0.0, 1.0), 0.1, 0.1).m7 is None
    p = ModelParams.model1(0.1, 0.0, 1.0, pr=2.0, c2=2.0)
    assert m_coefficients(p, 0.1, 0.2).m7 == pytest.approx(-2.0 * (0.05 + 2.0))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_cubic_roots_against_lapack(a2, a1, a0):
    got = np.sort_complex(np.asarray(cubic_roots(np.array(a2), np.array(a1), np.array(a0))).ravel())
    ref = np.sort_complex(np.roots([1.0, a2, a1, a0]))
    scale = max(1.0, abs(a2), abs(a1), abs(a0))
    # compare through the polynomial: residual at the computed roots
    res = np.abs(np.polyval([1.0, a2, a1, a0], got))
    assert np.all(res <= 1e-8 * scale ** 3)
    assert np.max(got.real) == pytest.approx(np.max(ref.real), abs=1e-5 * scale)


@pytest.mark.parametrize("name,p,k,l", POINTS, ids=[x[0] for x in POINTS])
def test_eigenvalues_match_numpy(name, p, k, l):
    m = build_matrix(p, k, l)
    ref = np.linalg.eigvals(m.entries)
    res = eigenvalues(m)
    assert res.sigma_max == pytest.approx(np.max(ref.real), rel=1e-9, abs=1e-13)
    assert np.sort(all_roots(p, np.array(k), np.array(l)).real) == pytest.approx(np.sort(ref.real), rel=1e-9, abs=1e-13)


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.floats(-0.2, 0.2), st.floats(0.0, 0.5),
       st.floats(0.0, 100.0))
def test_growth_even_symmetry(k, l, q, dmu, g):
    p = ModelParams.model2(mu_existence(q) + dmu + 1e-3, q, g)
    s, _ = growth(p, np.array([k, k, -k, -k]), np.array([l, -l, l, -l]))
    np.testing.assert_allclose(s, s[0], rtol=1e-9, atol=1e-14)


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.floats(-0.2, 0.2), st.floats(0.0, 0.5),
       st.sampled_from([0.0, 2.0]))
def test_growth_even_symmetry_model1(k, l, q, dmu, c2):
    p = ModelParams.model1(mu_existence(q) + dmu + 1e-3, q, 100.0, pr=1.0, c2=c2)
    s, _ = growth(p, np.array([k, -k]), np.array([l, -l]))
    np.testing.assert_allclose(s, s[0], rtol=1e-9, atol=1e-14)


def test_field_layout_and_mirror(tmp_path):
    p = ModelParams.model2(0.1, 0.05, 5.0)
    f = sigma_max_field(p, (0.0, 0.3), (-0.2, 0.2), 7, 9)
    assert f.sigma.shape == (9, 7)
    np.testing.assert_allclose(f.sigma, f.sigma[::-1], rtol=1e-12)
    f.to_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "k,l,sigma_max,omega" and len(lines) == 64
    assert set(f.to_json_dict()) == {"k_axis", "l_axis", "sigma", "omega"}
