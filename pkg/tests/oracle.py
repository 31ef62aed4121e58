"""Independent symbolic reference for the stability matrices.

Entries are rebuilt from the literal abbreviations with sympy, so the
numeric code (which assembles the characteristic polynomial in a factored,
cancellation-free form) can be checked against plain determinants and a
plain Taylor expansion.
"""
import sympy as sp

k, l = sp.symbols("k l", real=True)


def matrix(model, mu, q, coupling, pr=None, c2=None, gamma=sp.Rational(5, 2)):
    mu, q, coupling = sp.nsimplify(mu), sp.nsimplify(q), sp.nsimplify(coupling)
    K = 1 + q
    beta = (mu - (1 - K ** 2) ** 2) / 3
    rb = sp.sqrt(beta)
    r2 = k ** 2 + l ** 2
    filt = sp.exp(-gamma ** 2 * r2)
    m1 = mu - (1 - ((K + k) ** 2 + l ** 2)) ** 2 - 6 * beta
    m2 = -3 * beta
    m3 = -l * K * rb / r2
    m4 = mu - (1 - ((-K + k) ** 2 + l ** 2)) ** 2 - 6 * beta
    m5 = filt * l * K * rb * (2 * k * K + r2)
    m6 = filt * l * K * rb * (2 * k * K - r2)
    if model == 2:
        g = coupling
        return sp.Matrix([[m1 + g * m3 * m5, m2 + g * m3 * m6],
                          [m2 - g * m3 * m5, m4 - g * m3 * m6]])
    m7 = -sp.nsimplify(pr) * (r2 + sp.nsimplify(c2))
    return sp.Matrix([[m1, m2, m3], [m2, m4, -m3], [coupling * m5, coupling * m6, m7]])


def det_series(model, mu, q, coupling, pr=None, c2=None):
    """(A, B, C, D, E) of (k^2 + l^2) det J up to sixth order."""
    J = matrix(model, mu, q, coupling, pr, c2)
    t = sp.symbols("t", positive=True)
    expr = sp.simplify((k ** 2 + l ** 2) * J.det())
    ser = sp.series(expr.subs({k: t * k, l: t * l}), t, 0, 7).removeO()
    poly = sp.Poly(sp.expand(ser), t, k, l)
    get = lambda i, j: float(poly.coeff_monomial(t ** (i + j) * k ** i * l ** j))
    return get(4, 0), get(2, 2), get(0, 4), get(6, 0), get(4, 2)


def numeric_matrix(J, kv, lv):
    return J.subs({k: sp.nsimplify(kv), l: sp.nsimplify(lv)}).evalf(30)
