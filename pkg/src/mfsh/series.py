"""Small-(k, l) expansion of the stability determinant.

(k^2 + l^2) det J = A k^4 + B k^2 l^2 + C l^4 + D k^6 + E k^4 l^2 + ...

:func:`det_series` evaluates the closed forms; :func:`numeric_series`
recovers the same numbers by a least-squares fit of the exact determinant on
a polar stencil, which is what :func:`validate_series` compares against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedFit
from .model import Model, ModelParams, stripe_beta
from .stability import char_poly

NAMES = ("a", "b", "c", "d", "e")


@dataclass(frozen=True)
class DetSeriesCoeffs:
    a: float
    b: float
    c: float
    d: float
    e: float
    model: Model

    def as_array(self):
        return np.array([self.a, self.b, self.c, self.d, self.e])

    def as_dict(self):
        return {n: float(getattr(self, n)) for n in NAMES}


def _model2_split(params: ModelParams):
    """Model-2 coefficients split as (g-free part, coefficient of g)."""
    beta = stripe_beta(params).beta
    q = params.q
    K2 = (1.0 + q) ** 2
    qq = q * (2.0 + q)
    sh = 16.0 * q * q * K2 * (2.0 + q) ** 2
    a = (12.0 * beta * (3.0 * K2 - 1.0) - sh, 0.0)
    b = (-24.0 * beta * (1.0 - 2.0 * K2) - sh,
         4.0 * K2 * beta * (3.0 * beta - 4.0 * q * K2 * (2.0 + q)))
    c = (12.0 * beta * qq, 12.0 * beta * beta * K2)
    d = (6.0 * beta + 4.0 + 4.0 * K2 * (K2 + 2.0), 0.0)
    e = (12.0 + 8.0 * K2 + 18.0 * beta - 4.0 * K2 * K2,
         4.0 * params.gamma ** 2 * K2 * beta * (4.0 * K2 * K2 - 3.0 * beta - 4.0 * K2)
         - 4.0 * beta * K2 * (K2 + 1.0))
    return dict(a=a, b=b, c=c, d=d, e=e)


def det_series(params: ModelParams) -> DetSeriesCoeffs:
    """Closed-form A..E.

    Model 2 uses det J2 (stable when positive).  Model 1 uses det J1 (stable
    when negative); its coefficients are -Pr c^2 times the model-2 ones with
    g_m taking the place of g Pr c^2, so they stay finite at c = 0, plus the
    O(k^2+l^2) part of M7 acting on the g-free quartic.
    """
    split = _model2_split(params)
    if params.model is Model.TWO:
        g = params.g
        vals = {n: x0 + g * x1 for n, (x0, x1) in split.items()}
        return DetSeriesCoeffs(model=Model.TWO, **vals)
    s = params.pr * params.c2
    vals = {n: -s * x0 - params.g_m * x1 for n, (x0, x1) in split.items()}
    a2, b2_free = split["a"][0], split["b"][0]
    vals["d"] -= params.pr * a2
    vals["e"] -= params.pr * (a2 + b2_free)
    return DetSeriesCoeffs(model=Model.ONE, **vals)


def printed_e1(params: ModelParams) -> float:
    """E1 exactly as it is usually quoted, for comparison only.

    The quoted form drops the factor Pr on the term coming from M7, so it is
    correct only at Pr = 1; :func:`det_series` keeps the factor.
    """
    split = _model2_split(params)
    beta = stripe_beta(params).beta
    q = params.q
    e2 = split["e"][0] + params.g_m / (params.pr * params.c2) * split["e"][1]
    return (-params.pr * params.c2 * e2 + beta * (-48.0 - 84.0 * q * q - 168.0 * q)
            + 32.0 * q * q * (q + 1.0) ** 2 * (q + 2.0) ** 2)


def _scaled_det(params, k, l):
    """(k^2 + l^2) det J, exact."""
    coeffs = char_poly(params, k, l)
    det = coeffs[-1] if params.model is Model.TWO else -coeffs[-1]
    return (k * k + l * l) * det


# monomials k^(2i) l^(2j) with i + j = n; one order per stencil radius
_ORDERS = (2, 3, 4, 5)
STEP_SIZES = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


def numeric_series(params: ModelParams, step_sizes=STEP_SIZES, n_angles=11,
                   max_cond=1e10):
    """Fit (k^2+l^2) det J on a polar stencil; returns (coeffs, cond).

    The quartic and sextic monomials are fitted together with the octic and
    tenth-order ones, which absorb the truncation error (a least-squares
    form of Richardson extrapolation over the radii).
    """
    radii = np.asarray(step_sizes, dtype=float)
    if len(np.unique(radii)) < len(_ORDERS):
        raise IllConditionedFit(f"need {len(_ORDERS)} distinct stencil radii")
    theta = np.linspace(0.0, 0.5 * np.pi, n_angles)
    rr, tt = np.meshgrid(radii, theta, indexing="ij")
    k = (rr * np.cos(tt)).ravel()
    l = (rr * np.sin(tt)).ravel()
    r = rr.ravel()
    f = _scaled_det(params, k, l)
    cols, labels = [], []
    for n in _ORDERS:
        for i in range(n, -1, -1):
            j = n - i
            # scale each column by r^(2n) so all columns are O(1)
            cols.append((k / r) ** (2 * i) * (l / r) ** (2 * j))
            labels.append((n, i, j))
    X = np.column_stack(cols)
    w = np.array([r ** (2 * n) for (n, _, _) in labels]).T
    X = X * w
    # normalize rows by r^4 to balance radii
    X /= (r ** 4)[:, None]
    y = f / r ** 4
    colnorm = np.linalg.norm(X, axis=0)
    Xs = X / colnorm
    cond = np.linalg.cond(Xs)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditionedFit(f"stencil condition number {cond:.3g} exceeds {max_cond:.3g}")
    sol, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    sol /= colnorm
    lookup = {lab: v for lab, v in zip(labels, sol)}
    vals = dict(a=lookup[(2, 2, 0)], b=lookup[(2, 1, 1)], c=lookup[(2, 0, 2)],
                d=lookup[(3, 3, 0)], e=lookup[(3, 2, 1)])
    return DetSeriesCoeffs(model=params.model, **vals), cond


def mismatch(closed: DetSeriesCoeffs, fitted: DetSeriesCoeffs, floor=1e-6):
    """Per-coefficient relative mismatch.

    A coefficient that vanishes identically has no scale of its own, so the
    denominator is floored at ``floor`` times the largest coefficient of the
    same order (A..C quartic, D..E sextic).
    """
    x, y = closed.as_array(), fitted.as_array()
    quart = max(np.max(np.abs(x[:3])), 1e-300)
    sext = max(np.max(np.abs(x[3:])), 1e-300)
    scale = np.array([quart] * 3 + [sext] * 2)
    denom = np.maximum(np.abs(x), floor * scale)
    return np.abs(x - y) / denom


def validate_series(params: ModelParams, step_sizes=STEP_SIZES) -> float:
    """Worst relative mismatch between closed-form and fitted A..E."""
    fitted, _ = numeric_series(params, step_sizes)
    return float(np.max(mismatch(det_series(params), fitted)))
