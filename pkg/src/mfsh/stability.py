"""Stability matrices of the stripe solution and their eigenvalues.

A perturbation with vorticity wavevector (k, l) couples the stripe modes
(1+q+k, l) and (-1-q+k, l) to the vorticity mode (k, l).  Model 1 gives a
3x3 Jacobian, model 2 a 2x2 one after eliminating the algebraic vorticity.

The literal matrices are available through :func:`build_matrix`.  The
eigenvalue routines work from characteristic-polynomial coefficients that
are assembled in a cancellation-free form: the diagonal entries are written
as ``-3 beta + d`` with ``d = e^2 - X^2`` factored as ``(e - X)(e + X)``, so
the determinant (which is O(k^2 + l^2) while the entries are O(beta)) keeps
full relative precision near the origin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OriginSingular
from .model import Model, ModelParams, detuning, stripe_beta


@dataclass(frozen=True)
class Wavevector:
    k: float
    l: float


@dataclass(frozen=True)
class MCoefficients:
    m1: object
    m2: object
    m3: object
    m4: object
    m5: object
    m6: object
    m7: object = None


@dataclass(frozen=True)
class StabilityMatrix:
    entries: np.ndarray
    wavevector: Wavevector
    model: Model
    coeffs: tuple  # monic characteristic polynomial, highest power dropped
    trace: float
    det: float


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    sigma_max: float
    omega_at_max: float


def _check_origin(k, l):
    r2 = np.square(k) + np.square(l)
    if np.any(r2 == 0.0):
        raise OriginSingular("(k, l) = (0, 0) is excluded from matrix assembly")
    return r2


def _parts(params: ModelParams, k, l):
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    r2 = _check_origin(k, l)
    beta = stripe_beta(params).beta
    K = 1.0 + params.q
    e = detuning(params.q)
    s1 = 2.0 * k * K + r2          # (K+k)^2 + l^2 - K^2
    s4 = -2.0 * k * K + r2         # (-K+k)^2 + l^2 - K^2
    d1 = s1 * (2.0 * e - s1)
    d4 = s4 * (2.0 * e - s4)
    filt = np.exp(-params.gamma ** 2 * r2)
    return dict(k=k, l=l, r2=r2, beta=beta, rb=np.sqrt(beta), K=K, e=e,
                s1=s1, s4=s4, d1=d1, d4=d4, filt=filt)


def m_coefficients(params: ModelParams, k, l) -> MCoefficients:
    """The abbreviations M1..M7 at wavevector (k, l), evaluated literally."""
    p = _parts(params, k, l)
    k, l, r2, beta, rb, K = p["k"], p["l"], p["r2"], p["beta"], p["rb"], p["K"]
    m1 = params.mu - (1.0 - ((K + k) ** 2 + l ** 2)) ** 2 - 6.0 * beta
    m2 = -3.0 * beta * np.ones_like(r2)
    m3 = -l * K * rb / r2
    m4 = params.mu - (1.0 - ((-K + k) ** 2 + l ** 2)) ** 2 - 6.0 * beta
    m5 = p["filt"] * l * K * rb * (2.0 * k * K + r2)
    m6 = p["filt"] * l * K * rb * (2.0 * k * K - r2)
    m7 = None
    if params.model is Model.ONE:
        m7 = -params.pr * (r2 + params.c2)
    return MCoefficients(m1, m2, m3, m4, m5, m6, m7)


def char_poly(params: ModelParams, k, l):
    """Monic characteristic-polynomial coefficients, leading 1 dropped.

    Model 2: (a1, a0) of lambda^2 + a1 lambda + a0.
    Model 1: (a2, a1, a0) of lambda^3 + a2 lambda^2 + a1 lambda + a0.
    Vectorized over k and l.
    """
    p = _parts(params, k, l)
    beta, K, l, r2 = p["beta"], p["K"], p["l"], p["r2"]
    d1, d4, s1, s4, filt = p["d1"], p["d4"], p["s1"], p["s4"], p["filt"]
    # M1 M4 - M2^2
    m12 = -3.0 * beta * (d1 + d4) + d1 * d4
    w = filt * K * K * l * l * beta        # F K^2 l^2 beta
    # (s4 d1 + s1 d4) / r2, with s1 s4 / r2 split to stay finite
    cross = (r2 - 4.0 * p["k"] ** 2 * K * K / r2) * (4.0 * p["e"] - 2.0 * r2)
    if params.model is Model.TWO:
        g = params.g
        tr = d1 + d4 - 6.0 * beta - 2.0 * g * w
        det = m12 + 12.0 * g * w * beta - g * w * cross
        return -tr, det
    gm = params.g_m
    m7 = -params.pr * (r2 + params.c2)
    tr = d1 + d4 - 6.0 * beta + m7
    a1 = m12 + m7 * (d1 + d4 - 6.0 * beta) + 2.0 * gm * w
    det = m7 * m12 - 12.0 * gm * w * beta + gm * w * cross
    return -tr, a1, -det


def build_matrix(params: ModelParams, k: float, l: float) -> StabilityMatrix:
    m = m_coefficients(params, k, l)
    if params.model is Model.TWO:
        g = params.g
        entries = np.array([
            [m.m1 + g * m.m3 * m.m5, m.m2 + g * m.m3 * m.m6],
            [m.m2 - g * m.m3 * m.m5, m.m4 - g * m.m3 * m.m6],
        ], dtype=float)
    else:
        gm = params.g_m
        entries = np.array([
            [m.m1, m.m2, m.m3],
            [m.m2, m.m4, -m.m3],
            [gm * m.m5, gm * m.m6, m.m7],
        ], dtype=float)
    coeffs = tuple(float(c) for c in char_poly(params, k, l))
    n = len(coeffs)
    trace = -coeffs[0]
    det = coeffs[-1] * (-1) ** n
    return StabilityMatrix(entries, Wavevector(float(k), float(l)), params.model,
                           coeffs, trace, det)


# -- polynomial roots -------------------------------------------------------

def _quadratic(b1, b0):
    """Roots of x^2 + b1 x + b0, cancellation-free, as complex arrays."""
    b1 = np.asarray(b1, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    half = -0.5 * b1
    disc = half * half - b0
    real = disc >= 0.0
    sq = np.sqrt(np.abs(disc))
    big = half + np.where(half >= 0.0, sq, -sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.where(big != 0.0, b0 / big, 0.0)
    r1 = np.where(real, big, half) + 1j * np.where(real, 0.0, sq)
    r2 = np.where(real, small, half) - 1j * np.where(real, 0.0, sq)
    return r1, r2


def _polyval3(a2, a1, a0, x):
    return ((x + a2) * x + a1) * x + a0


def _newton3(a2, a1, a0, x, iters=2):
    for _ in range(iters):
        f = _polyval3(a2, a1, a0, x)
        df = (3.0 * x + 2.0 * a2) * x + a1
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / df, 0.0)
        trial = x - step
        better = np.abs(_polyval3(a2, a1, a0, trial)) < np.abs(f)
        x = np.where(better & np.isfinite(trial), trial, x)
    return x


DEGENERATE_DISC = 1e-13


def cubic_roots(a2, a1, a0):
    """All roots of x^3 + a2 x^2 + a1 x + a0 with real coefficients.

    One real root is found by the trigonometric (three real roots) or
    Cardano (one real root) formula and Newton-polished; the remaining
    quadratic factor is deflated in whichever form avoids cancellation.
    Where the discriminant is numerically zero the companion matrix is
    handed to LAPACK instead.  Returns an array of shape (..., 3).
    """
    a2, a1, a0 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a2, a1, a0)))
    shape = a2.shape
    a2, a1, a0 = (np.ravel(a) for a in (a2, a1, a0))
    shift = a2 / 3.0
    p = a1 - a2 * shift
    r = shift * (2.0 * shift * shift - a1) + a0  # 2a2^3/27 - a2 a1/3 + a0
    disc = (0.5 * r) ** 2 + (p / 3.0) ** 3
    scale = np.maximum.reduce([np.abs(a2) ** 3, np.abs(a1) ** 1.5, np.abs(a0), np.full(a2.shape, 1e-300)])

    with np.errstate(divide="ignore", invalid="ignore"):
        # one real root
        sq = np.sqrt(np.abs(disc))
        u = np.cbrt(-0.5 * r - np.where(r >= 0.0, sq, -sq))
        t_one = np.where(u != 0.0, u - p / (3.0 * u), 0.0)
        # three real roots: take the one of largest modulus
        m = np.sqrt(np.maximum(-p / 3.0, 0.0))
        arg = np.where(m > 0, -0.5 * r / np.where(m > 0, m, 1.0) ** 3, 0.0)
        phi = np.arccos(np.clip(arg, -1.0, 1.0))
        cand = np.stack([2.0 * m * np.cos((phi - 2.0 * np.pi * j) / 3.0) - shift for j in range(3)], axis=-1)
        pick = np.argmax(np.abs(cand), axis=-1)
        x_three = np.take_along_axis(cand, pick[..., None], axis=-1)[..., 0]
    x = np.where(disc > 0.0, t_one - shift, x_three)
    x = _newton3(a2, a1, a0, x)

    with np.errstate(divide="ignore", invalid="ignore"):
        dominant = np.abs(x) ** 3 >= np.abs(a0)
        safe_x = np.where(x != 0.0, x, 1.0)
        b0_a = -a0 / safe_x
        b1_a = (b0_a - a1) / safe_x
        b1_b = a2 + x
        b0_b = a1 + x * b1_b
    b1 = np.where(dominant & (x != 0.0), b1_a, b1_b)
    b0 = np.where(dominant & (x != 0.0), b0_a, b0_b)
    z1, z2 = _quadratic(b1, b0)
    z1 = _newton3(a2, a1, a0, z1)
    z2 = _newton3(a2, a1, a0, z2)
    roots = np.stack([x + 0j, z1, z2], axis=-1)

    degenerate = np.abs(disc) <= DEGENERATE_DISC * np.maximum((0.5 * r) ** 2, np.abs(p / 3.0) ** 3)
    degenerate &= scale > 1e-300
    if np.any(degenerate):
        idx = np.nonzero(degenerate)
        c2, c1, c0 = a2[idx][..., None], a1[idx][..., None], a0[idx][..., None]
        comp = np.zeros(idx[0].shape + (3, 3))
        comp[..., 0, :] = np.stack([-a2[idx], -a1[idx], -a0[idx]], axis=-1)
        comp[..., 1, 0] = 1.0
        comp[..., 2, 1] = 1.0
        qr = _newton3(c2, c1, c0, np.linalg.eigvals(comp).astype(complex))
        # keep whichever root set has the smaller backward error
        better = (_backward_error(c2, c1, c0, qr).max(axis=-1)
                  < _backward_error(c2, c1, c0, roots[idx]).max(axis=-1))
        sub = roots[idx]
        sub[better] = qr[better]
        roots[idx] = sub
    return roots.reshape(shape + (3,))


def _backward_error(a2, a1, a0, z):
    az = np.abs(z)
    denom = az ** 3 + np.abs(a2) * az ** 2 + np.abs(a1) * az + np.abs(a0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, np.abs(_polyval3(a2, a1, a0, z)) / denom, 0.0)


def roots_from_coeffs(coeffs):
    """Roots of the monic polynomial with the given trailing coefficients,
    sorted by decreasing real part, ties by decreasing |imag|."""
    if len(coeffs) == 2:
        z1, z2 = _quadratic(*coeffs)
        roots = np.stack([z1, z2], axis=-1)
    elif len(coeffs) == 3:
        roots = cubic_roots(*coeffs)
    else:
        raise ValueError("only 2x2 and 3x3 systems are supported")
    order = np.lexsort((-np.abs(roots.imag), -roots.real), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def _coeffs_from_entries(a):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    tr = np.trace(a)
    det = np.linalg.det(a)
    if n == 2:
        return (-tr, det)
    if n == 3:
        minors = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
                  + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
                  + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        return (-tr, minors, -det)
    raise ValueError("only 2x2 and 3x3 matrices are supported")


def eigenvalues(matrix) -> EigenResult:
    """Eigenvalues of a StabilityMatrix or a plain 2x2/3x3 array."""
    if isinstance(matrix, StabilityMatrix):
        coeffs = matrix.coeffs
    else:
        coeffs = _coeffs_from_entries(matrix)
    roots = roots_from_coeffs(coeffs)
    top = roots[0]
    return EigenResult(roots, float(top.real), float(abs(top.imag)))


def det_and_trace(matrix):
    if isinstance(matrix, StabilityMatrix):
        return matrix.det, matrix.trace
    a = np.asarray(matrix, dtype=float)
    return float(np.linalg.det(a)), float(np.trace(a))


def trace_closed_form(params: ModelParams, k, l):
    """Tr(J) written out as a polynomial in k and l."""
    beta = stripe_beta(params).beta
    K2 = (1.0 + params.q) ** 2
    r2 = k * k + l * l
    if params.model is Model.TWO:
        filt = np.exp(-params.gamma ** 2 * r2)
        return (-6.0 * beta + (4.0 - 12.0 * K2) * k * k
                + (4.0 - 4.0 * K2 - 2.0 * beta * params.g * K2 * filt) * l * l
                - 2.0 * r2 * r2)
    pr = params.pr
    return (-6.0 * beta - pr * params.c2 + (4.0 - pr - 12.0 * K2) * k * k
            + (4.0 - pr - 4.0 * K2) * l * l - 2.0 * r2 * r2)


def growth(params: ModelParams, k, l):
    """Vectorized (sigma_max, omega_at_max) over arrays of k and l.

    Points at the origin get the neutral translation-mode value 0.
    """
    k, l = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(l, dtype=float))
    sigma = np.zeros(k.shape)
    omega = np.zeros(k.shape)
    nz = (k != 0.0) | (l != 0.0)
    if np.any(nz):
        roots = roots_from_coeffs(char_poly(params, k[nz], l[nz]))
        sigma[nz] = roots[..., 0].real
        omega[nz] = np.abs(roots[..., 0].imag)
    return sigma, omega


def all_roots(params: ModelParams, k, l):
    """Sorted eigenvalues at (k, l), vectorized; shape (..., n)."""
    return roots_from_coeffs(char_poly(params, k, l))


@dataclass
class GrowthRateField:
    k_axis: np.ndarray
    l_axis: np.ndarray
    sigma: np.ndarray   # shape (len(l_axis), len(k_axis))
    omega: np.ndarray

    def to_csv(self, path):
        kk, ll = np.meshgrid(self.k_axis, self.l_axis)
        rows = np.column_stack([kk.ravel(), ll.ravel(), self.sigma.ravel(), self.omega.ravel()])
        with open(path, "w") as fh:
            fh.write("k,l,sigma_max,omega\n")
            for row in rows:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def to_json_dict(self):
        return {
            "k_axis": [float(v) for v in self.k_axis],
            "l_axis": [float(v) for v in self.l_axis],
            "sigma": [[float(v) for v in row] for row in self.sigma],
            "omega": [[float(v) for v in row] for row in self.omega],
        }


def sigma_max_field(params: ModelParams, k_range, l_range, n_k, n_l) -> GrowthRateField:
    """sigma_max and its frequency on a regular (k, l) grid.

    Only l >= 0 is computed; rows with l < 0 are mirrored (the spectrum is
    even in l).
    """
    k_axis = np.linspace(k_range[0], k_range[1], n_k)
    l_axis = np.linspace(l_range[0], l_range[1], n_l)
    labs = np.abs(l_axis)
    uniq, inverse = np.unique(labs, return_inverse=True)
    kk, ll = np.meshgrid(k_axis, uniq)
    s, w = growth(params, kk, ll)
    return GrowthRateField(k_axis, l_axis, s[inverse], w[inverse])
