"""Closed-form instability boundaries and coefficient-level tests.

Conventions: the SVI tests take series coefficients in the model-1 sign
convention, where the quadratic A k^4 + B k^2 l^2 + C l^4 is negative for
stable stripes.  Model-2 coefficients (stable when positive) are negated on
entry.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DenominatorZero, PoleProximity, WrongRegime
from .model import Model, ModelParams, mu_existence
from .series import DetSeriesCoeffs
from .stability import char_poly

# Coupling above which the SVI boundary leaves the origin with the Eckhaus
# curvature (limit of g_eck as q -> 0).
G_CRITICAL = 0.75

HOPF_RTOL = 1e-10
POLE_TOL = 1e-6


class InstabilityKind(enum.Enum):
    EXISTENCE = "existence"
    ECKHAUS = "eckhaus"
    ZIGZAG = "zigzag"
    SVI_I = "svi1"
    SVI_II = "svi2"
    OSV = "osv"
    CROSS_ROLL = "cr"
    ANNULUS = "annulus"

    @classmethod
    def parse(cls, text):
        aliases = {"svi": cls.SVI_I, "skewvaricosei": cls.SVI_I, "skewvaricoseii": cls.SVI_II,
                   "oscskewvaricose": cls.OSV, "crossroll": cls.CROSS_ROLL,
                   "annulusmode": cls.ANNULUS}
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        if key in aliases:
            return aliases[key]
        for kind in cls:
            if kind.value == key or kind.name.lower().replace("_", "") == key:
                return kind
        raise ConfigError(f"unknown instability kind {text!r}")


@dataclass(frozen=True)
class CharPolyCubic:
    """lambda^3 + a2 lambda^2 + a1 lambda + a0."""
    a2: float
    a1: float
    a0: float

    @classmethod
    def at(cls, params: ModelParams, k, l) -> CharPolyCubic:
        if params.model is not Model.ONE:
            raise ConfigError("the cubic characteristic polynomial belongs to model 1")
        return cls(*(float(c) for c in char_poly(params, k, l)))

    @property
    def hopf_residual(self):
        return self.a0 - self.a2 * self.a1


class Svi1Result(NamedTuple):
    unstable: bool
    k2_over_l2: float


class Svi2Result(NamedTuple):
    unstable: bool
    k_sq: float


class OsvResult(NamedTuple):
    onset: bool
    hopf_frequency: float


def eckhaus_mu(q):
    den = 3.0 * q * q + 6.0 * q + 2.0
    if abs(den) < 1e-12:
        raise DenominatorZero(f"Eckhaus formula is singular at q={q!r}")
    return q * q * (7 * q ** 4 + 42 * q ** 3 + 90 * q ** 2 + 80 * q + 24) / den


def zigzag_mu(q, g):
    if g <= 0:
        raise ConfigError("zigzag boundary needs g > 0")
    return mu_existence(q) - 3.0 * q * (2.0 + q) / (g * (1.0 + q) ** 2)


def zigzag_eckhaus_crossing_g(q):
    """Coupling g at which the zigzag and Eckhaus curves meet at wavenumber q < 0.

    From mu_Eck - mu_Existence = 4 q^2 (1+q)^2 (2+q)^2 / (3(1+q)^2 - 1).
    """
    K2 = (1.0 + q) ** 2
    return -3.0 * (3.0 * K2 - 1.0) / (4.0 * q * K2 * K2 * (2.0 + q))


def zigzag_eckhaus_crossing_q(g, bracket=(-0.5, -1e-12)):
    """Inverse of :func:`zigzag_eckhaus_crossing_g` on q < 0."""
    from scipy.optimize import brentq

    return brentq(lambda q: zigzag_eckhaus_crossing_g(q) - g, *bracket, xtol=1e-15)


def _stable_negative(coeffs: DetSeriesCoeffs):
    sign = -1.0 if coeffs.model is Model.TWO else 1.0
    return tuple(sign * v for v in coeffs.as_array())


def svi_case1_test(coeffs: DetSeriesCoeffs) -> Svi1Result:
    """SVI test on the Eckhaus- and zigzag-stable side (A < 0, C < 0)."""
    A, B, C, _, _ = _stable_negative(coeffs)
    if A >= 0 or C >= 0:
        raise WrongRegime("case I needs A < 0 and C < 0")
    unstable = B * B - 4.0 * A * C > 0 and B > 0
    return Svi1Result(bool(unstable), math.sqrt(C / A))


def svi_case1_ratio_alt(coeffs: DetSeriesCoeffs):
    """k^2/l^2 from (B - 2C)/(B - 2A); equals sqrt(C/A) on B^2 = 4AC."""
    A, B, C, _, _ = _stable_negative(coeffs)
    return (B - 2.0 * C) / (B - 2.0 * A)


def svi_case2_test(coeffs: DetSeriesCoeffs) -> Svi2Result:
    """SVI test just past the Eckhaus boundary (A > 0 small, D < 0)."""
    A, B, _, D, E = _stable_negative(coeffs)
    if A <= 0 or D >= 0:
        raise WrongRegime("case II needs A > 0 and D < 0")
    threshold = (D + E) / (2.0 * D) * A
    return Svi2Result(bool(B > threshold), -A / (2.0 * D))


def g_eck(q):
    K2 = (1.0 + q) ** 2
    return 0.375 * (3.0 * K2 - 1.0) / K2 ** 3


def svi_quadratic(params: ModelParams):
    """Leading-order (F1, F2, F3) of the SVI condition F1 g^2 + F2 g + F3 = 0.

    Valid for small mu and q.  For model 1 the same numbers multiply
    g_m^2, g_m Pr c^2 and (Pr c^2)^2.
    """
    mu, q = params.mu, params.q
    f1 = (16384 * q ** 6 - 8192 * mu * q ** 4 + 1024 * mu ** 2 * q ** 2
          - 256 * mu ** 3 * q + 16 * mu ** 4) / 9.0
    f2 = (-24576 * q ** 5 + 8192 * mu * q ** 3 - 512 * mu ** 2 * q - 64 * mu ** 3) / 3.0
    f3 = 9216 * q ** 4 - 1536 * mu * q ** 2 + 64 * mu ** 2
    return f1, f2, f3


def svi_quadratic_value(params: ModelParams):
    f1, f2, f3 = svi_quadratic(params)
    if params.model is Model.TWO:
        g = params.g
        return f1 * g * g + f2 * g + f3
    s = params.pr * params.c2
    return f1 * params.g_m ** 2 + f2 * params.g_m * s + f3 * s * s


REGIMES = ("small_qg", "large_qg", "subcritical")


def svi_asymptote(q, g, regime):
    if regime == "small_qg":
        den = 9.0 - 24.0 * q * g
        if abs(den) < POLE_TOL:
            raise PoleProximity("9 - 24 q g is too close to zero")
        return 12.0 * q * q * (9.0 - 8.0 * q * g) / den
    if regime == "large_qg":
        den = 2.0 * q * g - 3.0
        if abs(den) < POLE_TOL:
            raise PoleProximity("2 q g - 3 is too close to zero")
        return 8.0 * q * (2.0 * q * g + 3.0) / den
    if regime == "subcritical":
        return 4.0 * (2.0 / G_CRITICAL * g + 1.0) * q * q
    raise ConfigError(f"regime must be one of {REGIMES}, got {regime!r}")


def stress_free_svi_mu(q):
    """Leading-order stress-free SVI boundary, mu = 8q."""
    return 8.0 * q


def stress_free_svi_mu_exact(q):
    """Stress-free SVI boundary without the small-q truncation.

    Where the g_m-part of B1 changes sign: 3 beta = 4 q (1+q)^2 (2+q), i.e.
    mu = q(2+q) [q(2+q) + 4(1+q)^2] = 8q + 24q^2 + O(q^3).
    """
    qq = q * (2.0 + q)
    return qq * (qq + 4.0 * (1.0 + q) ** 2)


def osv_test(poly: CharPolyCubic, rtol=HOPF_RTOL) -> OsvResult:
    a2, a1, a0 = poly.a2, poly.a1, poly.a0
    res = a0 - a2 * a1
    scale = max(1.0, abs(a0), abs(a2 * a1))
    onset = abs(res) < rtol * scale and a1 > 0
    return OsvResult(bool(onset), math.sqrt(a1) if a1 > 0 else 0.0)


OSV_SLOPE = (-3.0 + math.sqrt(5.0)) / 3.0


def osv_asymptote(q, g_m):
    return OSV_SLOPE * q * g_m


def osv_slope_from_quadratic():
    """mu / (q g_m) from the small-q^2/mu quadratic in x = g_m q / mu.

    (1024/9) x^2 + 512 x + 256 = 0; the root that reproduces the boundary is
    the one of larger magnitude.
    """
    roots = np.roots([1024.0 / 9.0, 512.0, 256.0])
    x = roots[np.argmax(np.abs(roots))].real
    return 1.0 / x
