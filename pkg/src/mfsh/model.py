"""Model parameters, the exact stripe solution and the Fourier-space operators.

Two generalized Swift-Hohenberg models are covered.  In model 1 the vertical
vorticity obeys its own damped equation (parameters ``g_m``, ``pr``, ``c2``);
in model 2 it is slaved to the nonlinear forcing (parameter ``g``).  Both
share ``mu``, ``q``, the filter width ``gamma`` and the projection cutoff
``alpha``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, NegativeAmplitude, StressFreeDivergence, WrongVariant

DEFAULT_GAMMA = 2.5
DEFAULT_ALPHA = 2.5


class Model(enum.IntEnum):
    ONE = 1
    TWO = 2


@dataclass(frozen=True)
class ModelParams:
    """Parameters for either model.

    Model-specific fields default to ``None``; setting a field that belongs
    to the other model raises :class:`WrongVariant`.  ``c2`` is the square of
    the boundary parameter c (0 stress-free, 2 no-slip).
    """

    model: Model
    mu: float
    q: float
    g: float | None = None
    g_m: float | None = None
    pr: float | None = None
    c2: float | None = None
    gamma: float = DEFAULT_GAMMA
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if self.model is Model.TWO:
            for name in ("g_m", "pr", "c2"):
                if getattr(self, name) is not None:
                    raise WrongVariant(f"{name} is a model-1 parameter")
            if self.g is None:
                raise ConfigError("model 2 requires g")
        else:
            if self.g is not None:
                raise WrongVariant("g is a model-2 parameter; use g_m, pr, c2")
            missing = [n for n in ("g_m", "pr", "c2") if getattr(self, n) is None]
            if missing:
                raise ConfigError(f"model 1 requires {', '.join(missing)}")
            if not self.pr > 0:
                raise ConfigError("pr must be positive")
            if self.c2 < 0:
                raise ConfigError("c2 must be non-negative")

    @classmethod
    def model1(cls, mu, q, g_m, pr=1.0, c2=2.0, **kw) -> ModelParams:
        return cls(Model.ONE, mu, q, g_m=g_m, pr=pr, c2=c2, **kw)

    @classmethod
    def model2(cls, mu, q, g, **kw) -> ModelParams:
        return cls(Model.TWO, mu, q, g=g, **kw)

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)

    @property
    def c(self) -> float:
        if self.model is not Model.ONE:
            raise WrongVariant("c is a model-1 parameter")
        return math.sqrt(self.c2)

    @property
    def coupling(self) -> float:
        """``g`` for model 2, ``g_m`` for model 1."""
        return self.g if self.model is Model.TWO else self.g_m

    def with_coupling(self, value) -> ModelParams:
        if self.model is Model.TWO:
            return replace(self, g=value)
        return replace(self, g_m=value)

    @property
    def beta(self) -> float:
        return stripe_beta(self).beta


@dataclass(frozen=True)
class StripeSolution:
    beta: float
    wavenumber: float

    @property
    def amplitude(self) -> float:
        """Peak of psi0 = 2 sqrt(beta) cos((1+q) x)."""
        return 2.0 * math.sqrt(self.beta)


def detuning(q):
    """1 - (1+q)^2, written to avoid cancellation at small q."""
    return -q * (2.0 + q)


def mu_existence(q):
    return detuning(q) ** 2


def stripe_beta(params: ModelParams) -> StripeSolution:
    """Squared amplitude of the exact single-mode stripe."""
    e2 = mu_existence(params.q)
    beta = (params.mu - e2) / 3.0
    if beta < 0.0:
        # rounding on the existence curve itself
        if -beta <= 1e-14 * max(abs(params.mu), e2, 1e-300):
            beta = 0.0
        else:
            raise NegativeAmplitude(
                f"mu={params.mu!r} is below the existence boundary {e2!r} at q={params.q!r}")
    return StripeSolution(beta=beta, wavenumber=1.0 + params.q)


def filter_factor(params: ModelParams, K):
    return np.exp(-params.gamma ** 2 * np.square(K))


def projection_keeps(params: ModelParams, K):
    return np.abs(K) <= params.alpha


def linear_growth_trivial(params: ModelParams, K):
    """Growth rates of the trivial state: (sigma1, sigma2).

    sigma2 is None for model 2, which has no vorticity dynamics.
    """
    K2 = np.square(K)
    sigma1 = params.mu - (1.0 - K2) ** 2
    sigma2 = None
    if params.model is Model.ONE:
        sigma2 = -params.pr * (K2 + params.c2)
    return sigma1, sigma2


def equivalent_g(params: ModelParams) -> float:
    """Model-2 coupling equivalent to a model-1 parameter set, g_m / (Pr c^2)."""
    if params.model is not Model.ONE:
        raise WrongVariant("equivalent_g needs model-1 parameters")
    if params.c2 == 0.0:
        raise StressFreeDivergence("g = g_m/(Pr c^2) diverges for stress-free boundaries")
    return params.g_m / (params.pr * params.c2)


def exact_window(alpha=DEFAULT_ALPHA):
    """Open/closed q-interval on which the one-mode stripe is exact.

    The fundamental 1+q must survive the projection and the third harmonic
    3(1+q) must not: alpha/3 - 1 < q <= alpha - 1.
    """
    return alpha / 3.0 - 1.0, alpha - 1.0


def stripe_is_exact(params: ModelParams) -> bool:
    lo, hi = exact_window(params.alpha)
    if params.alpha != DEFAULT_ALPHA:
        warnings.warn(
            f"alpha={params.alpha} moves the exact-stripe window to ({lo:.4g}, {hi:.4g}]",
            stacklevel=2)
    return lo < params.q <= hi
