"""Exception hierarchy.

Everything numerical derives from ``NumericalFailure`` so the CLI can map it
to exit status 2; configuration problems raise ``ConfigError`` (exit 1).
"""


class MfshError(Exception):
    pass


class ConfigError(MfshError, ValueError):
    pass


class WrongVariant(ConfigError):
    """A Model1-only field was used with Model2 parameters, or vice versa."""


class NumericalFailure(MfshError):
    pass


class NegativeAmplitude(NumericalFailure, ValueError):
    pass


class StressFreeDivergence(NumericalFailure, ZeroDivisionError):
    pass


class OriginSingular(NumericalFailure, ZeroDivisionError):
    pass


class IllConditionedFit(NumericalFailure):
    pass


class WrongRegime(NumericalFailure, ValueError):
    pass


class DenominatorZero(NumericalFailure, ZeroDivisionError):
    pass


class PoleProximity(NumericalFailure, ZeroDivisionError):
    pass


class DerivativeStencilFailure(NumericalFailure):
    pass


class CorrectorDivergence(NumericalFailure):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NoCrossing(NumericalFailure):
    pass


class NoInteriorMax(NumericalFailure):
    pass


class BlowUp(NumericalFailure):
    pass


class CommensurabilityError(NumericalFailure, ValueError):
    pass


class NonlinearContamination(NumericalFailure):
    pass
