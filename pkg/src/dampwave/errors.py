"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`DampWaveError`; argument problems additionally derive from
``ValueError`` so callers may catch either.
"""


class DampWaveError(Exception):
    """Base class for all package errors."""


class CoefficientError(DampWaveError, ValueError):
    """A coefficient description violates one of the standing assumptions."""

    assumption = ""

    def __init__(self, msg):
        if self.assumption:
            msg = f"{msg} (assumption {self.assumption})"
        super().__init__(msg)


class NonPositiveWaveSpeed(CoefficientError):
    assumption = "(A1)"


class NegativeDamping(CoefficientError):
    assumption = "(A2)"


class EmptySupport(CoefficientError):
    assumption = "(A2)"


class NonPositiveGain(CoefficientError):
    assumption = "(A3)"


class ZeroDenominator(DampWaveError, ZeroDivisionError):
    pass


class UnknownPreset(DampWaveError, ValueError):
    pass


class TableNotOnUnitInterval(DampWaveError, ValueError):
    pass


class LengthMismatch(DampWaveError, ValueError):
    pass


class GridTooCoarse(DampWaveError, ValueError):
    pass


class GridMismatch(DampWaveError, ValueError):
    pass


class CflViolation(DampWaveError, ValueError):
    pass


class NonUnitCfl(DampWaveError, ValueError):
    pass


class RequiresConstantSpeed(DampWaveError, ValueError):
    pass


class InstabilityDetected(DampWaveError, FloatingPointError):
    pass


class InvalidExponent(DampWaveError, ValueError):
    pass


class InvalidEpsilon(DampWaveError, ValueError):
    pass


class WindowEmpty(DampWaveError, ValueError):
    pass


class NonpositiveEnergyInWindow(DampWaveError, ValueError):
    pass


class ZeroEnergyStart(DampWaveError, ValueError):
    pass


class ZeroInitialEnergy(DampWaveError, ValueError):
    pass


class EigensolverFailure(DampWaveError, RuntimeError):
    pass


class SingularAtLambda(DampWaveError, ArithmeticError):
    def __init__(self, msg, lam=None):
        super().__init__(msg)
        self.lam = lam
