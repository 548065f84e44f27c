"""Exception types raised across the package."""


class EqconvError(Exception):
    """Base class. ``stage`` is filled in by the experiment harness."""

    stage: str | None = None


class SizeMismatch(EqconvError, ValueError):
    pass


class IndexOutOfRange(EqconvError, IndexError):
    pass


class InvalidGroup(EqconvError, ValueError):
    pass


class InvalidAction(EqconvError, ValueError):
    pass


class NonUniformStabilizer(EqconvError):
    """Point stabilizers differ in order (or are not conjugate) across orbits."""

    def __init__(self, message, orbits=()):
        super().__init__(message)
        self.orbits = tuple(orbits)


class DecompositionMismatch(EqconvError, ValueError):
    pass


class NotLeftTranslation(EqconvError, ValueError):
    pass


class ConditionError(EqconvError):
    """A hypothesis of the conversion construction fails."""


class StabilizerNotNested(ConditionError):
    pass


class NotAbsolutelyContinuous(ConditionError):
    pass


class NoInvariantMeasure(ConditionError):
    pass


class NotSymmetricInvariant(EqconvError, ValueError):
    pass


class DivergenceError(EqconvError, FloatingPointError):
    pass


class SizeLimitExceeded(EqconvError, ValueError):
    pass
