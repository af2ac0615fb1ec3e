"""Exception hierarchy shared by every module of the package."""


class CocycleLabError(Exception):
    """Base class for all errors raised by cocyclelab."""


class InvalidMatrix(CocycleLabError, ValueError):
    """A matrix is not square, not finite, or otherwise malformed."""


class SingularMatrix(CocycleLabError, ValueError):
    pass


class InvalidOrder(CocycleLabError, ValueError):
    """Exterior power order outside ``1..d``."""


class DimensionMismatch(CocycleLabError, ValueError):
    pass


class WindowExhausted(CocycleLabError):
    """A symbolic point was iterated past the edge of its finite window.

    Re-sample at a higher word level or shorten the horizon.
    """


class WordTooLong(CocycleLabError, ValueError):
    pass


class NotEnumerable(CocycleLabError):
    """Periodic points of the system cannot be listed as a finite set."""


class SingularGenerator(CocycleLabError, ValueError):
    pass


class SingularConjugacy(CocycleLabError, ValueError):
    pass


class NotPeriodic(CocycleLabError, ValueError):
    pass


class EmptySample(CocycleLabError, ValueError):
    pass


class SplittingUnresolved(CocycleLabError):
    """Estimated invariant bundles are too close to each other to be separated."""


class InvalidSpectrumShape(CocycleLabError, ValueError):
    pass


class InvalidParameter(CocycleLabError, ValueError):
    pass
