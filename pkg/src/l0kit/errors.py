"""Exception and warning types raised across l0kit."""


class L0KitError(Exception):
    """Base class for all l0kit errors."""


class NotPositiveDefinite(L0KitError, ValueError):
    """A Cholesky pivot fell below the pivot tolerance."""


class CollinearSupport(NotPositiveDefinite):
    """The Gram matrix of an active column set is numerically singular."""


class SingularDesign(L0KitError, ValueError):
    pass


class InvalidPrior(L0KitError, ValueError):
    pass


class NotMonotone(L0KitError, ValueError):
    pass


class BracketFailure(L0KitError, RuntimeError):
    """The minimizer of a proximal problem sits on the search boundary."""


class RootNotBracketed(L0KitError, RuntimeError):
    pass


class NonMonotonePosteriorMean(L0KitError, RuntimeError):
    """The posterior mean is not strictly increasing on the scanned range."""


class OutOfRange(L0KitError, ValueError):
    pass


class LengthMismatch(L0KitError, ValueError):
    pass


class DegenerateSignal(L0KitError, ValueError):
    pass


class CsvFormatError(L0KitError, ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


class MaxStepsExceeded(ConvergenceWarning):
    pass


class MaxIterationsExceeded(ConvergenceWarning):
    pass
