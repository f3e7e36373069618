"""Exception hierarchy."""

import numpy as np


class DtphError(Exception):
    """Base class for all errors raised by dtph."""


class InvalidMatrix(DtphError, ValueError):
    pass


class DimensionError(DtphError, ValueError):
    pass


class NumericalFailure(DtphError, ArithmeticError):
    pass


class SingularMatrix(DtphError, np.linalg.LinAlgError):
    def __init__(self, msg, cond=np.inf):
        super().__init__(f"{msg} (condition estimate {cond:.3e})")
        self.cond = cond


class IrregularPencil(DtphError, ValueError):
    pass


class IndexTooHigh(DtphError, ValueError):
    pass


class InsufficientInput(DtphError, ValueError):
    def __init__(self, msg, nu):
        super().__init__(msg)
        self.nu = nu


class InconsistentInitialState(DtphError, ValueError):
    pass


class InvalidWeight(DtphError, ValueError):
    pass


class SingularFeedthrough(DtphError, ValueError):
    pass


class ResolventViolation(DtphError, ValueError):
    pass


class PoleProximity(DtphError, ValueError):
    def __init__(self, msg, distance):
        super().__init__(f"{msg} (smallest singular value {distance:.3e})")
        self.distance = distance


class KernelInclusionError(DtphError, ValueError):
    """ker(I + D) is not contained in ker(XB) and ker(C^H)."""


class TimeDomainMismatch(DtphError, ValueError):
    pass
