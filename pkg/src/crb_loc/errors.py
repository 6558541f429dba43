"""Exception hierarchy shared by every module.

Each class carries a short ``code`` used by the command-line front end as a
machine-parsable prefix on its single-line error messages.
"""


class CrbLocError(Exception):
    code = "E_GENERIC"


class DegenerateGeometryError(CrbLocError):
    code = "E_DEGENERATE_GEOMETRY"


class UnsupportedOperationError(CrbLocError):
    code = "E_UNSUPPORTED"


class NoClosedFormError(CrbLocError):
    code = "E_NO_CLOSED_FORM"


class ApproximationDomainError(CrbLocError):
    code = "E_APPROX_DOMAIN"


class UnobservableGeometryError(CrbLocError):
    code = "E_UNOBSERVABLE"


class OutsideSupportError(CrbLocError):
    code = "E_OUTSIDE_SUPPORT"


class QuadratureDomainError(CrbLocError):
    code = "E_QUAD_DOMAIN"


class QuadratureConvergenceError(CrbLocError):
    """Raised when adaptive refinement hits ``max_depth``.

    The best available ``value`` and ``error`` are kept on the exception.
    """

    code = "E_QUAD_CONVERGENCE"

    def __init__(self, message, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


class OptimizationError(CrbLocError):
    """No start of the simplex search converged; ``best`` holds the best iterate."""

    code = "E_OPTIMIZATION"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EnumerationTooLargeError(CrbLocError):
    code = "E_ENUMERATION"


class ScenarioFormatError(CrbLocError):
    code = "E_PARSE"
