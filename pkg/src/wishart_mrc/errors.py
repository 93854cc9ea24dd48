"""Exception hierarchy shared by every module in the package."""


class WishartMRCError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WishartMRCError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(WishartMRCError, ValueError):
    """Matrix has the wrong shape or is not Hermitian."""


class DefinitenessError(WishartMRCError, ValueError):
    """Matrix expected to be positive (semi)definite is not."""


class DegenerateSpectrumError(WishartMRCError, ValueError):
    """Coincident eigenvalues encountered in strict mode."""


class ContractError(WishartMRCError, ValueError):
    """Operation called with parameters outside its supported case."""


class ModelValidityError(WishartMRCError, ValueError):
    """Array correlation model produced an invalid correlation matrix."""


class ConditioningError(WishartMRCError, ArithmeticError):
    """A closed form lost too much precision to be trusted.

    ``params`` carries the offending parameter set so callers (and the
    CLI) can echo it.
    """

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = dict(params or {})

    def __str__(self):
        base = super().__str__()
        if not self.params:
            return base
        detail = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{base} [{detail}]"


class QuadratureError(ConditioningError):
    """Adaptive quadrature failed to converge."""


class ConfigError(WishartMRCError, ValueError):
    """Malformed sweep configuration document or command line."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)
