"""Exception types shared across the package."""


class ToeplitzLabError(Exception):
    """Base class for all errors raised by toeplitz_lab."""


class DomainError(ToeplitzLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class BlockSizeMismatch(ToeplitzLabError, ValueError):
    pass


class AliasingError(ToeplitzLabError, ValueError):
    """Sample grid too small for the requested band."""


class SingularSymbolError(ToeplitzLabError, ArithmeticError):
    """The symbol (or its determinant) vanishes on the evaluation grid."""


class GridTooCoarseError(ToeplitzLabError, ArithmeticError):
    """Phase unwrapping saw a jump that the grid cannot resolve."""


class NoCanonicalFactorizationError(ToeplitzLabError, ArithmeticError):
    pass


class FactorSupportError(ToeplitzLabError, ValueError):
    """A Wiener-Hopf factor has coefficients on the wrong side of zero."""


class ProductMismatchError(ToeplitzLabError, ValueError):
    pass


class CutoffTooSmallError(ToeplitzLabError, ArithmeticError):
    """Doubling the truncation size changed the result."""


class NumericalInstabilityError(ToeplitzLabError, ArithmeticError):
    pass


class ConfigError(ToeplitzLabError, ValueError):
    pass
