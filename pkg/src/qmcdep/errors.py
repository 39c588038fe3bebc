"""Exception types raised across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class DimensionMismatch(ValueError):
    pass


class BaseMismatch(ValueError):
    pass


class SingularMatrix(ValueError):
    pass


class DigitBudgetExceeded(ValueError):
    """A requested digit depth exceeds the stored precision."""


class InvalidInput(ValueError):
    pass


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


class MissingPermutation(KeyError):
    def __init__(self, base):
        super().__init__(base)
        self.base = base

    def __str__(self):
        return f"no permutation supplied for base {self.base}"


class CycleError(ValueError):
    pass
