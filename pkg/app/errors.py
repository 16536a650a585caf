# app/errors.py
from typing import Optional

class MomentPricingError(Exception):
    """Base class for every error raised by the pricing library"""


class ConfigurationError(MomentPricingError, ValueError):
    """Inconsistent model / contract / run configuration"""


class DomainError(MomentPricingError, ValueError):
    """Argument outside the mathematical domain of a function"""


class PreconditionError(MomentPricingError, ValueError):
    pass


class DimensionError(MomentPricingError, ValueError):
    pass


class UnsupportedError(MomentPricingError, NotImplementedError):
    pass


class NumericalError(MomentPricingError, ArithmeticError):
    """A numerical routine did not reach its tolerance"""

    def __init__(self, message: str, estimate: Optional[float] = None):
        super().__init__(message)
        self.estimate = estimate
