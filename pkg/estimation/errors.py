"""
Signest Errors
Exception hierarchy shared by the library, the experiments and the CLI
"""
from typing import List, Optional


class SignestError(Exception):
    """Base class for every error raised by signest"""


class DomainError(SignestError, ValueError):
    """An argument lies outside the domain of the operation"""


class InvalidRadius(DomainError):
    """Norm-limit radius R_w must be positive"""


class DimensionMismatch(SignestError, ValueError):
    """Array shapes do not agree"""


class NumericalError(SignestError):
    """A numerical procedure could not produce a trustworthy result"""


class NotPositiveDefinite(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SingularFim(NumericalError):
    """No finite-variance unbiased estimator exists for this configuration"""


class RankDeficient(NumericalError):
    """Mean sensing matrix is not of full row rank"""


class InfeasibleV(NumericalError):
    """v lies outside the open ball of radius 1/sigma_e"""


class ConfigError(SignestError):
    """Invalid or incomplete experiment configuration"""

    def __init__(
        self,
        message: str,
        keys: Optional[List[str]] = None,
        line: Optional[int] = None
    ):
        self.keys = keys or []
        self.line = line
        details = []
        if keys:
            details.append(f"keys: {', '.join(keys)}")
        if line is not None:
            details.append(f"line {line}")
        suffix = f" ({'; '.join(details)})" if details else ""
        super().__init__(f"{message}{suffix}")
