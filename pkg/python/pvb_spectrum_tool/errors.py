# imports from built-in packages
from typing import Optional

# imports from external packages (in requirements.txt)
import numpy as np


class InvalidArgumentError(ValueError):
    """Raised when a size, index or model parameter violates a precondition."""


class DomainError(InvalidArgumentError):
    """Raised when a function is evaluated outside the domain of its DVR."""


class NotAvailableError(NotImplementedError):
    """Raised when no closed-form oracle exists for a potential model."""


class EmptyMaskError(InvalidArgumentError):
    """Raised when a prune strategy retains no lattice function."""


class MetricSingularError(np.linalg.LinAlgError):
    """
    Raised when a metric (overlap) matrix is not positive definite.

    Attributes:
        lambda_min (float): Smallest eigenvalue of the offending metric.
    """

    def __init__(self, message: str, lambda_min: float):
        super().__init__(f"{message} (lambda_min = {lambda_min:.3e})")
        self.lambda_min = lambda_min


class IllConditionedFrameError(np.linalg.LinAlgError):
    """
    Raised when S^-1 is requested for a frame that is too ill-conditioned to invert.

    Attributes:
        cond_s (float): Condition number of the overlap matrix S.
    """

    def __init__(self, message: str, cond_s: float):
        super().__init__(f"{message} (cond_S = {cond_s:.3e})")
        self.cond_s = cond_s


class ConfigError(ValueError):
    """
    Raised for malformed or invalid experiment configs.

    Attributes:
        field (str, optional): The config key at fault.
        line (int, optional): 1-based line number in the config file.
    """

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field is not None:
            context.append(f"field {field}")
        prefix = f"[{', '.join(context)}] " if context else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line
