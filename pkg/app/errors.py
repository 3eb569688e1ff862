from typing import Any, Dict, Optional


class ShrinkageError(Exception):
    """Base class for every error raised by the library."""


class ShapeError(ShrinkageError, ValueError):
    def __init__(self, message: str, node: Optional[int] = None, op: Optional[str] = None):
        self.node = node
        self.op = op
        where = f" at node {node} ({op})" if node is not None else ""
        super().__init__(f"{message}{where}")


class NonFiniteError(ShrinkageError, ArithmeticError):
    """A value that must be finite is NaN or infinite.

    ``breakdown`` carries the components of the offending quantity (for
    example the ELBO terms) so the caller can see which one diverged.
    """

    def __init__(self, message: str, where: Any = None, breakdown: Optional[Dict[str, float]] = None):
        self.where = where
        self.breakdown = breakdown or {}
        detail = f" [{where}]" if where is not None else ""
        if self.breakdown:
            parts = ", ".join(f"{k}={v}" for k, v in self.breakdown.items())
            detail += f" ({parts})"
        super().__init__(f"{message}{detail}")


class DomainError(ShrinkageError, ValueError):
    pass


class ConfigurationError(ShrinkageError, ValueError):
    pass


class DivergentExpectation(ShrinkageError, ArithmeticError):
    pass


class QuadratureError(ShrinkageError, ArithmeticError):
    def __init__(self, message: str, achieved: float):
        self.achieved = achieved
        super().__init__(f"{message} (achieved absolute error {achieved:.3e})")


class EnumerationBoundError(ShrinkageError, ValueError):
    pass


class DataError(ShrinkageError, ValueError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
