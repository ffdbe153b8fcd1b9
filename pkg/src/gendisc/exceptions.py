"""Exception hierarchy for gendisc.

Every error derives from :class:`GendiscError` and from the builtin that a
plain numpy/click program would raise for the same situation, so callers can
catch either.
"""

from __future__ import annotations

from typing import Any


class GendiscError(Exception):
    """Base class for all gendisc errors."""


class ModelValidationError(GendiscError, ValueError):
    """A model or unit set violates its type invariants."""

    def __init__(self, violations: list[Any], source: str | None = None) -> None:
        self.violations = list(violations)
        self.source = source
        head = f"{source}: " if source else ""
        shown = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{head}{len(self.violations)} violation(s): {shown}{more}")


class AlphabetError(GendiscError, ValueError):
    """Unknown label or observation, or an index outside an alphabet."""


class ShapeError(GendiscError, ValueError):
    """Table or sequence shape does not match the model kind."""


class InversionError(GendiscError, ArithmeticError):
    """Bayes inversion hit a zero-evidence context."""

    def __init__(self, unit: str, detail: str) -> None:
        self.unit = unit
        super().__init__(f"cannot invert unit '{unit}': {detail}")


class ZeroDenominatorError(GendiscError, ArithmeticError):
    """A discriminative ratio would divide by a zero unit or marginal."""

    def __init__(self, unit: str, position: int | None = None) -> None:
        self.unit = unit
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"zero denominator in unit '{unit}'{where}")


class ZeroProbabilityError(GendiscError, ArithmeticError):
    """An observation has zero probability under every hidden state."""

    def __init__(self, position: int) -> None:
        self.position = position
        super().__init__(f"observation at position {position} has zero probability")


class OracleLimitError(GendiscError, ValueError):
    """Brute-force enumeration would exceed the configured size guard."""


class TrainingDivergedError(GendiscError, RuntimeError):
    """Gradient training produced a non-finite loss."""


class DataFormatError(GendiscError, ValueError):
    """A corpus file cannot be parsed, or does not fit the model family."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None) -> None:
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class AlignmentMismatchError(GendiscError, ValueError):
    """Prediction and gold files do not line up."""

    def __init__(self, sequence: int, token: int | None, detail: str) -> None:
        self.sequence = sequence
        self.token = token
        where = f"sequence {sequence}" + (f", token {token}" if token is not None else "")
        super().__init__(f"files diverge at {where}: {detail}")
