"""Exception hierarchy shared by the library and the CLI"""
from typing import Any, Dict, Iterable, Optional


class RuinLabError(Exception):
    """Base class for every error raised by ruinlab"""


class DomainError(RuinLabError, ValueError):
    """A precondition on an argument was violated"""


class UndefinedMomentError(DomainError):
    """Requested moment does not exist for the distribution"""


class NumericalFailure(RuinLabError, ArithmeticError):
    """A numerical routine failed; diagnostics describe what went wrong"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class ConfigError(RuinLabError):
    """Configuration is invalid; `fields` names every offending key"""

    def __init__(self, message: str, fields: Iterable[str] = ()):
        super().__init__(message)
        self.fields = list(fields)
