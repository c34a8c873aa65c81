"""Exception hierarchy and the small report record shared by the checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class RecombinationError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(RecombinationError, ValueError):
    """Malformed or inconsistent input.

    ``code`` is a short machine-readable tag such as ``"not-normalized"``.
    """

    def __init__(self, message: str, code: str = "invalid-input"):
        super().__init__(message)
        self.code = code


class NotApplicableError(InvalidInputError):
    """The requested analysis is undefined for this input (e.g. identity Xi)."""

    def __init__(self, message: str, code: str = "not-applicable"):
        super().__init__(message, code)


class ResourceLimitError(RecombinationError):
    """A configured size guard would be exceeded."""


class InvariantViolation(RecombinationError):
    """An identity that must hold exactly was found to fail."""


@dataclass
class CheckReport:
    """Outcome of an exact identity check.

    ``failures`` holds human-readable counterexamples; an empty list means
    the check passed. ``data`` carries whatever values the check computed.
    """

    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def expect(self, condition: bool, message: str) -> bool:
        self.checked += 1
        if not condition:
            self.failures.append(message)
        return condition

    def raise_if_failed(self) -> "CheckReport":
        if self.failures:
            raise InvariantViolation(f"{self.name}: {self.failures[0]}")
        return self

    def __bool__(self) -> bool:
        return self.passed
