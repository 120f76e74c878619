"""Structured diagnostics shared by config parsing and payload validation.

A diagnostic pinpoints one violation: a stable code, a document path like
``windows[2]`` or ``quantiles.values[1][7]``, and a human-readable message.
Validators collect every violation they can find rather than stopping at
the first.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path}: {self.message}"


class DiagnosticError(Exception):
    """Raised when an operation fails with one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "validation failed")

    def codes(self) -> set[str]:
        return {d.code for d in self.diagnostics}
