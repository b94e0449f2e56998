"""Shared error taxonomy.

Every user-facing failure carries a stable machine code so the HTTP layer,
the CLI, and clients can route on it without matching message strings.
"""
from __future__ import annotations


class PipelineError(Exception):
    """Base class for errors that surface to callers with a stable code."""

    code = "PIPELINE_ERROR"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code

    def payload(self) -> dict:
        """The structured {code, message} body used in responses."""
        return {"code": self.code, "message": self.message}
