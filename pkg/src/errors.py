"""Error types shared across modules.

Parameter problems raise plain ValueError; DiagnosticError is for runs that
completed numerically but whose statistics or error bounds cannot be trusted.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class DiagnosticError(RuntimeError):
    def __init__(self, code: str, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.code = code
        self.details = dict(details or {})

    def to_record(self) -> Dict[str, Any]:
        return {"error": self.code, "message": str(self), "details": self.details}
