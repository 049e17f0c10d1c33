"""
OperationResult: uniform return value for checks and scenario verdicts.
"""

from typing import Any, Dict, Optional


class OperationResult:
    """Encapsulates the result of an operation for clean return values"""

    def __init__(self, success: bool, message: str = "", data: Optional[Dict[str, Any]] = None):
        self.success = bool(success)
        self.message = message
        self.data = data or {}

    def __bool__(self):
        return self.success

    def __repr__(self):
        return f"OperationResult(success={self.success}, message='{self.message}')"

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-friendly dictionary"""
        return {"success": self.success, "message": self.message, "data": self.data}
