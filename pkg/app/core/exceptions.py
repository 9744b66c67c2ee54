# app/core/exceptions.py
from typing import Any, Dict, Optional


class RomiError(Exception):
    """Base error. Carries a stable error code and the CLI exit status it maps to."""

    default_message = "Engine error"
    default_code = "2000"
    exit_code = 2

    def __init__(self, message: Optional[str] = None, error_code: Optional[str] = None, context: Optional[Dict[str, Any]] = None):
        self.message = message or self.default_message
        self.error_code = error_code or self.default_code
        self.context = context or {}
        super().__init__(self.message)

    def to_payload(self) -> Dict[str, Any]:
        payload = {
            "success": False,
            "error": type(self).__name__,
            "message": self.message,
            "error_code": self.error_code,
        }
        if self.context:
            payload["context"] = self.context
        return payload


class ConfigError(RomiError):
    default_message = "Configuration Error"
    default_code = "1000"
    exit_code = 1

    def __init__(self, message=None, key: Optional[str] = None, error_code=None, context=None):
        context = dict(context or {})
        if key is not None:
            context["key"] = key
        self.key = key
        super().__init__(message, error_code, context)


class SchemaError(ConfigError):
    default_message = "Schema Violation"
    default_code = "1001"

    def __init__(self, message=None, row: Optional[int] = None, field: Optional[str] = None, context=None):
        context = dict(context or {})
        if row is not None:
            context["row"] = row
        if field is not None:
            context["field"] = field
        self.row = row
        self.field = field
        super().__init__(message, key=field, error_code=self.default_code, context=context)


class ConfigMismatch(ConfigError):
    default_message = "Design and scenario dimensions do not match"
    default_code = "1002"


class DomainError(RomiError):
    default_message = "Argument outside its domain"
    default_code = "2001"


class InfeasibleAssociation(RomiError):
    default_message = "Infeasible (pi_T, pi_R, phi) combination"
    default_code = "2002"

    def __init__(self, message=None, cell: Optional[str] = None, value: Optional[float] = None, context=None):
        context = dict(context or {})
        if cell is not None:
            context["cell"] = cell
            context["value"] = value
        self.cell = cell
        self.value = value
        super().__init__(message, context=context)


class NoFeasibleN(RomiError):
    default_message = "No stage-1 sample size in range meets the false-negative bound"
    default_code = "2003"

    def __init__(self, message=None, n_range: Optional[tuple] = None, context=None):
        context = dict(context or {})
        if n_range is not None:
            context["n_range"] = list(n_range)
        self.n_range = n_range
        super().__init__(message, context=context)


class DegenerateData(RomiError):
    default_message = "Data cannot support a model fit"
    default_code = "2004"


class NoTruthDefined(RomiError):
    default_message = "No indication has a defined true OBD"
    default_code = "2005"


class FixtureError(RomiError):
    default_message = "Golden fixture missing or unreadable"
    default_code = "2006"
