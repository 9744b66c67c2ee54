from .exceptions import (
    RomiError,
    ConfigError,
    SchemaError,
    ConfigMismatch,
    DomainError,
    InfeasibleAssociation,
    NoFeasibleN,
    DegenerateData,
    NoTruthDefined,
    FixtureError,
)

__all__ = [
    "RomiError",
    "ConfigError",
    "SchemaError",
    "ConfigMismatch",
    "DomainError",
    "InfeasibleAssociation",
    "NoFeasibleN",
    "DegenerateData",
    "NoTruthDefined",
    "FixtureError",
]
