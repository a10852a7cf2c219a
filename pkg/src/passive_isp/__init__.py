"""Recovery of a 1-d Helmholtz source from passive multi-frequency boundary data."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ContinuationError,
    PassiveISPError,
    ReconstructionError,
    SolverError,
    SpectralError,
    ValidationError,
)
from .model import Grid, Medium, PassiveRecord, Source, validate_medium, validate_source  # noqa: E402

__all__ = [
    "__version__",
    "ContinuationError",
    "Grid",
    "Medium",
    "PassiveISPError",
    "PassiveRecord",
    "ReconstructionError",
    "SolverError",
    "Source",
    "SpectralError",
    "ValidationError",
    "validate_medium",
    "validate_source",
]
