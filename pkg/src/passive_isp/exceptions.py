"""Exception types carrying a short machine-readable ``code``."""


class PassiveISPError(Exception):
    """Base class. ``code`` is a stable identifier such as ``"BAD_K"``."""

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class ValidationError(PassiveISPError, ValueError):
    """Rejected medium, source, grid or configuration."""


class SolverError(PassiveISPError, ArithmeticError):
    """Forward solve failed (singular system, bad wavenumber, ...)."""

    def __init__(self, code, message="", k=None):
        self.k = k
        super().__init__(code, message)


class SpectralError(PassiveISPError):
    """Eigen-solve or spectral-sum failure."""


class ReconstructionError(PassiveISPError, ValueError):
    """Passive data inconsistent with the requested reconstruction."""


class ContinuationError(PassiveISPError):
    """Contour, strip or harmonic-measure computation failed."""
