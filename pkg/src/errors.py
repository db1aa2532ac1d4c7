from typing import Optional


class WmGameError(Exception):
    """Base class for toolkit exceptions."""
    pass

class ValidationFailure(WmGameError):
    """Raised when inputs violate a documented range or schema."""
    pass

class InvalidParametersError(ValidationFailure):
    """Raised when game parameters make the closed-form solution undefined."""
    pass

class ShapeError(ValidationFailure):
    """Raised when paired sequences do not line up."""
    pass

class ConfigError(ValidationFailure):
    """Raised when a run configuration fails to parse or validate."""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)

class CurveFormatError(ValidationFailure):
    """Raised when a curve file has a malformed or out-of-range row."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)

class FitError(WmGameError):
    """Base class for curve-fitting failures."""
    pass

class InsufficientDataError(FitError):
    """Raised when a curve has too few distinct budgets for a fit."""
    pass

class MissingAnchorError(FitError):
    """Raised when a curve has no unattacked (k = 0) point."""
    pass

class EmptySelectionError(WmGameError):
    """Raised when a statistic needs at least one removed neuron."""
    pass
