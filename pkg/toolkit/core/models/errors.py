"""
Toolkit exceptions
Every error carries a stable code and the CLI exit code it maps to
"""
from typing import Any, Dict, Optional


class ToolkitError(Exception):
    """Base class for all toolkit errors"""

    code = "TOOLKIT_ERROR"
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class UsageError(ToolkitError):
    code = "USAGE_ERROR"
    exit_code = 2


class SpectrumError(ToolkitError):
    """Invalid spectrum rule or point list"""

    code = "SPECTRUM_ERROR"
    exit_code = 2


class WindowError(ToolkitError):
    """Query or sample window outside the realised/admissible range"""

    code = "WINDOW_ERROR"
    exit_code = 2


class GrowthFunctionError(ToolkitError):
    """Non-monotone or otherwise inadmissible Ψ / σ"""

    code = "GROWTH_ERROR"
    exit_code = 2


class SearchError(ToolkitError):
    code = "SEARCH_FAILED"
    exit_code = 3


class IllConditionedError(ToolkitError):
    """Gram system numerically singular"""

    code = "ILL_CONDITIONED"
    exit_code = 3


class StageFitError(ToolkitError):
    code = "STAGE_FIT_FAILED"
    exit_code = 3


class GrowthClaimError(ToolkitError):
    """Entire sample exceeds its claimed growth on the spot-check rectangle"""

    code = "GROWTH_CLAIM_VIOLATED"
    exit_code = 3


class QuadratureError(ToolkitError):
    code = "QUADRATURE_ERROR"
    exit_code = 3
