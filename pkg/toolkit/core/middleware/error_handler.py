"""
Error Handling Middleware
Maps exceptions raised by commands to exit codes and diagnostic payloads
"""
import json
import logging
import time
import traceback
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from pydantic import ValidationError

from ..models.errors import ToolkitError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class ErrorHandler:
    """Error handling for command execution"""

    def __init__(self):
        self.logger = logger

    def handle(self, exc: Exception, run_id: str = "unknown") -> Tuple[int, Dict[str, Any]]:
        """Return (exit code, payload) for an exception"""
        try:
            self.logger.error(
                f"Exception occurred: {str(exc)}",
                extra={"run_id": run_id, "exception_type": type(exc).__name__},
            )

            if isinstance(exc, ToolkitError):
                return self._handle_toolkit_error(exc, run_id)
            elif isinstance(exc, ValidationError):
                return self._handle_validation_error(exc, run_id)
            elif isinstance(exc, json.JSONDecodeError):
                return self._handle_json_error(exc, run_id)
            elif isinstance(exc, FileNotFoundError):
                return self._handle_missing_file(exc, run_id)
            elif isinstance(exc, ValueError):
                return self._handle_value_error(exc, run_id)
            else:
                return self._handle_generic_error(exc, run_id)

        except Exception as e:
            self.logger.critical(f"Error handler failed: {str(e)}")
            return 1, self._payload("Internal error", "INTERNAL_ERROR", str(exc), run_id)

    def write(self, payload: Dict[str, Any], out_dir: Optional[Path]) -> Optional[Path]:
        """Persist the diagnostic payload next to the run outputs"""
        if out_dir is None:
            return None
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "error.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str))
        return path

    def _payload(
        self,
        error: str,
        code: str,
        message: str,
        run_id: str,
        details: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        return {
            "error": error,
            "code": code,
            "message": message,
            "details": details or {},
            "run_id": run_id,
            "timestamp": time.time(),
        }

    def _handle_toolkit_error(self, exc: ToolkitError, run_id: str) -> Tuple[int, Dict[str, Any]]:
        payload = self._payload(type(exc).__name__, exc.code, exc.message, run_id, exc.details)
        return exc.exit_code, payload

    def _handle_validation_error(self, exc: ValidationError, run_id: str) -> Tuple[int, Dict[str, Any]]:
        details = {"errors": json.loads(exc.json())}
        return EXIT_USAGE, self._payload("Configuration validation error", "CONFIG_VALIDATION_ERROR", str(exc), run_id, details)

    def _handle_json_error(self, exc: json.JSONDecodeError, run_id: str) -> Tuple[int, Dict[str, Any]]:
        details = {"line": exc.lineno, "column": exc.colno}
        return EXIT_USAGE, self._payload("Malformed JSON", "JSON_ERROR", str(exc), run_id, details)

    def _handle_missing_file(self, exc: FileNotFoundError, run_id: str) -> Tuple[int, Dict[str, Any]]:
        return EXIT_USAGE, self._payload("Missing file", "FILE_NOT_FOUND", str(exc), run_id)

    def _handle_value_error(self, exc: ValueError, run_id: str) -> Tuple[int, Dict[str, Any]]:
        return EXIT_USAGE, self._payload("Invalid value", "VALUE_ERROR", str(exc), run_id)

    def _handle_generic_error(self, exc: Exception, run_id: str) -> Tuple[int, Dict[str, Any]]:
        self.logger.critical("Unhandled exception", extra={"run_id": run_id, "traceback": traceback.format_exc()})
        return 1, self._payload("Internal error", "INTERNAL_ERROR", "An unexpected error occurred", run_id)


# Global error handler instance
error_handler = ErrorHandler()
