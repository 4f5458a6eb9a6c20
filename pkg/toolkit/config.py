"""
Configuration management for the translates toolkit
"""
import json
import logging
import math
import os
import sys
from typing import Optional

from dotenv import find_dotenv, load_dotenv

load_dotenv(find_dotenv(usecwd=True))


class Settings:
    """Toolkit settings and numerical defaults"""

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("TOOLKIT_LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("TOOLKIT_LOG_FORMAT", "json")
    LOG_FILE: Optional[str] = os.getenv("TOOLKIT_LOG_FILE") or None

    # Execution Configuration
    THREADS: int = int(os.getenv("TOOLKIT_THREADS", "1"))

    # Exponential fitting
    RIDGE: float = float(os.getenv("TOOLKIT_RIDGE", "1e-10"))
    GRID_NODES: int = int(os.getenv("TOOLKIT_GRID_NODES", "2048"))
    GRID_MAX_NODES: int = int(os.getenv("TOOLKIT_GRID_MAX_NODES", "16384"))
    GRAM_RTOL: float = float(os.getenv("TOOLKIT_GRAM_RTOL", "1e-10"))

    # Span / time-domain quadrature
    TAIL_TOL: float = float(os.getenv("TOOLKIT_TAIL_TOL", "1e-8"))
    TIME_WINDOW: float = float(os.getenv("TOOLKIT_TIME_WINDOW", "64"))
    TIME_NODES: int = int(os.getenv("TOOLKIT_TIME_NODES", "16384"))

    # Density search
    S_MIN: float = float(os.getenv("TOOLKIT_S_MIN", "2.0"))
    DENSITY_TOL: float = float(os.getenv("TOOLKIT_DENSITY_TOL", "0.01"))
    TAIL_SCALE: float = float(os.getenv("TOOLKIT_TAIL_SCALE", "0.0625"))
    TAIL_SHARE: float = float(os.getenv("TOOLKIT_TAIL_SHARE", "0.5"))
    GRID_RATIO: float = float(os.getenv("TOOLKIT_GRID_RATIO", str(2 ** 0.125)))

    # Pair generators
    PAIR_K: int = int(os.getenv("TOOLKIT_PAIR_K", "30"))
    PAIR_A: float = float(os.getenv("TOOLKIT_PAIR_A", str(0.45 * math.pi)))

    # Bernstein classes
    CERT_THRESHOLD: float = float(os.getenv("TOOLKIT_CERT_THRESHOLD", "10"))
    CARLEMAN_TOL: float = float(os.getenv("TOOLKIT_CARLEMAN_TOL", "1e-3"))
    SPOT_SLACK: float = float(os.getenv("TOOLKIT_SPOT_SLACK", "1e-9"))

    # Generator schedule
    GEN_L: float = float(os.getenv("TOOLKIT_GEN_L", "2.0"))


class JSONFormatter(logging.Formatter):
    """One JSON object per record, extra context keys included"""

    _reserved = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}

    def format(self, record):
        log_entry = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        for key, value in record.__dict__.items():
            if key not in self._reserved and not key.startswith("_"):
                log_entry[key] = value
        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_entry, default=str)


def setup_logging(level: Optional[str] = None):
    """Configure toolkit logging"""
    log_level = getattr(logging, (level or Settings.LOG_LEVEL).upper(), logging.INFO)

    if Settings.LOG_FORMAT.lower() == "json":
        formatter = JSONFormatter()
    else:
        formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    handlers = [logging.StreamHandler(sys.stderr)]
    if Settings.LOG_FILE:
        handlers.append(logging.FileHandler(Settings.LOG_FILE))
    for handler in handlers:
        handler.setFormatter(formatter)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)

    return logging.getLogger("toolkit")


# Global settings instance
settings = Settings()
