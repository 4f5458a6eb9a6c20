"""
Run Logging Middleware
Start/finish logging for every command run
"""
import logging
import time
import uuid
from typing import Any, Dict, List

logger = logging.getLogger(__name__)


class RunLogger:
    """Logging for command execution"""

    def __init__(self):
        self.logger = logger

    def start(self, command: str, params: Dict[str, Any]) -> Dict[str, Any]:
        """Log the start of a run and return its context"""
        run_data = {
            "run_id": str(uuid.uuid4()),
            "command": command,
            "params": params,
            "started": time.time(),
        }
        self.logger.info(f"Run started: {command}", extra={"run_id": run_data["run_id"], "command": command, "params": params})
        return run_data

    def finish(self, run_data: Dict[str, Any], exit_code: int, outputs: List[str]) -> float:
        """Log the end of a run; returns elapsed seconds"""
        elapsed = time.time() - run_data.get("started", time.time())
        context = {
            "run_id": run_data.get("run_id", ""),
            "command": run_data.get("command", ""),
            "exit_code": exit_code,
            "elapsed": round(elapsed, 3),
            "outputs": outputs,
        }
        if exit_code != 0:
            self.logger.warning(f"Run completed with error: {context['command']}", extra=context)
        else:
            self.logger.info(f"Run completed: {context['command']}", extra=context)
        return elapsed


# Global run logger instance
run_logger = RunLogger()
