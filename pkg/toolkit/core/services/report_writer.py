"""
Report Writer
CSV, JSON, SVG and manifest output for command runs
"""
import io
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib
import numpy as np
import pandas as pd
from pydantic import BaseModel

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..models.domain_models import RunManifest  # noqa: E402

logger = logging.getLogger(__name__)

TOOLKIT_VERSION = "1.0.0"

SVG_SIZE = (6.4, 4.0)
SVG_STYLE = {"svg.hashsalt": "translates-toolkit", "svg.fonttype": "none", "font.size": 11}


def _default(obj):
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def finite_series(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]], logy: bool = False
) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Drop non-finite points, and non-positive values on a log axis"""
    cleaned = {}
    for label, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logy:
            keep &= y > 0
        cleaned[label] = (x[keep], y[keep])
    return cleaned


def svg_polyline(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logy: bool = False,
) -> str:
    """Line plot as SVG text; fixed hash salt and no date stamp so output bytes are reproducible"""
    cleaned = finite_series(series, logy)
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=SVG_SIZE)
        for label, (x, y) in cleaned.items():
            ax.plot(x, y, label=label, linewidth=1.5, gid=f"series-{label}")
        if logy and any(y.size for _, y in cleaned.values()):
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if cleaned:
            ax.legend(loc="upper right")
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


class ReportWriter:
    """Writes one run's files into an output directory and remembers them for the manifest"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: List[str] = []
        self.logger = logger

    def _path(self, name: str) -> Path:
        path = self.out_dir / name
        if name not in self.outputs:
            self.outputs.append(name)
        return path

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        self.logger.debug("Wrote CSV", extra={"path": str(path), "rows": len(frame)})
        return path

    def json(self, name: str, obj: Any) -> Path:
        path = self._path(name)
        path.write_text(dumps(obj))
        return path

    def svg(self, name: str, series, **kwargs) -> Path:
        path = self._path(name)
        path.write_text(svg_polyline(series, **kwargs))
        return path

    def manifest(self, command: str, params: Dict[str, Any], exit_code: int, extra_outputs: Optional[List[str]] = None) -> Path:
        outputs = list(self.outputs) + [o for o in (extra_outputs or []) if o not in self.outputs]
        manifest = RunManifest(
            command=command,
            params=json.loads(dumps(params)),
            outputs=outputs,
            exit_code=exit_code,
            toolkit_version=TOOLKIT_VERSION,
        )
        path = self.out_dir / "manifest.json"
        path.write_text(dumps(manifest))
        return path
