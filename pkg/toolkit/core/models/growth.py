"""
Monotone function types
PsiFunction (interval-length weights for substantial families) and
GrowthFunction (σ defining a generalized Bernstein class B_σ)
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import GrowthFunctionError


def _as_monotone_table(breakpoints: Sequence[float], values: Sequence[float], name: str) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(breakpoints, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != v.shape or x.size == 0:
        raise GrowthFunctionError(f"{name}: breakpoints and values must be equal-length 1-D lists")
    if np.any(np.diff(x) <= 0):
        raise GrowthFunctionError(f"{name}: breakpoints must be strictly increasing")
    if np.any(np.diff(v) < 0):
        first = int(np.argmax(np.diff(v) < 0))
        raise GrowthFunctionError(
            f"{name}: values must be nondecreasing",
            {"index": first, "x": float(x[first + 1]), "value": float(v[first + 1])},
        )
    if not np.all(np.isfinite(v)):
        raise GrowthFunctionError(f"{name}: values must be finite")
    return x, v


@dataclass(frozen=True)
class PsiFunction:
    """Nondecreasing Ψ(s), s > 0.

    kinds: constant(value), log(scale) = scale·log(1+s),
    power(scale, p) = scale·s^p, tabulated(breakpoints, values) as a
    right-continuous step function.
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "constant":
            if float(self.params.get("value", 0.0)) < 0:
                raise GrowthFunctionError("constant Ψ must be nonnegative")
        elif self.kind in ("log", "power"):
            if float(self.params.get("scale", 1.0)) < 0 or float(self.params.get("p", 1.0)) < 0:
                raise GrowthFunctionError(f"{self.kind} Ψ must have nonnegative scale and exponent")
        elif self.kind == "tabulated":
            _as_monotone_table(self.params["breakpoints"], self.params["values"], "Ψ")
        else:
            raise GrowthFunctionError(f"unknown Ψ kind: {self.kind}")

    @classmethod
    def constant(cls, value: float) -> "PsiFunction":
        return cls("constant", {"value": float(value)})

    @classmethod
    def log(cls, scale: float = 1.0) -> "PsiFunction":
        return cls("log", {"scale": float(scale)})

    @classmethod
    def power(cls, scale: float = 1.0, p: float = 1.0) -> "PsiFunction":
        return cls("power", {"scale": float(scale), "p": float(p)})

    @classmethod
    def step(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "PsiFunction":
        return cls("tabulated", {"breakpoints": [float(b) for b in breakpoints], "values": [float(v) for v in values]})

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            out = np.full(s.shape, float(self.params["value"]))
        elif self.kind == "log":
            out = float(self.params.get("scale", 1.0)) * np.log1p(np.maximum(s, 0.0))
        elif self.kind == "power":
            out = float(self.params.get("scale", 1.0)) * np.maximum(s, 0.0) ** float(self.params.get("p", 1.0))
        else:
            x = np.asarray(self.params["breakpoints"], dtype=float)
            v = np.asarray(self.params["values"], dtype=float)
            idx = np.clip(np.searchsorted(x, s, side="right") - 1, 0, x.size - 1)
            out = v[idx]
        return out if out.ndim else float(out)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class GrowthFunction:
    """Nondecreasing σ(y) on (0, ∞).

    kinds: affine(c0, c1) = c0 + c1·y; log(c0, c1, shift) = c0 + c1·log(shift + y);
    power(scale, p) = scale·y^p; tabulated(x, values, mode) with monotone
    PCHIP ("pchip") or right-continuous step ("step") interpolation, constant
    beyond the last sample.
    """

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        if self.kind == "affine":
            if float(p.get("c1", 0.0)) < 0:
                raise GrowthFunctionError("affine σ must have nonnegative slope")
        elif self.kind == "log":
            if float(p.get("c1", 1.0)) < 0 or float(p.get("shift", 1.0)) <= 0:
                raise GrowthFunctionError("log σ needs c1 ≥ 0 and shift > 0")
        elif self.kind == "power":
            if float(p.get("scale", 1.0)) < 0 or float(p.get("p", 1.0)) < 0:
                raise GrowthFunctionError("power σ needs nonnegative scale and exponent")
        elif self.kind == "tabulated":
            _as_monotone_table(p["x"], p["values"], "σ")
            if p.get("mode", "pchip") not in ("pchip", "step"):
                raise GrowthFunctionError(f"unknown interpolation mode: {p.get('mode')}")
        else:
            raise GrowthFunctionError(f"unknown σ kind: {self.kind}")

    @classmethod
    def affine(cls, c0: float, c1: float) -> "GrowthFunction":
        return cls("affine", {"c0": float(c0), "c1": float(c1)})

    @classmethod
    def logarithmic(cls, c0: float = 1.0, c1: float = 1.0, shift: float = 1.0) -> "GrowthFunction":
        return cls("log", {"c0": float(c0), "c1": float(c1), "shift": float(shift)})

    @classmethod
    def power(cls, scale: float = 1.0, p: float = 1.0) -> "GrowthFunction":
        return cls("power", {"scale": float(scale), "p": float(p)})

    @classmethod
    def tabulated(cls, x: Sequence[float], values: Sequence[float], mode: str = "pchip") -> "GrowthFunction":
        return cls("tabulated", {"x": [float(t) for t in x], "values": [float(v) for v in values], "mode": mode})

    @property
    def unbounded(self) -> bool:
        """True when σ(y) → ∞ as y → ∞"""
        p = self.params
        if self.kind == "affine":
            return float(p.get("c1", 0.0)) > 0
        if self.kind == "log":
            return float(p.get("c1", 1.0)) > 0
        if self.kind == "power":
            return float(p.get("scale", 1.0)) > 0 and float(p.get("p", 1.0)) > 0
        return False

    def __call__(self, y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        p = self.params
        if self.kind == "affine":
            out = float(p.get("c0", 0.0)) + float(p.get("c1", 0.0)) * y
        elif self.kind == "log":
            out = float(p.get("c0", 1.0)) + float(p.get("c1", 1.0)) * np.log(float(p.get("shift", 1.0)) + y)
        elif self.kind == "power":
            out = float(p.get("scale", 1.0)) * y ** float(p.get("p", 1.0))
        else:
            x = np.asarray(p["x"], dtype=float)
            v = np.asarray(p["values"], dtype=float)
            if p.get("mode", "pchip") == "step" or x.size < 2:
                idx = np.clip(np.searchsorted(x, y, side="right") - 1, 0, x.size - 1)
                out = v[idx]
            else:
                out = PchipInterpolator(x, v, extrapolate=False)(np.clip(y, x[0], x[-1]))
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.params}
