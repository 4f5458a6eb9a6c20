"""
Spectrum Service
Construction, storage and counting queries for discrete spectra Λ
"""
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..models.domain_models import Side, SignRule, SpectrumKind, spectrum_file_adapter
from ..models.errors import SpectrumError, WindowError

logger = logging.getLogger(__name__)

# Rules that would realise more points than this must be queried analytically
MAX_REALIZED_POINTS = 50_000_000

ANALYTIC_KINDS = (SpectrumKind.POWER, SpectrumKind.ARITHMETIC)


@dataclass(frozen=True)
class Spectrum:
    """A generation rule plus a truncation window.

    Power and arithmetic rules answer count/neighbour queries in closed form,
    so they can be searched at horizons far beyond what can be materialised.
    """

    kind: SpectrumKind
    params: Dict[str, Any] = field(default_factory=dict)
    N: Optional[int] = None
    T: Optional[float] = None
    side: Side = Side.BOTH

    def __post_init__(self):
        kind = SpectrumKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "side", Side(self.side))
        p = self.params
        if kind == SpectrumKind.PERTURBED_INTEGERS:
            C, r = float(p.get("C", 0.0)), float(p.get("r", -1.0))
            if C <= 0:
                raise SpectrumError("perturbed_integers needs C > 0", {"C": C})
            if not 0 < r < 1:
                raise SpectrumError("perturbed_integers needs r in (0, 1)", {"r": r})
            SignRule(p.get("sign", SignRule.PLUS))
        elif kind == SpectrumKind.POWER:
            alpha = float(p.get("alpha", 0.0))
            if not 0 < alpha <= 1:
                raise SpectrumError("power needs alpha in (0, 1]", {"alpha": alpha})
        elif kind == SpectrumKind.ARITHMETIC:
            if float(p.get("step", 0.0)) <= 0:
                raise SpectrumError("arithmetic needs step > 0")
        elif kind == SpectrumKind.EXPLICIT:
            pts = np.asarray(p.get("points", []), dtype=float)
            if np.any(np.diff(pts) <= 0):
                raise SpectrumError("explicit points must be sorted without duplicates")
        if kind != SpectrumKind.EXPLICIT:
            if self.N is None and self.T is None:
                raise WindowError("a finite window N or T is required")
            if (self.N is not None and self.N <= 0) or (self.T is not None and self.T <= 0):
                raise WindowError("window must be positive", {"N": self.N, "T": self.T})

    # construction helpers
    @classmethod
    def perturbed_integers(cls, C: float, r: float, N: int, sign: str = "plus", side: str = "both") -> "Spectrum":
        return cls(SpectrumKind.PERTURBED_INTEGERS, {"C": C, "r": r, "sign": SignRule(sign).value}, N=N, side=Side(side))

    @classmethod
    def power(cls, alpha: float, N: Optional[int] = None, T: Optional[float] = None, side: str = "positive") -> "Spectrum":
        return cls(SpectrumKind.POWER, {"alpha": alpha}, N=N, T=T, side=Side(side))

    @classmethod
    def arithmetic(cls, step: float, N: Optional[int] = None, T: Optional[float] = None, side: str = "both") -> "Spectrum":
        return cls(SpectrumKind.ARITHMETIC, {"step": step}, N=N, T=T, side=Side(side))

    @classmethod
    def explicit(cls, points, lower: Optional[float] = None, upper: Optional[float] = None) -> "Spectrum":
        params: Dict[str, Any] = {"points": [float(x) for x in points]}
        if lower is not None:
            params["lower"] = float(lower)
        if upper is not None:
            params["upper"] = float(upper)
        return cls(SpectrumKind.EXPLICIT, params)

    # analytic rule g(k), k = 1..k_max, for the symmetric kinds
    def _g(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == SpectrumKind.POWER:
            return np.power(k, float(self.params["alpha"]))
        return k * float(self.params["step"])

    @cached_property
    def _k_max(self) -> int:
        if self.kind == SpectrumKind.POWER:
            alpha = float(self.params["alpha"])
            k = self.N if self.T is None else int(np.floor(self.T ** (1.0 / alpha))) + 2
        else:
            step = float(self.params["step"])
            k = self.N if self.T is None else int(np.floor(self.T / step)) + 2
        if self.T is not None:
            while k > 0 and self._g(k) > self.T:
                k -= 1
            if self.N is not None:
                k = min(k, self.N)
        return int(k)

    @property
    def _has_zero(self) -> bool:
        return self.side == Side.BOTH

    @cached_property
    def points(self) -> np.ndarray:
        """Realised points, strictly increasing"""
        if self.kind == SpectrumKind.EXPLICIT:
            pts = np.asarray(self.params["points"], dtype=float)
        elif self.kind == SpectrumKind.PERTURBED_INTEGERS:
            pts = self._perturbed[1]
        else:
            size = self._k_max * (2 if self.side == Side.BOTH else 1)
            if size > MAX_REALIZED_POINTS:
                raise WindowError(
                    "window too large to realise; use count/neighbors which are closed-form for this rule",
                    {"points": size},
                )
            pos = self._g(np.arange(1, self._k_max + 1))
            if self.side == Side.BOTH:
                pts = np.concatenate([-pos[::-1], [0.0], pos])
            else:
                pts = pos
        pts = np.ascontiguousarray(pts, dtype=float)
        pts.setflags(write=False)
        return pts

    @cached_property
    def _perturbed(self) -> Tuple[np.ndarray, np.ndarray, bool]:
        """(n, n + a_n, clamped) for the perturbed-integer rule.

        Offsets C·r^|n| that vanish in float64 would turn λ_n back into n, so
        the index range stops before the first such n and clamped is set.
        """
        C, r = float(self.params["C"]), float(self.params["r"])
        sign = SignRule(self.params.get("sign", SignRule.PLUS))
        if self.N is not None:
            n_max = self.N
        else:
            n_max = int(np.ceil(self.T)) + 1
        n = np.arange(-n_max, n_max + 1) if self.side == Side.BOTH else np.arange(0, n_max + 1)
        s = np.ones(n.shape) if sign == SignRule.PLUS else np.where(n % 2 == 0, 1.0, -1.0)
        pts = n + C * r ** np.abs(n) * s
        lost = np.abs(n[(pts - n) == 0])
        clamped = lost.size > 0
        if clamped:
            keep = int(lost.min()) - 1
            logger.warning(
                "Perturbation below float resolution; index window clamped",
                extra={"C": C, "r": r, "requested": n_max, "kept": keep},
            )
            inside = np.abs(n) <= keep
            n, pts = n[inside], pts[inside]
        if self.T is not None:
            inside = np.abs(pts) <= self.T
            n, pts = n[inside], pts[inside]
        if self.side == Side.POSITIVE:
            inside = pts > 0
            n, pts = n[inside], pts[inside]
        if np.any(np.diff(pts) <= 0):
            raise SpectrumError("perturbation too large: realised points are not strictly increasing", {"C": C})
        return n.astype(float), pts, clamped

    @property
    def offsets(self) -> np.ndarray:
        """a_n = λ_n − n for the perturbed-integer rule"""
        if self.kind != SpectrumKind.PERTURBED_INTEGERS:
            raise SpectrumError("offsets exist only for perturbed_integers", {"kind": self.kind.value})
        n, pts, _ = self._perturbed
        return pts - n

    @property
    def lower(self) -> float:
        """Lower end of the realised window"""
        if self.side == Side.POSITIVE and self.kind != SpectrumKind.EXPLICIT:
            return 0.0
        if self.kind in ANALYTIC_KINDS:
            return -self.upper
        if "lower" in self.params:
            return float(self.params["lower"])
        if not self.points.size or self.points[0] > 0:
            return 0.0
        return float(self.points[0])

    @property
    def upper(self) -> float:
        """Upper end of the realised window"""
        if self.kind in ANALYTIC_KINDS:
            return float(self.T) if self.T is not None else float(self._g(self._k_max))
        if self.kind == SpectrumKind.PERTURBED_INTEGERS and self.T is not None and not self._perturbed[2]:
            return float(self.T)
        if "upper" in self.params:
            return float(self.params["upper"])
        return float(self.points[-1]) if self.points.size else 0.0

    # rank functions
    def _pos_rank(self, x, strict: bool) -> np.ndarray:
        """#{k in 1..k_max : g(k) < x} (strict) or ≤ x"""
        x = np.asarray(x, dtype=float)
        k_max = self._k_max
        if self.kind == SpectrumKind.POWER:
            guess = np.floor(np.power(np.maximum(x, 0.0), 1.0 / float(self.params["alpha"])))
        else:
            guess = np.floor(np.maximum(x, 0.0) / float(self.params["step"]))
        m = np.clip(guess, 0, k_max).astype(np.int64)

        def inside(k):
            gk = self._g(k)
            return gk < x if strict else gk <= x

        # fix float rounding in the guess; a few steps at most
        for _ in range(4):
            down = (m >= 1) & ~inside(np.maximum(m, 1))
            m = np.where(down, m - 1, m)
            up = (m + 1 <= k_max) & inside(np.minimum(m + 1, max(k_max, 1)))
            m = np.where(up, m + 1, m)
        return m

    def rank_lt(self, x) -> np.ndarray:
        """#{λ ∈ Λ : λ < x}"""
        if self.kind not in ANALYTIC_KINDS:
            return np.searchsorted(self.points, x, side="left")
        x = np.asarray(x, dtype=float)
        total = self._pos_rank(x, strict=True)
        if self.side == Side.BOTH:
            # −g(k) < x  ⇔  g(k) > −x
            total = total + (self._k_max - self._pos_rank(-x, strict=False)) + (x > 0)
        return total

    def rank_le(self, x) -> np.ndarray:
        """#{λ ∈ Λ : λ ≤ x}"""
        if self.kind not in ANALYTIC_KINDS:
            return np.searchsorted(self.points, x, side="right")
        x = np.asarray(x, dtype=float)
        total = self._pos_rank(x, strict=False)
        if self.side == Side.BOTH:
            total = total + (self._k_max - self._pos_rank(-x, strict=True)) + (x >= 0)
        return total

    @property
    def size(self) -> int:
        if self.kind in ANALYTIC_KINDS:
            return self._k_max * (2 if self.side == Side.BOTH else 1) + (1 if self._has_zero else 0)
        return int(self.points.size)

    def point_at(self, i) -> np.ndarray:
        """i-th point in increasing order (0-based)"""
        i = np.asarray(i, dtype=np.int64)
        if self.kind not in ANALYTIC_KINDS:
            return self.points[i]
        if self.side == Side.POSITIVE:
            return self._g(i + 1)
        centre = self._k_max
        return np.sign(i - centre) * self._g(np.abs(i - centre))

    def describe(self) -> Dict[str, Any]:
        out = {"kind": self.kind.value, **self.params, "side": self.side.value}
        if self.N is not None:
            out["N"] = self.N
        if self.T is not None:
            out["T"] = self.T
        return out


class SpectrumService:
    """Spectrum construction and queries"""

    def __init__(self):
        self.logger = logger

    def load(self, path: Union[str, Path]) -> Spectrum:
        """Read a spectrum JSON file"""
        text = Path(path).read_text()
        return self.from_dict(json.loads(text))

    def from_dict(self, data: Dict[str, Any]) -> Spectrum:
        try:
            model = spectrum_file_adapter.validate_python(data)
        except ValidationError as e:
            raise SpectrumError("invalid spectrum file", {"errors": json.loads(e.json())}) from e
        if model.kind == SpectrumKind.EXPLICIT.value:
            return Spectrum.explicit(model.points, lower=model.lower, upper=model.upper)
        params = model.model_dump(exclude={"kind", "N", "T", "side"})
        if "sign" in params:
            params["sign"] = SignRule(params["sign"]).value
        return Spectrum(SpectrumKind(model.kind), params, N=model.N, T=model.T, side=model.side)

    def realize(self, spec: Spectrum) -> np.ndarray:
        """All points of the rule inside the window, ascending"""
        pts = spec.points
        self.logger.debug("Realised spectrum", extra={"spectrum": spec.describe(), "points": int(pts.size)})
        return pts

    def points_frame(self, spec: Spectrum) -> pd.DataFrame:
        """Realised points with their rank, for CSV export"""
        pts = self.realize(spec)
        return pd.DataFrame({"index": np.arange(pts.size), "point": pts})

    def count(self, spec: Spectrum, a: float, b: float) -> int:
        """n_Λ(a, b) = #{λ : a < λ < b}"""
        if not a < b:
            raise WindowError("count needs a < b", {"a": a, "b": b})
        if a < spec.lower or b > spec.upper:
            raise WindowError(
                "count query outside the realised window",
                {"a": a, "b": b, "window": [spec.lower, spec.upper]},
            )
        return int(spec.rank_lt(b) - spec.rank_le(a))

    def counts(self, spec: Spectrum, a, b) -> np.ndarray:
        """Vectorised open-interval counts; no window check"""
        return np.asarray(spec.rank_lt(b), dtype=np.int64) - np.asarray(spec.rank_le(a), dtype=np.int64)

    def neighbors(self, spec: Spectrum, x) -> Tuple[np.ndarray, np.ndarray]:
        """(largest λ ≤ x, smallest λ > x); nan where none exists"""
        x = np.asarray(x, dtype=float)
        i = np.asarray(spec.rank_le(x), dtype=np.int64)
        n = spec.size
        if n == 0:
            empty = np.full(x.shape, np.nan)
            return empty, empty.copy()
        left = np.where(i >= 1, spec.point_at(np.clip(i - 1, 0, n - 1)), np.nan)
        right = np.where(i < n, spec.point_at(np.clip(i, 0, n - 1)), np.nan)
        return left, right

    def split(self, spec: Spectrum) -> Tuple[Spectrum, Spectrum]:
        """(Λ⁺, Λ⁻) with Λ⁺ = Λ ∩ ℝ⁺ and Λ⁻ = (−Λ) ∩ ℝ⁺"""
        if spec.kind in ANALYTIC_KINDS:
            plus = Spectrum(spec.kind, dict(spec.params), N=spec.N, T=spec.T, side=Side.POSITIVE)
            if spec.side == Side.BOTH:
                return plus, plus
            return plus, Spectrum.explicit([], lower=0.0, upper=0.0)
        pts = spec.points
        pos = pts[pts > 0]
        neg = -pts[pts < 0][::-1]
        return (
            Spectrum.explicit(pos, lower=0.0, upper=max(spec.upper, 0.0)),
            Spectrum.explicit(neg, lower=0.0, upper=max(-spec.lower, 0.0)),
        )

    def symmetrize(self, spec: Spectrum) -> Spectrum:
        """Two-sided version {±λ}"""
        if spec.kind in ANALYTIC_KINDS:
            return Spectrum(spec.kind, dict(spec.params), N=spec.N, T=spec.T, side=Side.BOTH)
        pts = spec.points
        both = np.unique(np.concatenate([pts, -pts]))
        reach = max(spec.upper, -spec.lower)
        return Spectrum.explicit(both, lower=-reach, upper=reach)


# Global spectrum service instance
spectrum_service = None


def get_spectrum_service() -> SpectrumService:
    """Get the global spectrum service instance"""
    global spectrum_service
    if spectrum_service is None:
        spectrum_service = SpectrumService()
    return spectrum_service
