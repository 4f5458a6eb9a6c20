"""
Pair Generator Service
The pair φ₁(t) = sinc²(at)·Σ e^{−|k|}e^{2πikt}, φ₂(t) = e^{−iπt}φ₁(t) for
exponentially perturbed integers: closed-form transforms, a quadrature
cross-check, the positivity margin of φ̂₁ + φ̂₂ and empirical span tests.

Transforms use F(x) = (2a²/π)∫φ(t)e^{ixt}dt, which sends sinc²(at) to the
triangle max(0, 2a − |x|).
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import simpson
from scipy.special import sici

from config import settings

from ..models.domain_models import PositivityReport, Verdict
from ..models.errors import UsageError
from .span_service import SpanProblem, get_span_service, time_grid
from .spectrum_service import Spectrum

logger = logging.getLogger(__name__)

TARGETS = ("gaussian", "gaussian_comb", "phi1_shift")
GAUSSIAN_WIDTH = 3.0


@dataclass(frozen=True)
class PairGeneratorConfig:
    a: float = settings.PAIR_A
    K: int = settings.PAIR_K
    T: float = 100.0
    h: float = 0.002

    def __post_init__(self):
        if not self.a > 0:
            raise UsageError("a must be positive", {"a": self.a})
        if self.K < 10:
            raise UsageError("truncation order K must be at least 10", {"K": self.K})
        if not (self.T > 0 and 0 < self.h < self.T):
            raise UsageError("quadrature window needs 0 < h < T", {"T": self.T, "h": self.h})

    @property
    def span_admissible(self) -> bool:
        return math.pi / 4 < self.a < math.pi / 2

    @property
    def norm_constant(self) -> float:
        return 2.0 * self.a**2 / math.pi

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(-np.abs(self.k).astype(float))


def _sinc2(at):
    return np.sinc(np.asarray(at) / np.pi) ** 2


def _comb(t, K: int):
    """Σ_{|k|≤K} e^{−|k|}e^{2πikt}"""
    out = np.ones(np.shape(t))
    for k in range(1, K + 1):
        out += 2.0 * math.exp(-k) * np.cos(2.0 * np.pi * k * t)
    return out


def phi1_eval(t, cfg: PairGeneratorConfig):
    """sinc²(at)·Σ_{|k|≤K} e^{−|k|}e^{2πikt}; real since the weights are symmetric"""
    t = np.asarray(t, dtype=float)
    return _sinc2(cfg.a * t) * _comb(t, cfg.K)


def phi2_eval(t, cfg: PairGeneratorConfig):
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * np.pi * t) * phi1_eval(t, cfg)


def truncation_bound(t, cfg: PairGeneratorConfig):
    """|Σ_{|k|>K} e^{−|k|}e^{2πikt}|·sinc²(at) bound"""
    return _sinc2(cfg.a * np.asarray(t, dtype=float)) * 2.0 * math.exp(-cfg.K) / (1.0 - math.exp(-1.0))


def phi_hat_closed_form(x, which: int, cfg: PairGeneratorConfig):
    """Σ_k e^{−|k|}·max(0, 2a − |y − 2πk|) with y = x, or y = x − π for φ̂₂"""
    if which not in (1, 2):
        raise UsageError("which must be 1 or 2", {"which": which})
    x = np.asarray(x, dtype=float)
    y = x - np.pi if which == 2 else x
    tri = np.maximum(0.0, 2.0 * cfg.a - np.abs(np.subtract.outer(y, 2.0 * np.pi * cfg.k)))
    return tri @ cfg.weights


def _tail_J(mu, T):
    """∫_T^∞ cos(μt)/t² dt"""
    mu = np.abs(np.asarray(mu, dtype=float))
    si, _ = sici(mu * T)
    return np.cos(mu * T) / T - mu * (np.pi / 2.0 - si)


def phi_hat_quadrature(x, which: int, cfg: PairGeneratorConfig, chunk: int = 32):
    """Simpson quadrature of the transform from samples of φ on [−T, T] plus the exact tail beyond T"""
    if which not in (1, 2):
        raise UsageError("which must be 1 or 2", {"which": which})
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = x - np.pi if which == 2 else x
    n = int(round(cfg.T / cfg.h))
    n += n % 2
    t = np.linspace(0.0, cfg.T, n + 1)
    phi = phi1_eval(t, cfg)

    head = np.empty(y.size)
    for start in range(0, y.size, chunk):
        ys = y[start : start + chunk]
        head[start : start + chunk] = 2.0 * simpson(phi[None, :] * np.cos(np.multiply.outer(ys, t)), x=t, axis=1)

    # φ₁cos(yt) = (1 − cos 2at)/(2a²t²)·Σ_k e^{−|k|}cos((y + 2πk)t)
    mu = np.add.outer(y, 2.0 * np.pi * cfg.k)
    two_a = 2.0 * cfg.a
    pieces = _tail_J(mu, cfg.T) - 0.5 * _tail_J(mu + two_a, cfg.T) - 0.5 * _tail_J(mu - two_a, cfg.T)
    tail = 2.0 * (pieces @ cfg.weights) / (2.0 * cfg.a**2)
    return cfg.norm_constant * (head + tail)


def gaussian_target(width: float = GAUSSIAN_WIDTH) -> Callable:
    def f(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-(t**2) / (2.0 * width**2)).astype(complex)

    return f


def gaussian_comb_target(cfg: PairGeneratorConfig, width: float = GAUSSIAN_WIDTH) -> Callable:
    """Gaussian modulated by e^{−iπt}Σe^{−|k|}e^{2πikt}; its transform sits in the gaps of φ̂₁"""

    def f(t):
        t = np.asarray(t, dtype=float)
        comb = _comb(t, cfg.K)
        return np.exp(-(t**2) / (2.0 * width**2)) * np.exp(-1j * np.pi * t) * comb

    return f


def shifted_phi1_target(lam0: float, cfg: PairGeneratorConfig) -> Callable:
    def f(t):
        return phi1_eval(np.asarray(t, dtype=float) - lam0, cfg).astype(complex)

    return f


class PairGeneratorService:
    """Closed-form pair generators and their checks"""

    def __init__(self):
        self.logger = logger

    def profile_frame(self, cfg: PairGeneratorConfig, x: Sequence[float]) -> pd.DataFrame:
        x = np.asarray(x, dtype=float)
        p1 = phi_hat_closed_form(x, 1, cfg)
        p2 = phi_hat_closed_form(x, 2, cfg)
        return pd.DataFrame({"x": x, "phi_hat_1": p1, "phi_hat_2": p2, "sum": p1 + p2})

    def positivity_margin(self, cfg: PairGeneratorConfig, grid_points: int = 256) -> PositivityReport:
        """min of φ̂₁ + φ̂₂ on [−20π, 20π]

        Evaluated at u = x/π on the dyadic grid u_j = −20 + j/(2m) so that
        touching triangle edges give an exact 0.
        """
        m = int(grid_points)
        if m < 1 or m & (m - 1):
            raise UsageError("grid_points must be a power of two", {"grid_points": grid_points})
        u = -20.0 + np.arange(80 * m + 1) / (2.0 * m)
        r = 2.0 * cfg.a / np.pi
        centres = 2.0 * cfg.k
        s1 = np.maximum(0.0, r - np.abs(np.subtract.outer(u, centres))) @ cfg.weights
        s2 = np.maximum(0.0, r - np.abs(np.subtract.outer(u - 1.0, centres))) @ cfg.weights
        total = np.pi * (s1 + s2)
        i = int(np.argmin(total))
        margin = float(total[i])
        verdict = Verdict.POSITIVE_ON_WINDOW if margin > 0 else Verdict.FAIL
        if not cfg.span_admissible:
            self.logger.info("Pair parameter outside (π/4, π/2)", extra={"a": cfg.a})
        return PositivityReport(a=cfg.a, K=cfg.K, margin=margin, argmin=float(np.pi * u[i]), verdict=verdict)

    def quadrature_agreement(self, cfg: PairGeneratorConfig, x: Sequence[float]) -> Dict[str, float]:
        x = np.asarray(x, dtype=float)
        out = {}
        for which in (1, 2):
            diff = np.abs(phi_hat_quadrature(x, which, cfg) - phi_hat_closed_form(x, which, cfg))
            out[f"max_abs_diff_{which}"] = float(np.max(diff))
        return out

    def target(self, name: str, spec: Spectrum, cfg: PairGeneratorConfig) -> Callable:
        if name == "gaussian":
            return gaussian_target()
        if name == "gaussian_comb":
            return gaussian_comb_target(cfg)
        if name == "phi1_shift":
            pts = spec.points
            lam0 = float(pts[np.argmin(np.abs(pts))])
            return shifted_phi1_target(lam0, cfg)
        raise UsageError(f"unknown span target: {name}", {"targets": list(TARGETS)})

    @staticmethod
    def integer_control(spec: Spectrum) -> Spectrum:
        """ℤ over the same window as spec"""
        reach = max(abs(spec.lower), abs(spec.upper))
        return Spectrum.arithmetic(1.0, T=max(reach, 1.0))

    def pair_span_test(
        self,
        spec: Spectrum,
        cfg: PairGeneratorConfig,
        targets: Sequence[str],
        window: float,
        ridge: Optional[float] = None,
        single: bool = False,
        mode: str = "lstsq",
        t: Optional[np.ndarray] = None,
        threads: Optional[int] = None,
    ) -> List[Dict]:
        """Fit each target by Λ-translates of φ₁ and φ₂ (φ₁ only when single) in the window"""
        if not cfg.span_admissible:
            self.logger.warning("Span test outside π/4 < a < π/2", extra={"a": cfg.a})

        def g1(s):
            return phi1_eval(s, cfg)

        def g2(s):
            return phi2_eval(s, cfg)

        generators = [g1] if single else [g1, g2]
        grid = time_grid() if t is None else t
        span = get_span_service()
        rows = []
        for name in targets:
            problem = SpanProblem.from_spectrum(spec, generators, self.target(name, spec, cfg), window, grid)
            result = span.approximate_translates(problem, ridge, mode=mode, threads=threads)
            row = {"target": name, **result.report.model_dump(), "warnings": result.warnings}
            rows.append(row)
            self.logger.info(
                "Pair span test",
                extra={"target": name, "window": window, "single": single, "l1_residual": result.l1_residual},
            )
        return rows


# Global pair generator service instance
pairgen_service = None


def get_pairgen_service() -> PairGeneratorService:
    """Get the global pair generator service instance"""
    global pairgen_service
    if pairgen_service is None:
        pairgen_service = PairGeneratorService()
    return pairgen_service
