"""
Generator Service
Stage-by-stage construction of a single Λ-generator: a dense family of
compactly supported transforms, nested windows J_k ⊂ I_k, decreasing
piecewise-linear profiles G_k with exponential-sum multipliers P_k, the
assembled profile Φ and the error certificate for each stage.

Transforms use f̂(x) = ∫f(t)e^{ixt}dt, so a translate τ_λφ = φ(· − λ) has
transform e^{iλx}φ̂ and Σ c_λ τ_λφ corresponds to P·Φ.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import BSpline

from config import settings

from ..models.domain_models import StageCertificate, TelescopingReport
from ..models.errors import StageFitError, UsageError
from .expfit_service import SampledFunction, TrigPolynomial, get_expfit_service, l2_norm
from .span_service import l1_norm, time_grid
from .spectrum_service import Spectrum

logger = logging.getLogger(__name__)

FIRST_PROFILE = ((0.0, 0.16), (1.0, 0.152))
RESCALE = 0.9
RAMP_BISECTIONS = 40

_BSPLINE = BSpline.basis_element(np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), extrapolate=False)
_BSPLINE_D = _BSPLINE.derivative()


@dataclass(frozen=True)
class GeneratorSchedule:
    """ε_k = 2^{−k}, δ_n = 2^{−n−1}, I_k = (−kL, kL), J_k = I_k minus a unit interval at each end"""

    L: float = settings.GEN_L

    def __post_init__(self):
        if not self.L > 1:
            raise UsageError("interval step L must exceed 1 for strict nesting", {"L": self.L})

    @staticmethod
    def eps(k: int) -> float:
        return 2.0 ** (-k)

    @staticmethod
    def delta(n: int) -> float:
        return 2.0 ** (-n - 1)

    @staticmethod
    def tail_sum(k: int, K: int) -> float:
        """δ_k + … + δ_K"""
        return float(sum(2.0 ** (-n - 1) for n in range(k, K + 1)))

    def I(self, k: int) -> float:
        """Half-length of I_k; I_0 is J_1"""
        return self.J(1) if k == 0 else k * self.L

    def J(self, k: int) -> float:
        return k * self.L - 1.0


def _pl_sobolev_parts(knots: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Exact (‖h‖₂, ‖h′‖₂) on ℝ for the even piecewise-linear h with the given knots on [0, ∞)"""
    dx = np.diff(knots)
    v0, v1 = values[:-1], values[1:]
    l2 = 2.0 * np.sum(dx * (v0**2 + v0 * v1 + v1**2) / 3.0)
    d2 = 2.0 * np.sum((v1 - v0) ** 2 / dx)
    return math.sqrt(max(l2, 0.0)), math.sqrt(max(d2, 0.0))


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Even profile, linear between knots on [0, ∞), positive and strictly decreasing up to the last knot where it is 0"""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots.size < 2:
            raise UsageError("profile needs matching knots and values, at least two")
        if knots[0] != 0.0 or np.any(np.diff(knots) <= 0):
            raise UsageError("profile knots must start at 0 and increase", {"knots": knots.tolist()})
        if values[-1] != 0.0 or np.any(values[:-1] <= 0) or np.any(np.diff(values) >= 0):
            raise UsageError("profile must be positive, strictly decreasing and end at 0", {"values": values.tolist()})
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @classmethod
    def first(cls, schedule: GeneratorSchedule) -> "PiecewiseLinearProfile":
        (x0, v0), (_, v1) = FIRST_PROFILE
        return cls(np.array([x0, schedule.J(1), schedule.I(1)]), np.array([v0, v1, 0.0]))

    @property
    def support(self) -> float:
        return float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def __call__(self, x):
        return np.interp(np.abs(np.asarray(x, dtype=float)), self.knots, self.values, right=0.0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        seg = np.clip(np.searchsorted(self.knots, ax, side="right") - 1, 0, self.slopes.size - 1)
        d = np.where(ax < self.support, self.slopes[seg], 0.0)
        return np.sign(x) * d

    @property
    def bound(self) -> float:
        """B(G) = sup|G| + sup|G′|"""
        return float(self.values[0] + np.max(np.abs(self.slopes)))

    @property
    def norm(self) -> float:
        """Global Sobolev norm ‖G‖₂ + ‖G′‖₂"""
        return float(sum(_pl_sobolev_parts(self.knots, self.values)))

    def distance(self, other: "PiecewiseLinearProfile") -> float:
        """‖self − other‖_ℝ, exact on the union of knots"""
        knots = np.union1d(self.knots, other.knots)
        return float(sum(_pl_sobolev_parts(knots, self(knots) - other(knots))))

    def agrees_with(self, other: "PiecewiseLinearProfile", half_length: float) -> bool:
        knots = np.union1d(self.knots, other.knots)
        knots = knots[knots <= half_length]
        return bool(np.array_equal(self(knots), other(knots)))

    def with_tail(self, height: float, apex: float, end: float) -> "PiecewiseLinearProfile":
        """Replace the final zero at `apex` by `height` and append a zero at `end`"""
        if self.knots[-1] != apex:
            raise UsageError("tail apex must be the current support end", {"apex": apex, "support": self.support})
        knots = np.append(self.knots, end)
        values = np.append(self.values[:-1], [height, 0.0])
        return PiecewiseLinearProfile(knots, values)

    def sampled(self, lo: float, hi: float, nodes: Optional[int] = None) -> SampledFunction:
        return SampledFunction.from_callable(self, lo, hi, nodes, self.derivative)

    def inverse_transform(self, t) -> np.ndarray:
        """φ(t) = (1/2π)∫G(x)e^{−ixt}dx, exact segment by segment"""
        t = np.asarray(t, dtype=float)
        x0, x1 = self.knots[:-1], self.knots[1:]
        A, B = 0.5 * (x1 + x0), 0.5 * (x1 - x0)
        coef = -2.0 * self.slopes * A * B / np.pi
        tt = t[..., None]
        return np.sinc(A * tt / np.pi) * np.sinc(B * tt / np.pi) @ coef

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"knot": self.knots, "value": self.values})


def _unpair(n: int) -> Tuple[int, int]:
    """Inverse Cantor pairing"""
    w = (math.isqrt(8 * n + 1) - 1) // 2
    y = n - w * (w + 1) // 2
    return w - y, y


def _zigzag(i: int) -> int:
    return (i + 1) // 2 if i % 2 == 0 else -((i + 1) // 2)


@dataclass(frozen=True)
class FamilyIndex:
    repeat: int
    level: int
    centre: float
    width: float
    height: float

    @classmethod
    def decode(cls, k: int) -> "FamilyIndex":
        if k < 1:
            raise UsageError("family index starts at 1", {"k": k})
        repeat, rest = _unpair(k - 1)
        level, rest = _unpair(rest)
        ci, rest = _unpair(rest)
        wi, hi = _unpair(rest)
        return cls(repeat, level, _zigzag(ci) / 4.0, 2.0 ** (-wi), 2.0 ** (-hi))


@dataclass
class FamilyMember:
    """f̂(x) = Σ_i c_i B(x/(sh) − i), the cubic B-spline quasi-interpolant of a dyadic tent, rescaled by s"""

    k: int
    h: float
    offsets: np.ndarray
    coefs: np.ndarray
    scale: float = 1.0
    index: Optional[FamilyIndex] = None

    @classmethod
    def zero(cls, k: int = 0) -> "FamilyMember":
        return cls(k, 1.0, np.zeros(0, dtype=int), np.zeros(0))

    @property
    def support(self) -> Tuple[float, float]:
        if self.coefs.size == 0:
            return 0.0, 0.0
        return (
            self.scale * self.h * (self.offsets[0] - 2.0),
            self.scale * self.h * (self.offsets[-1] + 2.0),
        )

    def _u(self, x):
        return np.subtract.outer(np.asarray(x, dtype=float) / (self.scale * self.h), self.offsets)

    def value(self, x):
        if self.coefs.size == 0:
            return np.zeros(np.shape(x))
        return np.nan_to_num(_BSPLINE(self._u(x))) @ self.coefs

    def derivative(self, x):
        if self.coefs.size == 0:
            return np.zeros(np.shape(x))
        return np.nan_to_num(_BSPLINE_D(self._u(x))) @ self.coefs / (self.scale * self.h)

    def time(self, t):
        """f(t) = (1/2π)∫f̂(x)e^{−ixt}dx = s·Σ c_i (h/2π) e^{−i·ih·st} sinc⁴(hst/2)"""
        t = np.asarray(t, dtype=float)
        if self.coefs.size == 0:
            return np.zeros(t.shape, dtype=complex)
        st = self.scale * t
        phases = np.exp(-1j * self.h * np.multiply.outer(st, self.offsets)) @ self.coefs
        return self.scale * self.h / (2.0 * np.pi) * phases * np.sinc(self.h * st / (2.0 * np.pi)) ** 4

    def sampled(self, lo: float, hi: float, nodes: Optional[int] = None) -> SampledFunction:
        return SampledFunction.from_callable(self.value, lo, hi, nodes, self.derivative)


def dense_family(k: int, schedule: Optional[GeneratorSchedule] = None) -> FamilyMember:
    """k-th member of the enumeration, rescaled to sit inside J_k"""
    schedule = schedule or GeneratorSchedule()
    idx = FamilyIndex.decode(k)
    h = idx.width * 2.0 ** (-idx.level)
    lo = math.ceil((idx.centre - idx.width) / h)
    hi = math.floor((idx.centre + idx.width) / h)
    offsets = np.arange(lo, hi + 1)
    coefs = idx.height * np.maximum(0.0, 1.0 - np.abs(offsets * h - idx.centre) / idx.width)
    keep = coefs > 0
    offsets, coefs = offsets[keep], coefs[keep]
    ext = h * max(abs(offsets[0] - 2.0), abs(offsets[-1] + 2.0))
    half = schedule.J(k)
    scale = RESCALE * half / ext if ext >= half else 1.0
    return FamilyMember(k, h, offsets, coefs, scale, idx)


@dataclass
class StageResult:
    G: PiecewiseLinearProfile
    P: TrigPolynomial
    member: FamilyMember
    certificate: StageCertificate
    warnings: List[str] = field(default_factory=list)


class GeneratorService:
    """Finite-stage construction of a Λ-generator"""

    def __init__(self, schedule: Optional[GeneratorSchedule] = None):
        self.logger = logger
        self.schedule = schedule or GeneratorSchedule()

    def _next_profile(self, prev: PiecewiseLinearProfile, k: int, prev_bound: float) -> Tuple[PiecewiseLinearProfile, float, float]:
        """Largest ramp height found by bisection that keeps max(1, B(P))·‖G − G_prev‖ ≤ δ_k, B(G) < 1, ‖G‖ ≤ 1 and monotonicity"""
        apex, end = self.schedule.I(k - 1), self.schedule.I(k)
        delta = self.schedule.delta(k)
        last = float(prev.values[-2])

        def attempt(height):
            if not 0 < height < last:
                return None
            G = prev.with_tail(height, apex, end)
            eq2 = prev_bound * G.distance(prev)
            if eq2 <= delta and G.bound < 1.0 and G.norm <= 1.0:
                return G, eq2
            return None

        hi = 0.5 * last
        ok = attempt(hi)
        lo = hi
        halvings = 0
        while ok is None:
            lo *= 0.5
            halvings += 1
            if halvings > 1000 or lo == 0.0:
                raise StageFitError("no admissible ramp height for the next profile", {"stage": k, "prev_bound": prev_bound})
            ok = attempt(lo)
        if lo < hi:
            for _ in range(RAMP_BISECTIONS):
                mid = 0.5 * (lo + hi)
                trial = attempt(mid)
                if trial is None:
                    hi = mid
                else:
                    lo, ok = mid, trial
        G, eq2 = ok
        return G, eq2, lo

    def frequencies(self, spec: Spectrum, k: int, freq_budget: Optional[int] = None) -> np.ndarray:
        """Λ ∩ [−4|I_k|, 4|I_k|], optionally the freq_budget points of smallest modulus"""
        pts = spec.points
        reach = 4.0 * 2.0 * self.schedule.I(k)
        freqs = pts[np.abs(pts) <= reach]
        if freq_budget is not None and freqs.size > freq_budget:
            order = np.argsort(np.abs(freqs), kind="stable")[:freq_budget]
            freqs = np.sort(freqs[order])
        return freqs

    def build_stage(
        self,
        prev: Optional[PiecewiseLinearProfile],
        k: int,
        spec: Spectrum,
        prev_bound: float = 1.0,
        freq_budget: Optional[int] = None,
        ridge: Optional[float] = None,
        nodes: Optional[int] = None,
    ) -> StageResult:
        """G_k from G_{k−1}, then P_k fitted so that ‖f̂_k − P_k G_k‖_ℝ ≤ δ_k"""
        delta = self.schedule.delta(k)
        if prev is None:
            if k != 1:
                raise UsageError("only stage 1 starts without a previous profile", {"stage": k})
            G, eq2, height = PiecewiseLinearProfile.first(self.schedule), 0.0, 0.0
        else:
            G, eq2, height = self._next_profile(prev, k, max(1.0, prev_bound))

        half = self.schedule.I(k)
        member = dense_family(k, self.schedule)
        target = member.sampled(-half, half, nodes)
        weight = G.sampled(-half, half, nodes)
        freqs = self.frequencies(spec, k, freq_budget)
        fit = get_expfit_service().fit_exponentials(target, freqs, ridge, weight, refine=False)

        cert = StageCertificate(
            stage=k,
            delta=delta,
            eq1_measured=fit.residual,
            eq2_measured=eq2,
            B_G=G.bound,
            B_P=fit.poly.bound,
            freq_count=int(freqs.size),
            G_norm=G.norm,
            ramp_height=height,
            eq1_ok=fit.residual <= delta,
            eq2_ok=eq2 <= delta,
        )
        self.logger.info("Stage built", extra=cert.model_dump())
        if not cert.eq1_ok:
            raise StageFitError(
                "fit residual did not reach δ_k",
                {"stage": k, "delta": delta, "achieved": fit.residual, "freq_count": int(freqs.size)},
            )
        return StageResult(G, fit.poly, member, cert, list(fit.warnings))

    def sanity_check(self, spec: Spectrum, k: int, freq_budget: Optional[int] = None, threshold: float = 1e-2) -> Optional[str]:
        """Bump fit at ρ = |I_k|/2; a large residual hints that R(Λ) is too small for this stage"""
        svc = get_expfit_service()
        rho = self.schedule.I(k)
        freqs = self.frequencies(spec, k, freq_budget)
        fit = svc.fit_exponentials(svc.bump(rho), freqs, refine=False)
        if fit.residual > threshold:
            msg = f"bump fit residual {fit.residual:.3g} at rho={rho:g} exceeds {threshold:g}"
            self.logger.warning("Radius sanity check failed", extra={"stage": k, "rho": rho, "residual": fit.residual})
            return msg
        return None

    def run(
        self,
        spec: Spectrum,
        stages: int,
        freq_budget: Optional[int] = None,
        ridge: Optional[float] = None,
        nodes: Optional[int] = None,
        sanity: bool = False,
    ) -> List[StageResult]:
        """Stages 1..K; on failure the completed stages travel in the error details"""
        if stages < 1:
            raise UsageError("at least one stage is required", {"stages": stages})
        results: List[StageResult] = []
        prev, bound = None, 1.0
        for k in range(1, stages + 1):
            warnings = []
            if sanity:
                msg = self.sanity_check(spec, k, freq_budget)
                if msg:
                    warnings.append(msg)
            try:
                stage = self.build_stage(prev, k, spec, bound, freq_budget, ridge, nodes)
            except StageFitError as e:
                e.details["completed"] = [r.certificate.model_dump() for r in results]
                raise
            stage.warnings.extend(warnings)
            results.append(stage)
            prev, bound = stage.G, max(bound, stage.P.bound)
        return results

    def assemble_phi(self, stages: Sequence[StageResult], t: Optional[np.ndarray] = None) -> Tuple[PiecewiseLinearProfile, np.ndarray, np.ndarray]:
        """Φ = G_k on I_{k−1} for every k, and φ on the time grid"""
        if len(stages) < 2:
            raise UsageError("assembly needs at least two completed stages", {"stages": len(stages)})
        for k in range(1, len(stages)):
            half = self.schedule.I(k - 1)
            if not stages[k].G.agrees_with(stages[k - 1].G, half):
                raise StageFitError("stage profiles disagree on their common window", {"stage": k + 1, "half_length": half})
        Phi = stages[-1].G
        t = time_grid() if t is None else np.asarray(t, dtype=float)
        return Phi, t, Phi.inverse_transform(t)

    def _error_parts(self, stage: StageResult, Phi: PiecewiseLinearProfile, regions, nodes: int) -> Tuple[float, float]:
        """(‖ê‖₂, ‖ê′‖₂) over a union of intervals, ê = f̂_k − P_kΦ"""
        l2, d2 = 0.0, 0.0
        for lo, hi in regions:
            x = np.linspace(lo, hi, nodes + 1)
            p, dp = stage.P(x), stage.P.derivative(x)
            e = stage.member.value(x) - p * Phi(x)
            de = stage.member.derivative(x) - dp * Phi(x) - p * Phi.derivative(x)
            l2 += l2_norm(x, e) ** 2
            d2 += l2_norm(x, de) ** 2
        return math.sqrt(l2), math.sqrt(d2)

    def telescoping_check(
        self,
        stages: Sequence[StageResult],
        k: int,
        nodes: Optional[int] = None,
        t: Optional[np.ndarray] = None,
        chunk: int = 64,
    ) -> TelescopingReport:
        """Fourier-side and time-side errors of stage k against the assembled Φ"""
        K = len(stages)
        if not 1 <= k <= K:
            raise UsageError("stage index out of range", {"k": k, "stages": K})
        nodes = nodes or settings.GRID_NODES
        stage = stages[k - 1]
        Phi = stages[-1].G
        X = self.schedule.I(K)

        l2, d2 = self._error_parts(stage, Phi, [(-X, X)], nodes)
        direct = l2 + d2
        l2f, d2f = self._error_parts(stage, Phi, [(-X, X)], 2 * nodes)
        tail_estimate = abs((l2f + d2f) - direct)

        Ik = self.schedule.I(k)
        split = sum(self._error_parts(stage, Phi, [(-Ik, Ik)], nodes))
        for n in range(k, K):
            a, b = self.schedule.I(n), self.schedule.I(n + 1)
            split += sum(self._error_parts(stage, Phi, [(-b, -a), (a, b)], nodes))

        t = time_grid() if t is None else np.asarray(t, dtype=float)
        err = stage.member.time(t)
        freqs, coefs = stage.P.freqs, stage.P.coefs
        for start in range(0, freqs.size, chunk):
            lam = freqs[start : start + chunk]
            err = err - Phi.inverse_transform(np.subtract.outer(t, lam)) @ coefs[start : start + chunk]
        l1_quad = l1_norm(t, err)
        T = float(min(abs(t[0]), abs(t[-1])))
        l1_tail = math.sqrt(2.0 / T) * d2f / math.sqrt(2.0 * math.pi)

        report = TelescopingReport(
            k=k,
            stages=K,
            fourier_direct=direct,
            fourier_split=split,
            fourier_target=self.schedule.tail_sum(k, K),
            tail_estimate=tail_estimate,
            l1_quadrature=l1_quad,
            l1_tail_bound=l1_tail,
            l1_measured=l1_quad + l1_tail,
            eps_k=self.schedule.eps(k),
        )
        self.logger.info("Telescoping check", extra=report.model_dump())
        return report

    def family_distance(self, k: int, g: Callable, t: np.ndarray) -> float:
        """‖g − f_k‖₁ by trapezoid on t"""
        member = dense_family(k, self.schedule)
        return l1_norm(t, np.asarray(g(t), dtype=complex) - member.time(t))

    def nearest_member(self, g: Callable, k_max: int, t: np.ndarray) -> Tuple[int, float]:
        """Family index in 1..k_max closest to g in L¹"""
        best = (0, math.inf)
        for k in range(1, k_max + 1):
            d = self.family_distance(k, g, t)
            if d < best[1]:
                best = (k, d)
        return best


# Global generator service instance
generator_service = None


def get_generator_service() -> GeneratorService:
    """Get the global generator service instance"""
    global generator_service
    if generator_service is None:
        generator_service = GeneratorService()
    return generator_service
