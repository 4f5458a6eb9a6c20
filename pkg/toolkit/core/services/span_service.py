"""
Span Service
Membership checks for the class of nowhere-vanishing transforms and
approximation of targets by Λ-translates of one or more generators
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid
from scipy.optimize import linprog

from config import settings

from ..models.domain_models import SpanReport, Verdict
from ..models.errors import SearchError, UsageError, WindowError
from .expfit_service import SampledFunction, ridge_qr_solve, trapezoid_weights
from .spectrum_service import Spectrum

logger = logging.getLogger(__name__)

LP_NODES = 2048

N_NOTE = "minimum over the sampled window only; nonvanishing on all of R is not decidable from samples"


def time_grid(window: Optional[float] = None, nodes: Optional[int] = None) -> np.ndarray:
    window = settings.TIME_WINDOW if window is None else float(window)
    nodes = settings.TIME_NODES if nodes is None else int(nodes)
    return np.linspace(-window, window, nodes + 1)


def l1_norm(t: np.ndarray, values: np.ndarray) -> float:
    return float(trapezoid(np.abs(values), t))


@dataclass
class SpanProblem:
    """Approximate target(t) by Σ_j Σ_λ c_{j,λ} g_j(t − λ), λ ∈ freqs"""

    generators: List[Callable]
    freqs: np.ndarray
    target: Callable
    t: np.ndarray = field(default_factory=time_grid)
    window: float = np.inf
    tail_tol: float = field(default_factory=lambda: settings.TAIL_TOL)

    def __post_init__(self):
        if not self.generators:
            raise UsageError("a span problem needs at least one generator")
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        if self.t.size < 17:
            raise WindowError("time grid too coarse", {"nodes": int(self.t.size)})

    @classmethod
    def from_spectrum(
        cls,
        spec: Spectrum,
        generators: Sequence[Callable],
        target: Callable,
        window: float,
        t: Optional[np.ndarray] = None,
    ) -> "SpanProblem":
        pts = spec.points
        freqs = pts[np.abs(pts) <= window]
        return cls(list(generators), freqs, target, time_grid() if t is None else t, float(window))

    @property
    def n_translates(self) -> int:
        return int(self.freqs.size * len(self.generators))

    def tail_warnings(self) -> List[str]:
        ends = self.t[[0, -1]]
        warnings = []
        for j, g in enumerate(self.generators):
            tail = float(np.max(np.abs(g(ends))))
            if tail > self.tail_tol:
                warnings.append(f"generator {j} has |g| = {tail:.3g} at the time-grid ends (tail_tol {self.tail_tol:g})")
        return warnings

    def design(self, t: Optional[np.ndarray] = None, threads: Optional[int] = None) -> np.ndarray:
        """Columns g_j(t − λ), generator-major"""
        t = self.t if t is None else t
        threads = threads or settings.THREADS

        def block(g):
            return np.asarray(g(np.subtract.outer(t, self.freqs)), dtype=complex)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            blocks = list(pool.map(block, self.generators))
        return np.hstack(blocks) if blocks else np.zeros((t.size, 0), dtype=complex)


@dataclass
class SpanResult:
    coefs: np.ndarray
    l1_residual: float
    weighted_l2_residual: float
    target_l1: float
    report: SpanReport
    warnings: List[str] = field(default_factory=list)


class SpanService:
    """Translate approximation and nonvanishing checks"""

    def __init__(self):
        self.logger = logger

    def check_in_N(self, phi_hat, x: Optional[np.ndarray] = None) -> Dict:
        """min |φ̂| over the sampled window"""
        if isinstance(phi_hat, SampledFunction):
            x, values = phi_hat.x, phi_hat.values
        else:
            if x is None:
                raise UsageError("sample locations are required for raw values")
            values = np.asarray(phi_hat)
        x = np.asarray(x, dtype=float)
        mags = np.abs(values)
        i = int(np.argmin(mags))
        min_abs = float(mags[i])
        verdict = Verdict.POSITIVE_ON_WINDOW if min_abs > 0 else Verdict.FAIL
        return {
            "min_abs": min_abs,
            "argmin": float(x[i]),
            "window": [float(x[0]), float(x[-1])],
            "verdict": verdict,
            "note": N_NOTE,
        }

    def approximate_translates(
        self,
        problem: SpanProblem,
        ridge: Optional[float] = None,
        mode: str = "lstsq",
        threads: Optional[int] = None,
    ) -> SpanResult:
        """Fit the target in weighted L² (weight 1 + t²) or in L¹ by LP; report the L¹ residual"""
        ridge = settings.RIDGE if ridge is None else float(ridge)
        t = problem.t
        target = np.asarray(problem.target(t), dtype=complex)
        target_l1 = l1_norm(t, target)
        if not np.isfinite(target_l1):
            raise WindowError("target is not integrable on the time grid")
        warnings = problem.tail_warnings()
        for w in warnings:
            self.logger.warning("Generator tail above tolerance", extra={"detail": w})

        m = problem.n_translates
        if m == 0:
            coefs = np.zeros(0, dtype=complex)
        elif mode == "lstsq":
            coefs = self._fit_lstsq(problem, target, ridge, threads)
        elif mode == "lp":
            coefs = self._fit_lp(problem, threads)
        else:
            raise UsageError(f"unknown span mode: {mode}", {"modes": ["lstsq", "lp"]})

        A = problem.design(t, threads)
        residual = target - A @ coefs if m else target
        l1 = l1_norm(t, residual)
        if l1 > target_l1:
            warnings.append("fit worse than the zero combination; coefficients reset to 0")
            coefs = np.zeros(m, dtype=complex)
            residual, l1 = target, target_l1
        wl2 = float(np.sqrt(trapezoid(np.abs(residual) ** 2 * (1.0 + t**2), t)))

        report = SpanReport(
            window=float(problem.window),
            n_translates=m,
            l1_residual=l1,
            coef_norm=float(np.linalg.norm(coefs)),
            target_l1=target_l1,
            weighted_l2_residual=wl2,
            mode=mode,
            generators=len(problem.generators),
        )
        self.logger.info(
            "Translate approximation",
            extra={"mode": mode, "n_translates": m, "l1_residual": l1, "target_l1": target_l1},
        )
        return SpanResult(coefs, l1, wl2, target_l1, report, warnings)

    def _fit_lstsq(self, problem: SpanProblem, target: np.ndarray, ridge: float, threads) -> np.ndarray:
        t = problem.t
        sw = np.sqrt(trapezoid_weights(t) * (1.0 + t**2))
        A = problem.design(t, threads)
        return ridge_qr_solve(sw[:, None] * A, sw * target, ridge)

    def _fit_lp(self, problem: SpanProblem, threads) -> np.ndarray:
        """min Σ w_i (|Re r_i| + |Im r_i|) on a coarser grid, HiGHS"""
        t = np.linspace(problem.t[0], problem.t[-1], min(LP_NODES, problem.t.size - 1) + 1)
        w = trapezoid_weights(t)
        A = problem.design(t, threads)
        b = np.asarray(problem.target(t), dtype=complex)
        n, m = A.shape
        Ar, Ai = sparse.csr_matrix(A.real), sparse.csr_matrix(A.imag)
        eye = sparse.identity(n, format="csr")
        zero = None
        # x = [Re c, Im c, u, v] with u ≥ |Re r|, v ≥ |Im r|
        A_ub = sparse.bmat(
            [
                [-Ar, Ai, -eye, zero],
                [Ar, -Ai, -eye, zero],
                [-Ai, -Ar, zero, -eye],
                [Ai, Ar, zero, -eye],
            ],
            format="csr",
        )
        b_ub = np.concatenate([-b.real, b.real, -b.imag, b.imag])
        cost = np.concatenate([np.zeros(2 * m), w, w])
        bounds = [(None, None)] * (2 * m) + [(0, None)] * (2 * n)
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0:
            raise SearchError("L1 linear program did not solve", {"status": int(res.status), "message": res.message})
        return res.x[:m] + 1j * res.x[m : 2 * m]


# Global span service instance
span_service = None


def get_span_service() -> SpanService:
    """Get the global span service instance"""
    global span_service
    if span_service is None:
        span_service = SpanService()
    return span_service
