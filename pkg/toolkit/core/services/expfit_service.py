"""
Exponential Fitting Service
Sobolev norms on intervals, least-squares approximation by exponentials
e^{iλζ} with λ in a spectrum, and spectral-radius residual scans
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.integrate import trapezoid

from config import settings

from ..models.errors import IllConditionedError, WindowError
from .spectrum_service import Spectrum

logger = logging.getLogger(__name__)

MIN_NODES = 17


@dataclass
class SampledFunction:
    """Values and derivative of a function on a uniform grid of [lo, hi].

    When built from callables the function can be resampled, which is what
    the Gram refinement in fit_exponentials relies on.
    """

    lo: float
    hi: float
    x: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray
    source: Optional[Callable] = field(default=None, repr=False)
    source_derivative: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise WindowError("sampled function needs hi > lo", {"lo": self.lo, "hi": self.hi})
        if self.x.size < MIN_NODES:
            raise WindowError("sampled function needs at least 16 grid intervals", {"nodes": int(self.x.size)})
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.derivative_values))):
            raise WindowError("sampled function has non-finite values")

    @classmethod
    def from_callable(
        cls,
        f: Callable,
        lo: float,
        hi: float,
        nodes: Optional[int] = None,
        df: Optional[Callable] = None,
    ) -> "SampledFunction":
        nodes = nodes or settings.GRID_NODES
        x = np.linspace(lo, hi, nodes + 1)
        values = np.asarray(f(x), dtype=complex)
        if df is not None:
            deriv = np.asarray(df(x), dtype=complex)
        else:
            deriv = np.gradient(values, x)
        return cls(lo, hi, x, values, deriv, f, df)

    @property
    def nodes(self) -> int:
        return int(self.x.size - 1)

    def resample(self, nodes: int) -> "SampledFunction":
        if self.source is None:
            return self
        return SampledFunction.from_callable(self.source, self.lo, self.hi, nodes, self.source_derivative)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x": self.x,
                "re": self.values.real,
                "im": self.values.imag,
                "dre": self.derivative_values.real,
                "dim": self.derivative_values.imag,
            }
        )


@dataclass(frozen=True)
class TrigPolynomial:
    """P(ζ) = Σ c_λ e^{iλζ}"""

    freqs: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        coefs = np.asarray(self.coefs, dtype=complex)
        if freqs.shape != coefs.shape:
            raise ValueError("freqs and coefs must have the same length")
        if np.unique(freqs).size != freqs.size:
            raise ValueError("frequencies must be distinct")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coefs", coefs)

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls(np.zeros(0), np.zeros(0, dtype=complex))

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        if self.freqs.size == 0:
            return np.zeros(zeta.shape, dtype=complex)
        return np.exp(1j * np.multiply.outer(zeta, self.freqs)) @ self.coefs

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        if self.freqs.size == 0:
            return np.zeros(zeta.shape, dtype=complex)
        return np.exp(1j * np.multiply.outer(zeta, self.freqs)) @ (1j * self.freqs * self.coefs)

    @property
    def bound(self) -> float:
        """B(P) = Σ|c_λ|(1+|λ|) ≥ sup|P| + sup|P′| on ℝ"""
        return float(np.sum(np.abs(self.coefs) * (1.0 + np.abs(self.freqs))))

    @property
    def terms(self) -> Dict[float, complex]:
        return dict(zip(self.freqs.tolist(), self.coefs.tolist()))


@dataclass
class FitResult:
    poly: TrigPolynomial
    residual: float
    coef_norm: float
    nodes: int
    warnings: List[str] = field(default_factory=list)


def l2_norm(x: np.ndarray, values: np.ndarray) -> float:
    return float(np.sqrt(max(trapezoid(np.abs(values) ** 2, x), 0.0)))


def sobolev_norm(h: SampledFunction) -> float:
    """‖h‖_I = ‖h‖_{L²(I)} + ‖h′‖_{L²(I)}, composite trapezoid"""
    return l2_norm(h.x, h.values) + l2_norm(h.x, h.derivative_values)


def l1_from_sobolev(phi_hat: SampledFunction, tail_tol: Optional[float] = None) -> float:
    """Upper bound for ‖φ‖₁ given φ̂ sampled on a window that holds its support"""
    tail_tol = settings.TAIL_TOL if tail_tol is None else tail_tol
    tail = float(max(abs(phi_hat.values[0]), abs(phi_hat.values[-1])))
    if tail > tail_tol:
        raise WindowError(
            "window too small: transform has not decayed at the window ends",
            {"tail": tail, "tail_tol": tail_tol, "window": [phi_hat.lo, phi_hat.hi]},
        )
    return sobolev_norm(phi_hat)


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights on a uniform grid"""
    w = np.full(x.size, x[1] - x[0])
    w[[0, -1]] *= 0.5
    return w


def ridge_qr_solve(A: np.ndarray, b: np.ndarray, ridge: float) -> np.ndarray:
    """argmin ‖Ac − b‖² + ridge·‖c‖² via column-pivoted QR on the stacked system"""
    m = A.shape[1]
    if ridge > 0:
        A = np.vstack([A, np.sqrt(ridge) * np.eye(m)])
        b = np.concatenate([b, np.zeros(m, dtype=b.dtype)])
    Q, R, perm = linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if ridge == 0 and (diag.size == 0 or diag[-1] <= np.finfo(float).eps * max(A.shape) * diag[0]):
        raise IllConditionedError(
            "least-squares system is numerically singular; use ridge > 0",
            {"columns": int(m), "r_min": float(diag[-1]) if diag.size else 0.0, "r_max": float(diag[0]) if diag.size else 0.0},
        )
    y = linalg.solve_triangular(R, Q.conj().T @ b)
    coefs = np.empty(m, dtype=np.result_type(A, b))
    coefs[perm] = y
    return coefs


class ExpFitService:
    """Sobolev least squares in exponentials"""

    def __init__(self):
        self.logger = logger

    def _design(self, x, freqs, weight: Optional[SampledFunction]):
        E = np.exp(1j * np.multiply.outer(x, freqs))
        dE = E * (1j * freqs)
        if weight is None:
            return E, dE
        w = weight.values[:, None]
        dw = weight.derivative_values[:, None]
        return E * w, dE * w + E * dw

    def _solve(self, target: SampledFunction, freqs: np.ndarray, ridge: float, weight: Optional[SampledFunction]):
        x = target.x
        sw = np.sqrt(trapezoid_weights(x))
        basis, dbasis = self._design(x, freqs, weight)
        A = np.vstack([sw[:, None] * basis, sw[:, None] * dbasis])
        b = np.concatenate([sw * target.values, sw * target.derivative_values])
        coefs = ridge_qr_solve(A, b, ridge)
        return coefs, A.conj().T @ A

    def fit_exponentials(
        self,
        target: SampledFunction,
        freqs: Sequence[float],
        ridge: Optional[float] = None,
        weight: Optional[SampledFunction] = None,
        refine: bool = True,
    ) -> FitResult:
        """Minimise ‖target − Σ c_λ e^{iλζ}·W‖_I² + ridge·‖c‖²; residual is reported ridge-free"""
        ridge = settings.RIDGE if ridge is None else float(ridge)
        freqs = np.asarray(freqs, dtype=float)
        if np.unique(freqs).size != freqs.size:
            raise ValueError("frequencies must be distinct")
        if freqs.size == 0:
            poly = TrigPolynomial.zero()
            return FitResult(poly, sobolev_norm(target), 0.0, target.nodes)

        warnings: List[str] = []
        coefs, gram = self._solve(target, freqs, ridge, weight)
        if refine and target.source is not None:
            nodes = target.nodes
            while True:
                if 2 * nodes > settings.GRID_MAX_NODES:
                    warnings.append(f"Gram entries not stable to {settings.GRAM_RTOL:g} at {nodes} nodes")
                    self.logger.warning(
                        "Gram refinement capped",
                        extra={"nodes": nodes, "freqs": int(freqs.size), "rtol": settings.GRAM_RTOL},
                    )
                    break
                nodes *= 2
                finer = target.resample(nodes)
                w_finer = weight.resample(nodes) if weight is not None else None
                new_coefs, new_gram = self._solve(finer, freqs, ridge, w_finer)
                change = np.max(np.abs(new_gram - gram)) / max(np.max(np.abs(new_gram)), np.finfo(float).tiny)
                target, weight, coefs, gram = finer, w_finer, new_coefs, new_gram
                if change <= settings.GRAM_RTOL:
                    break

        poly = TrigPolynomial(freqs, coefs)
        residual = self.residual(target, poly, weight)
        result = FitResult(poly, residual, float(np.linalg.norm(coefs)), target.nodes, warnings)
        self.logger.debug(
            "Exponential fit",
            extra={"freqs": int(freqs.size), "residual": residual, "coef_norm": result.coef_norm, "nodes": result.nodes},
        )
        return result

    def residual(self, target: SampledFunction, poly: TrigPolynomial, weight: Optional[SampledFunction] = None) -> float:
        """‖target − P·W‖_I"""
        p, dp = poly(target.x), poly.derivative(target.x)
        if weight is not None:
            p, dp = p * weight.values, dp * weight.values + p * weight.derivative_values
        diff = SampledFunction(target.lo, target.hi, target.x, target.values - p, target.derivative_values - dp)
        return sobolev_norm(diff)

    @staticmethod
    def bump(rho: float, nodes: Optional[int] = None) -> SampledFunction:
        """C¹ bump (1 − (ζ/ρ)²)² on [−ρ, ρ]"""

        def f(z):
            return (1.0 - (z / rho) ** 2) ** 2

        def df(z):
            return -4.0 * z / rho**2 * (1.0 - (z / rho) ** 2)

        return SampledFunction.from_callable(f, -rho, rho, nodes, df)

    def radius_scan(
        self,
        spec: Spectrum,
        rho_grid: Sequence[float],
        max_freqs: float,
        ridge: Optional[float] = None,
        nodes: Optional[int] = None,
        threads: Optional[int] = None,
        refine: bool = False,
    ) -> List[Dict[str, float]]:
        """Residual of the best bump fit on [−ρ, ρ] for each ρ, on a fixed grid"""
        pts = spec.points
        freqs = pts[np.abs(pts) <= max_freqs]
        threads = threads or settings.THREADS

        def one(rho):
            fit = self.fit_exponentials(self.bump(float(rho), nodes), freqs, ridge, refine=refine)
            return {"rho": float(rho), "residual": fit.residual, "coef_norm": fit.coef_norm, "n_freqs": int(freqs.size)}

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows = list(pool.map(one, rho_grid))
        self.logger.info("Radius scan complete", extra={"rows": len(rows), "n_freqs": int(freqs.size)})
        return rows

    @staticmethod
    def estimate_radius(rows: List[Dict[str, float]], jump: float = 10.0) -> Optional[float]:
        """First ρ where the residual exceeds jump × its running minimum; midpoint of that bracket"""
        rows = sorted(rows, key=lambda r: r["rho"])
        running = np.inf
        prev = None
        for row in rows:
            if prev is not None and row["residual"] > jump * running:
                return 0.5 * (prev["rho"] + row["rho"])
            running = min(running, row["residual"])
            prev = row
        return None

    @staticmethod
    def cross_check_radius(rho_star: Optional[float], density: float) -> Dict[str, Optional[float]]:
        """Compare an estimated radius with π·D"""
        predicted = np.pi * density
        diff = None if rho_star is None else abs(rho_star - predicted)
        return {"rho_star": rho_star, "density": density, "predicted": predicted, "abs_diff": diff}


# Global exponential fitting service instance
expfit_service = None


def get_expfit_service() -> ExpFitService:
    """Get the global exponential fitting service instance"""
    global expfit_service
    if expfit_service is None:
        expfit_service = ExpFitService()
    return expfit_service
