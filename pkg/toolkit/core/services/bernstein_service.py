"""
Bernstein Service
Generalized Bernstein classes B_σ: the weight ω built from σ, zero-count
bounds, logarithmic integrals, Carleman-formula diagnostics and the
uniqueness certificate for a Ψ-substantial family
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from config import settings

from ..models.domain_models import (
    Applicability,
    CarlemanReport,
    CarlemanRow,
    CertificateStatus,
    LogIntegralReport,
    UniquenessCertificate,
)
from ..models.errors import GrowthClaimError, GrowthFunctionError, QuadratureError, UsageError, WindowError
from ..models.growth import GrowthFunction, PsiFunction
from .density_service import IntervalFamily
from .spectrum_service import Spectrum

logger = logging.getLogger(__name__)

GOLDEN = (1 + math.sqrt(5)) / 2
MAX_DOUBLINGS = 1000
QUAD_LIMIT = 200


def gss(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    """Golden-section search for the minimiser of a unimodal f on [a, b]"""
    c = b - (b - a) / GOLDEN
    d = a + (b - a) / GOLDEN
    while abs(c - d) > tol * max(1.0, abs(c) + abs(d)):
        if f(c) < f(d):
            b = d
        else:
            a = c
        c = b - (b - a) / GOLDEN
        d = a + (b - a) / GOLDEN
    return (a + b) / 2


def _sinc(w):
    """sin(w)/w for complex w"""
    return np.sinc(np.asarray(w) / np.pi)


@dataclass
class EntireSample:
    """An entire function F with a claimed bound |F(x+iy)| ≤ e^{|y|σ(|y|)}"""

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    sigma: GrowthFunction
    zero_rule: Callable[[float, float], np.ndarray] = field(repr=False, default=lambda lo, hi: np.zeros(0))
    params: Dict = field(default_factory=dict)

    def __call__(self, z):
        return self.evaluate(np.asarray(z, dtype=complex))

    def real_zeros(self, lo: float, hi: float) -> np.ndarray:
        """Real zeros in (lo, hi), repeated by multiplicity"""
        return np.sort(np.asarray(self.zero_rule(lo, hi), dtype=float))

    def zero_count(self, lo: float, hi: float) -> int:
        return int(self.real_zeros(lo, hi).size)

    def scaled(self, c: float) -> "EntireSample":
        if abs(c) > 1:
            raise UsageError("scaling by |c| > 1 breaks the normalised growth claim", {"c": c})
        base = self.evaluate
        return EntireSample(f"{c:g}*{self.name}", lambda z: c * base(z), self.sigma, self.zero_rule, {**self.params, "scale": c})

    def check_growth(
        self,
        sigma: Optional[GrowthFunction] = None,
        x_max: float = 50.0,
        y_max: float = 20.0,
        slack: Optional[float] = None,
    ) -> None:
        """Spot-check the normalised growth claim on a rectangle grid"""
        sigma = sigma or self.sigma
        slack = settings.SPOT_SLACK if slack is None else slack
        x = np.linspace(-x_max, x_max, 201)
        y = np.linspace(-y_max, y_max, 81)
        X, Y = np.meshgrid(x, y)
        value = np.abs(self(X + 1j * Y))
        ay = np.abs(Y)
        bound = np.exp(ay * sigma(ay))
        bad = value > bound * (1 + slack) + slack
        if np.any(bad):
            i = np.unravel_index(np.argmax(bad), bad.shape)
            raise GrowthClaimError(
                f"{self.name} violates |F(x+iy)| ≤ exp(|y|σ(|y|))",
                {"x": float(X[i]), "y": float(Y[i]), "value": float(value[i]), "bound": float(bound[i])},
            )

    # built-ins
    @classmethod
    def constant(cls, c: float = 1.0, sigma: Optional[GrowthFunction] = None) -> "EntireSample":
        if abs(c) > 1:
            raise UsageError("constant sample needs |c| ≤ 1", {"c": c})
        return cls("constant", lambda z: np.full(np.shape(z), c, dtype=complex), sigma or GrowthFunction.affine(0.0, 0.0), params={"c": c})

    @classmethod
    def sine(cls, a: float = 1.0) -> "EntireSample":
        """sin(az); σ ≡ a"""

        def zeros(lo, hi):
            k = np.arange(np.ceil(lo * a / np.pi), np.floor(hi * a / np.pi) + 1)
            z = k * np.pi / a
            return z[(z > lo) & (z < hi)]

        return cls("sine", lambda z: np.sin(a * z), GrowthFunction.affine(a, 0.0), zeros, {"a": a})

    @classmethod
    def sinc_product(cls, a_list: Sequence[float]) -> "EntireSample":
        """∏ sin(a_j z)/(a_j z); σ ≡ Σ a_j"""
        a_arr = np.asarray(a_list, dtype=float)

        def evaluate(z):
            out = np.ones(np.shape(z), dtype=complex)
            for a in a_arr:
                out = out * _sinc(a * z)
            return out

        def zeros(lo, hi):
            found = []
            for a in a_arr:
                k = np.arange(np.ceil(lo * a / np.pi), np.floor(hi * a / np.pi) + 1)
                k = k[k != 0]
                z = k * np.pi / a
                found.append(z[(z > lo) & (z < hi)])
            return np.concatenate(found) if found else np.zeros(0)

        return cls("sinc_product", evaluate, GrowthFunction.affine(float(a_arr.sum()), 0.0), zeros, {"a": a_arr.tolist()})

    @classmethod
    def with_zeros(cls, zeros: Sequence[float], beta: float) -> "EntireSample":
        """∏_j κ_j (z − x_j) sinc(βz) with κ_j = 1/(1/β + |x_j|); σ ≡ mβ"""
        xs = np.asarray(zeros, dtype=float)
        if beta <= 0:
            raise UsageError("beta must be positive", {"beta": beta})
        kappa = 1.0 / (1.0 / beta + np.abs(xs))
        m = xs.size

        def evaluate(z):
            s = _sinc(beta * z)
            out = np.ones(np.shape(z), dtype=complex)
            for x_j, k_j in zip(xs, kappa):
                out = out * (k_j * (z - x_j) * s)
            return out

        def zero_rule(lo, hi):
            k = np.arange(np.ceil(lo * beta / np.pi), np.floor(hi * beta / np.pi) + 1)
            k = k[k != 0]
            z = k * np.pi / beta
            lattice = np.repeat(z[(z > lo) & (z < hi)], m)
            own = xs[(xs > lo) & (xs < hi)]
            return np.concatenate([lattice, own])

        return cls("zeros", evaluate, GrowthFunction.affine(m * beta, 0.0), zero_rule, {"zeros": xs.tolist(), "beta": beta})

    @classmethod
    def from_dict(cls, data: Dict) -> "EntireSample":
        kind = data.get("kind")
        if kind == "sine":
            return cls.sine(float(data.get("a", 1.0)))
        if kind == "sinc_product":
            return cls.sinc_product(data["a"])
        if kind == "zeros":
            return cls.with_zeros(data["zeros"], float(data["beta"]))
        if kind == "constant":
            return cls.constant(float(data.get("c", 1.0)))
        raise UsageError(f"unknown entire sample kind: {kind}")


@dataclass
class OmegaFunction:
    """ω(s) = L(s) + 2·log(1+s) with L(s) = sup_{y>0} y(s − σ(y) − shift)"""

    sigma: GrowthFunction
    shift: float = 0.0

    def legendre(self, s: float) -> Tuple[float, float]:
        """(L(s), maximiser y)"""
        gap = lambda y: float(self.sigma(y)) + self.shift - s  # noqa: E731
        if gap(1e-300) >= 0:
            return 0.0, 0.0
        Y = 1.0
        for _ in range(MAX_DOUBLINGS):
            if gap(Y) >= 0:
                break
            Y *= 2.0
            if not np.isfinite(Y):
                return math.inf, math.inf
        else:
            return math.inf, math.inf
        ys = np.concatenate([[0.0], np.geomspace(Y * 1e-12, Y, 400)])
        h = ys * (s - self.shift - self.sigma(ys))
        i = int(np.argmax(h))
        lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, ys.size - 1)]
        if hi <= lo:
            return float(max(h[i], 0.0)), float(ys[i])
        res = minimize_scalar(
            lambda y: -y * (s - self.shift - float(self.sigma(y))),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-9 * max(1.0, hi)},
        )
        best_y, best = (res.x, -res.fun) if -res.fun >= h[i] else (ys[i], h[i])
        return float(max(best, 0.0)), float(best_y)

    def L(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([self.legendre(float(v))[0] for v in s])

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = self.L(np.abs(s_arr)) + 2.0 * np.log1p(np.abs(np.atleast_1d(s_arr)))
        return out.reshape(s_arr.shape) if s_arr.ndim else float(out[0])


class BernsteinService:
    """Diagnostics for generalized Bernstein classes"""

    def __init__(self):
        self.logger = logger

    def omega_from_sigma(self, sigma: GrowthFunction, shift: float = 0.0) -> OmegaFunction:
        """Weight ω with ∫₀^∞ e^{ys−ω(s)} ds ≤ e^{yσ(y)} for all y ≥ 0"""
        if not sigma.unbounded:
            raise GrowthFunctionError(
                "σ must tend to infinity: L(s) is infinite for s above sup σ",
                {"sigma": sigma.describe()},
            )
        return OmegaFunction(sigma, shift)

    def verify_omega(
        self, omega: OmegaFunction, y_grid: Sequence[float], tol: float = 1e-6, threads: Optional[int] = None
    ) -> pd.DataFrame:
        """Quadrature of e^{−yσ(y)}∫e^{ys−ω(s)}ds on a y-grid; each value must be ≤ 1 + tol"""
        threads = threads or settings.THREADS

        def one(y):
            y = float(y)
            level = y * (float(omega.sigma(y)) + omega.shift)

            def integrand(s):
                L, _ = omega.legendre(s)
                if not math.isfinite(L):
                    return 0.0
                return math.exp(y * s - L - level) / (1.0 + s) ** 2

            value, err = quad(integrand, 0.0, np.inf, limit=QUAD_LIMIT)
            return {"y": y, "normalised_integral": value, "abserr": err, "passed": value <= 1.0 + tol}

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows = list(pool.map(one, y_grid))
        return pd.DataFrame(rows)

    def zero_count_bound(self, n: int, a: float, b: float, sigma: GrowthFunction) -> float:
        """(b−a)^n · min_{y>0} e^{yσ(y)}/y^n"""
        return self.zero_count_minimizer(n, a, b, sigma)[0]

    def zero_count_minimizer(self, n: int, a: float, b: float, sigma: GrowthFunction) -> Tuple[float, Optional[float]]:
        if n < 0 or not b > a:
            raise UsageError("zero_count_bound needs n ≥ 0 and b > a", {"n": n, "a": a, "b": b})
        if n == 0:
            return 1.0, None

        def objective(t):
            y = math.exp(t)
            return y * float(sigma(y)) - n * t

        ts = np.linspace(-30.0, 30.0, 601)
        vals = np.array([objective(t) for t in ts])
        i = int(np.argmin(vals))
        t_star = gss(objective, ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)])
        log_min = objective(t_star)
        return float(math.exp(n * math.log(b - a) + log_min)), float(math.exp(t_star))

    def zero_count_check(self, F: EntireSample, a: float, b: float, sigma: Optional[GrowthFunction] = None) -> Dict:
        """max_{[a,b]}|F| against the zero-count bound"""
        sigma = sigma or F.sigma
        F.check_growth(sigma)
        n = F.zero_count(a, b)
        bound = self.zero_count_bound(n, a, b, sigma)
        x = np.linspace(a, b, 4001)
        max_abs = float(np.max(np.abs(F(x))))
        return {"a": a, "b": b, "n": n, "max_abs_F": max_abs, "bound": bound, "holds": max_abs <= bound * (1 + 1e-9)}

    def _panels(self, F: EntireSample, lo: float, hi: float, reflect: bool) -> np.ndarray:
        zeros = F.real_zeros(lo, hi)
        if reflect:
            zeros = np.concatenate([zeros, -F.real_zeros(-hi, -lo)])
        return np.unique(np.concatenate([[lo, hi], zeros]))

    def _log_abs(self, F: EntireSample, x: float, reflect: bool) -> float:
        v = abs(complex(F(x)))
        if reflect:
            v *= abs(complex(F(-x)))
        return math.log(max(v, np.finfo(float).tiny))

    def _integrate(self, F: EntireSample, lo: float, hi: float, weight: Callable[[float], float], reflect: bool) -> Tuple[float, float]:
        total, error = 0.0, 0.0
        panels = self._panels(F, lo, hi, reflect)
        for p, q in zip(panels[:-1], panels[1:]):
            probe = np.linspace(p, q, 11)[1:-1]
            vals = np.abs(F(probe))
            if reflect:
                vals = vals * np.abs(F(-probe))
            if np.all(vals == 0):
                raise QuadratureError("F vanishes on a subinterval; the log integral is −∞", {"panel": [float(p), float(q)]})
            value, err = quad(lambda x: self._log_abs(F, x, reflect) * weight(x), p, q, limit=QUAD_LIMIT)
            total += value
            error += err
        return total, error

    def log_integral(self, F: EntireSample, lo: float, hi: float, reflect: bool = False) -> Tuple[float, float]:
        """∫_lo^hi log|F(x)|/x² dx (log|F(x)F(−x)| when reflect), split at the real zeros"""
        if not 0 < lo < hi:
            raise UsageError("log_integral needs 0 < lo < hi", {"lo": lo, "hi": hi})
        return self._integrate(F, lo, hi, lambda x: 1.0 / (x * x), reflect)

    def solve_y_n(self, n: float, sigma: GrowthFunction) -> float:
        """y with y·σ(y) = n"""
        g = lambda y: y * float(sigma(y)) - n  # noqa: E731
        hi = 1.0
        for _ in range(MAX_DOUBLINGS):
            if g(hi) >= 0:
                break
            hi *= 2.0
        else:
            raise GrowthFunctionError("y·σ(y) never reaches n", {"n": n})
        return float(brentq(g, 0.0, hi, xtol=1e-14, rtol=1e-14))

    def _growth_condition_violation(self, sigma: GrowthFunction, psi: PsiFunction, x_max: float) -> Optional[float]:
        """First x where σ(x) > Ψ(x/2e)/2e"""
        x = np.geomspace(1e-6, max(x_max, 1.0), 4096)
        two_e = 2.0 * np.e
        bad = sigma(x) * two_e > psi(x / two_e) + 2.0**-40
        return float(x[np.argmax(bad)]) if np.any(bad) else None

    def log_integral_check(self, F: EntireSample, a: float, b: float, psi: PsiFunction, sigma: Optional[GrowthFunction] = None) -> LogIntegralReport:
        """Both sides of the log-integral bound on (a, b)"""
        sigma = sigma or F.sigma
        F.check_growth(sigma)
        lhs, _ = self.log_integral(F, a, b)
        n = F.zero_count(a, b)
        length = b - a
        need = length * float(psi(length))
        base = dict(a=a, b=b, n=n, lhs=lhs)
        violation = self._growth_condition_violation(sigma, psi, 4.0 * np.e * b)
        if violation is not None:
            return LogIntegralReport(
                **base, y_n=None, zero_count_bound=None, rhs=None, slack=None, holds=None,
                applicability=Applicability.INAPPLICABLE, reason=f"σ(x) > Ψ(x/2e)/2e at x = {violation:.6g}",
            )
        if n == 0 or n < need:
            return LogIntegralReport(
                **base, y_n=None, zero_count_bound=None, rhs=None, slack=None, holds=None,
                applicability=Applicability.INAPPLICABLE, reason=f"zero count {n} below (b−a)Ψ(b−a) = {need:.6g}",
            )
        y_n = self.solve_y_n(n, sigma)
        zero_bound = -(length / (a * b)) * n * math.log(y_n / (math.e * length))
        rhs = -math.log(2.0) * (length / b) ** 2 * float(psi(length))
        report = LogIntegralReport(
            **base, y_n=y_n, zero_count_bound=zero_bound, rhs=rhs, slack=rhs - lhs,
            holds=bool(lhs <= rhs + 1e-9), applicability=Applicability.APPLICABLE,
        )
        self.logger.info("Log-integral bound checked", extra={"n": n, "lhs": lhs, "rhs": rhs, "holds": report.holds})
        return report

    def carleman_row(self, F: EntireSample, R: float, sigma: GrowthFunction) -> CarlemanRow:
        if R <= 2:
            raise UsageError("carleman_check needs R > 2", {"R": R})
        half, _ = self.log_integral(F, 1.0, R / 2.0, reflect=True)
        full, _ = self.log_integral(F, 1.0, R, reflect=True)
        line, _ = self._integrate(F, 1.0, R, lambda x: 1.0 / (x * x) - 1.0 / (R * R), reflect=True)
        arc, _ = quad(
            lambda t: math.log(max(abs(complex(F(R * np.exp(1j * t)))), np.finfo(float).tiny)) * math.sin(t),
            0.0,
            math.pi,
            limit=QUAD_LIMIT,
        )
        arc *= 2.0 / R
        s_R = float(sigma(R))
        return CarlemanRow(
            R=R,
            log_integral_half=half,
            sigma_R=s_R,
            Q=half + 4.0 * s_R,
            carleman_line=line,
            carleman_arc=arc,
            carleman_sum=line + arc,
            growth_adjusted_integral=full + 16.0 / 3.0 * float(sigma(2.0 * R)),
        )

    def carleman_check(
        self,
        F: EntireSample,
        R_values: Sequence[float],
        sigma: Optional[GrowthFunction] = None,
        tol: Optional[float] = None,
        threads: Optional[int] = None,
    ) -> CarlemanReport:
        """Q(R) = ∫_{1≤|x|≤R/2} log|F|/x² + 4σ(R), calibrated at the smallest R"""
        sigma = sigma or F.sigma
        tol = settings.CARLEMAN_TOL if tol is None else tol
        F.check_growth(sigma)
        threads = threads or settings.THREADS
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            rows = list(pool.map(lambda R: self.carleman_row(F, float(R), sigma), sorted(R_values)))
        C = rows[0].Q
        min_q = min(r.Q for r in rows)
        report = CarlemanReport(calibration_R=rows[0].R, C=C, tol=tol, rows=rows, min_Q=min_q, passed=bool(min_q >= C - tol))
        self.logger.info("Carleman check", extra={"C": C, "min_Q": min_q, "passed": report.passed})
        return report

    def uniqueness_certificate(
        self,
        spec: Spectrum,
        sigma: GrowthFunction,
        psi: PsiFunction,
        family: IntervalFamily,
        threshold: Optional[float] = None,
    ) -> Tuple[UniquenessCertificate, pd.DataFrame]:
        """Divergence table S_n against σ(2b_n)"""
        threshold = settings.CERT_THRESHOLD if threshold is None else float(threshold)
        S = np.cumsum(psi(family.lengths) * family.terms) if family.size else np.zeros(0)
        sig = sigma(2.0 * family.b) if family.size else np.zeros(0)
        with np.errstate(divide="ignore"):
            ratio = np.where(sig > 0, S / np.where(sig > 0, sig, 1.0), np.inf)
        table = pd.DataFrame({"n": np.arange(1, family.size + 1), "b_n": family.b, "S_n": S, "sigma_2bn": sig, "ratio": ratio})

        def certificate(status, reason="", violation=None, final=None, increasing=False):
            return UniquenessCertificate(
                status=status, threshold=threshold, final_ratio=final, increasing_last_quartile=increasing,
                violation_x=violation, reason=reason, rows=int(family.size),
            )

        x_max = 4.0 * np.e * (float(family.b[-1]) if family.size else 1.0)
        violation = self._growth_condition_violation(sigma, psi, x_max)
        if violation is not None:
            return certificate(CertificateStatus.FAIL, "σ(x) > Ψ(x/2e)/2e", violation), table
        if family.size < 4:
            return certificate(CertificateStatus.FAIL, "too few intervals for divergence evidence"), table
        if not family.verify(spec, psi):
            return certificate(CertificateStatus.FAIL, "family is not Ψ-substantial for this spectrum"), table
        quartile = ratio[-max(2, int(math.ceil(family.size / 4))):]
        increasing = bool(np.all(np.diff(quartile) >= 0) and quartile[-1] > quartile[0])
        final = float(ratio[-1])
        passed = final > threshold and increasing
        status = CertificateStatus.PASS if passed else CertificateStatus.FAIL
        reason = "" if passed else "ratio below threshold or not increasing over the last quartile"
        self.logger.info("Uniqueness certificate", extra={"status": status.value, "final_ratio": final})
        return certificate(status, reason, final=final, increasing=increasing), table

    def sinc_square_estimate(self, eps: float, x_max: float = 50.0, y_max: float = 20.0, nodes: int = 401) -> float:
        """Smallest C with |sinc²(ε(x+iy))| ≤ C e^{2ε|y|}/(1+x²+y²) on the grid"""
        x = np.linspace(-x_max, x_max, nodes)
        y = np.linspace(-y_max, y_max, nodes)
        X, Y = np.meshgrid(x, y)
        lhs = np.abs(_sinc(eps * (X + 1j * Y))) ** 2
        return float(np.max(lhs * (1 + X**2 + Y**2) / np.exp(2 * eps * np.abs(Y))))

    def sigma_generator(self, sigma: GrowthFunction, eps: float, s_max: float = 20.0, nodes: int = 2001) -> Dict:
        """φ̂ = ĝ ⋆ χ_ε ⋆ χ_ε with ĝ(s) = e^{−ω(|s|)} built from σ − 2ε"""
        from .span_service import get_span_service

        if eps <= 0:
            raise UsageError("eps must be positive", {"eps": eps})
        omega = self.omega_from_sigma(sigma, shift=-2.0 * eps)
        s = np.linspace(-s_max, s_max, nodes)
        h = s[1] - s[0]
        w = omega(s)
        # keep the range where e^{−ω} is representable; ω is even and increasing in |s|
        keep = w < -np.log(np.finfo(float).tiny)
        s, w = s[keep], w[keep]
        if s.size < 2 * int(round(eps / h)) + 3:
            raise WindowError("e^{−ω} underflows on almost all of the grid", {"s_max": s_max, "eps": eps})
        g_hat = np.exp(-w)
        width = int(round(eps / h))
        box = np.ones(2 * width + 1)
        phi_hat = np.convolve(np.convolve(g_hat, box, mode="same") * h, box, mode="same") * h
        verdict = get_span_service().check_in_N(phi_hat, s)
        self.logger.info("σ generator built", extra={"eps": eps, "window": verdict["window"], "min_abs": verdict["min_abs"]})
        return {"s": s, "g_hat": g_hat, "phi_hat": phi_hat, "verdict": verdict}


# Global Bernstein service instance
bernstein_service = None


def get_bernstein_service() -> BernsteinService:
    """Get the global Bernstein service instance"""
    global bernstein_service
    if bernstein_service is None:
        bernstein_service = BernsteinService()
    return bernstein_service
