"""
Density Service
Substantial interval families, Beurling–Malliavin density lower bounds,
Ψ-substantial families and the growth function σ built from them
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import settings

from ..models.errors import SearchError, UsageError, WindowError
from ..models.growth import GrowthFunction, PsiFunction
from .spectrum_service import ANALYTIC_KINDS, Spectrum, get_spectrum_service

logger = logging.getLogger(__name__)

LARGEST_GAPS = 32
MAX_DOUBLINGS = 40


@dataclass
class IntervalFamily:
    """Disjoint intervals (a_k, b_k) in increasing order with their counts"""

    a: np.ndarray
    b: np.ndarray
    counts: np.ndarray
    tail_sum: float = 0.0

    @property
    def size(self) -> int:
        return int(self.a.size)

    @property
    def lengths(self) -> np.ndarray:
        return self.b - self.a

    @property
    def ratios(self) -> np.ndarray:
        return self.counts / self.lengths

    @property
    def terms(self) -> np.ndarray:
        return (self.lengths / self.b) ** 2

    @property
    def divergence_sum(self) -> float:
        return float(np.sum(self.terms))

    def to_frame(self) -> pd.DataFrame:
        terms = self.terms
        return pd.DataFrame(
            {
                "a_k": self.a,
                "b_k": self.b,
                "count": self.counts,
                "ratio": self.ratios,
                "term": terms,
                "cumulative": np.cumsum(terms),
            }
        )

    def verify(self, spec: Spectrum, psi: PsiFunction) -> bool:
        """Recompute counts from the spectrum and check every defining inequality"""
        if self.size == 0:
            return False
        if np.any(self.a <= 0) or np.any(self.b <= self.a) or np.any(self.a[1:] <= self.b[:-1]):
            return False
        counts = get_spectrum_service().counts(spec, self.a, self.b)
        if not np.array_equal(counts, self.counts):
            return False
        return bool(np.all(counts / self.lengths > psi(self.lengths)))

    def truncated(self, total: float) -> "IntervalFamily":
        """Shortest prefix whose divergence sum reaches total"""
        cum = np.cumsum(self.terms)
        n = int(np.searchsorted(cum, total, side="left")) + 1
        n = min(n, self.size)
        return IntervalFamily(self.a[:n], self.b[:n], self.counts[:n])


@dataclass
class SigmaResult:
    sigma: GrowthFunction
    partial_sums: np.ndarray
    right_ends: np.ndarray
    warnings: List[str] = field(default_factory=list)

    def certificate(self) -> np.ndarray:
        """S_n / σ(2b_n) along the family"""
        return self.partial_sums / np.maximum(self.sigma(2.0 * self.right_ends), np.finfo(float).tiny)


class DensityService:
    """Substantial-family search over a positive spectrum"""

    def __init__(self):
        self.logger = logger
        self.spectra = get_spectrum_service()

    def candidates(self, spec: Spectrum, horizon: float, start: float = 0.0) -> np.ndarray:
        """Half-gap midpoints near a geometric grid, dyadic points and the largest gaps"""
        if spec.size == 0:
            return np.zeros(0)
        first = float(spec.point_at(0))
        lo = max(start, first / 2.0)
        if lo >= horizon:
            return np.zeros(0)
        steps = int(np.ceil(np.log(horizon / lo) / np.log(settings.GRID_RATIO))) + 1
        grid = lo * settings.GRID_RATIO ** np.arange(steps + 1)
        dyadic = 2.0 ** np.arange(np.floor(np.log2(lo)), np.ceil(np.log2(horizon)) + 1)
        raw = np.concatenate([grid, dyadic, [horizon]])
        left, right = self.spectra.neighbors(spec, raw)
        snapped = np.where(np.isfinite(left) & np.isfinite(right), 0.5 * (left + right), raw)
        extra = [first / 2.0]
        if spec.kind not in ANALYTIC_KINDS:
            pts = spec.points[(spec.points > lo) & (spec.points <= horizon)]
            if pts.size > 2:
                gaps = np.diff(pts)
                widest = np.argsort(gaps)[::-1][:LARGEST_GAPS]
                mids = 0.5 * (pts[widest] + pts[widest + 1])
                extra.extend(mids.tolist())
                extra.extend((0.5 * (pts[widest] + np.concatenate([[lo], pts])[widest])).tolist())
        cand = np.unique(np.concatenate([snapped, extra]))
        return cand[(cand > max(start, 0.0)) & (cand <= horizon)]

    def substantial_search(
        self,
        lambda_plus: Spectrum,
        D: Optional[float] = None,
        horizon: Optional[float] = None,
        s_min: Optional[float] = None,
        psi: Optional[PsiFunction] = None,
        start: float = 0.0,
        min_length: float = 0.0,
        tail_share: Optional[float] = None,
    ) -> Optional[IntervalFamily]:
        """Family with every ratio above D (or Ψ(length)) and divergence sum ≥ s_min, or None.

        The divergent series is replaced by two finite requirements: the sum
        reaches s_min, and intervals starting above TAIL_SCALE·horizon carry at
        least tail_share·s_min of it.
        """
        s_min = settings.S_MIN if s_min is None else float(s_min)
        tail_share = settings.TAIL_SHARE if tail_share is None else float(tail_share)
        if psi is None:
            if D is None or D <= 0:
                raise UsageError("density threshold D must be positive", {"D": D})
            psi = PsiFunction.constant(D)
        if s_min <= 0:
            raise UsageError("s_min must be positive", {"s_min": s_min})
        horizon = lambda_plus.upper if horizon is None else float(horizon)
        if horizon > lambda_plus.upper:
            raise WindowError("horizon beyond the realised window", {"horizon": horizon, "window": lambda_plus.upper})

        cand = self.candidates(lambda_plus, horizon, start)
        m = cand.size
        if m < 2:
            return None
        lt = np.asarray(lambda_plus.rank_lt(cand), dtype=np.int64)
        le = np.asarray(lambda_plus.rank_le(cand), dtype=np.int64)
        counts = lt[None, :] - le[:, None]
        length = cand[None, :] - cand[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (length > max(min_length, 0.0)) & (counts / np.where(length > 0, length, 1.0) > psi(np.maximum(length, 0.0)))
            weight = np.where(ok, (length / cand[None, :]) ** 2, -np.inf)

        tail_start = settings.TAIL_SCALE * horizon
        t0 = int(np.searchsorted(cand, tail_start, side="left"))
        need_tail = tail_share * s_min

        # head[k]: best chain whose right ends have index < k
        head = np.zeros(m + 1)
        head_pick = np.full(m + 1, -1)
        for k in range(1, m + 1):
            j = k - 1
            scores = head[:j] + weight[:j, j] if j > 0 else np.zeros(0)
            best = int(np.argmax(scores)) if scores.size else -1
            if best >= 0 and scores[best] > head[k - 1]:
                head[k], head_pick[k] = scores[best], best
            else:
                head[k] = head[k - 1]

        # tail[i]: best chain whose left ends have index ≥ i
        tail = np.zeros(m + 2)
        tail_pick = np.full(m + 1, -1)
        for i in range(m - 1, -1, -1):
            scores = weight[i, i + 1:] + tail[i + 2: m + 1]
            best = int(np.argmax(scores)) if scores.size else -1
            if best >= 0 and scores[best] > tail[i + 1]:
                tail[i], tail_pick[i] = scores[best], i + 1 + best
            else:
                tail[i] = tail[i + 1]

        if need_tail <= 0:
            split, best_total = m, head[m]
        else:
            split, best_total = -1, -np.inf
            for i in range(t0, m):
                if tail[i] < need_tail:
                    continue
                total = head[i] + tail[i]
                if total > best_total:
                    split, best_total = i, total
        if split < 0 or best_total < s_min:
            return None

        pairs: List[Tuple[int, int]] = []
        k = split
        while k > 0:
            if head_pick[k] < 0:
                k -= 1
                continue
            pairs.append((int(head_pick[k]), k - 1))
            k = int(head_pick[k])
        pairs.reverse()
        i = split
        while i < m:
            if tail_pick[i] < 0:
                i += 1
                continue
            pairs.append((i, int(tail_pick[i])))
            i = int(tail_pick[i]) + 1

        ia = np.array([p[0] for p in pairs])
        ib = np.array([p[1] for p in pairs])
        family = IntervalFamily(cand[ia], cand[ib], counts[ia, ib].astype(np.int64))
        family.tail_sum = float(np.sum(family.terms[family.a >= tail_start]))
        self.logger.debug(
            "Substantial family found",
            extra={"intervals": family.size, "divergence_sum": family.divergence_sum, "tail_sum": family.tail_sum},
        )
        return family

    def psi_substantial_search(
        self,
        lambda_plus: Spectrum,
        psi: PsiFunction,
        horizon: Optional[float] = None,
        s_min: Optional[float] = None,
    ) -> Optional[IntervalFamily]:
        """Family with n_Λ(a,b)/(b−a) > Ψ(b−a)"""
        return self.substantial_search(lambda_plus, horizon=horizon, s_min=s_min, psi=psi)

    @staticmethod
    def horizon_ladder(side: Spectrum, horizon: float) -> np.ndarray:
        """Dyadic horizons 2^j ≤ min(horizon, window), plus the window end once horizon reaches it.

        The ladder for a larger horizon always extends the ladder for a smaller one.
        """
        if side.size == 0 or horizon <= 0:
            return np.zeros(0)
        reach = min(float(horizon), side.upper)
        first = float(side.point_at(0))
        j0 = int(np.floor(np.log2(first)))
        j1 = int(np.floor(np.log2(reach)))
        rungs = [2.0 ** j for j in range(j0, j1 + 1)]
        if horizon >= side.upper and (not rungs or rungs[-1] < side.upper):
            rungs.append(side.upper)
        return np.asarray(rungs, dtype=float)

    def _side_bound(
        self, side: Spectrum, horizon: float, s_min: float, tol: float
    ) -> Tuple[float, Optional[IntervalFamily], Optional[float]]:
        """Running maximum of the per-rung bound over the horizon ladder"""
        best, best_family, best_rung = 0.0, None, None
        for rung in self.horizon_ladder(side, horizon):
            # skipped rungs certify less than the running maximum
            if self.substantial_search(side, max(best, tol), rung, s_min) is None:
                continue
            bound, family = self._rung_bound(side, rung, s_min, tol)
            if bound > best:
                best, best_family, best_rung = bound, family, float(rung)
        return best, best_family, best_rung

    def _rung_bound(self, side: Spectrum, horizon: float, s_min: float, tol: float) -> Tuple[float, Optional[IntervalFamily]]:
        family = self.substantial_search(side, tol, horizon, s_min)
        if family is None:
            return 0.0, None
        lo, hi = tol, 2.0 * tol
        for _ in range(MAX_DOUBLINGS):
            found = self.substantial_search(side, hi, horizon, s_min)
            if found is None:
                break
            lo, family, hi = hi, found, 2.0 * hi
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            found = self.substantial_search(side, mid, horizon, s_min)
            if found is None:
                hi = mid
            else:
                lo, family = mid, found
        return lo, family

    def bm_lower_bound(
        self,
        spec: Spectrum,
        horizon: float,
        s_min: Optional[float] = None,
        tol: Optional[float] = None,
    ) -> dict:
        """Certified lower bound for D_BM at this horizon: max over Λ⁺ and Λ⁻"""
        s_min = settings.S_MIN if s_min is None else float(s_min)
        tol = settings.DENSITY_TOL if tol is None else float(tol)
        if tol <= 0:
            raise UsageError("tol must be positive", {"tol": tol})
        plus, minus = self.spectra.split(spec)
        bound_plus, fam_plus, rung_plus = self._side_bound(plus, horizon, s_min, tol)
        bound_minus, fam_minus, rung_minus = self._side_bound(minus, horizon, s_min, tol)
        if bound_plus >= bound_minus:
            family, best_horizon = fam_plus, rung_plus
        else:
            family, best_horizon = fam_minus, rung_minus
        result = {
            "horizon": float(horizon),
            "s_min": s_min,
            "tol": tol,
            "bound": max(bound_plus, bound_minus),
            "bound_plus": bound_plus,
            "bound_minus": bound_minus,
            "family": family,
            "best_horizon": best_horizon,
        }
        self.logger.info(
            "Density lower bound",
            extra={"bound": result["bound"], "bound_plus": bound_plus, "bound_minus": bound_minus, "horizon": horizon},
        )
        return result

    def diagonal_psi(
        self,
        lambda_plus: Spectrum,
        d_grid: Sequence[float],
        horizon: Optional[float] = None,
        s_min: Optional[float] = None,
        block_sum: float = 1.0,
    ) -> Tuple[PsiFunction, IntervalFamily]:
        """Interleave per-D families into one family and a step Ψ it is substantial for"""
        d_grid = [float(d) for d in d_grid]
        if not d_grid or any(b <= a for a, b in zip(d_grid, d_grid[1:])):
            raise UsageError("d_grid must be a nonempty increasing list", {"d_grid": d_grid})
        horizon = lambda_plus.upper if horizon is None else float(horizon)
        if len(d_grid) == 1:
            family = self.substantial_search(lambda_plus, d_grid[0], horizon, s_min)
            if family is None:
                raise SearchError(f"no substantial family for D = {d_grid[0]:g}", {"D": d_grid[0], "horizon": horizon})
            return PsiFunction.constant(d_grid[0]), family

        blocks: List[IntervalFamily] = []
        start, min_length = 0.0, 0.0
        for D in d_grid:
            found = self.substantial_search(
                lambda_plus, D, horizon, block_sum, start=start, min_length=min_length, tail_share=0.0
            )
            if found is None:
                raise SearchError(
                    f"no substantial family for D = {D:g}",
                    {"D": D, "horizon": horizon, "start": start, "min_length": min_length},
                )
            block = found.truncated(block_sum)
            blocks.append(block)
            start, min_length = float(block.b[-1]), float(block.lengths.max())

        family = IntervalFamily(
            np.concatenate([blk.a for blk in blocks]),
            np.concatenate([blk.b for blk in blocks]),
            np.concatenate([blk.counts for blk in blocks]),
        )
        breakpoints = [0.0] + [float(blk.lengths.min()) for blk in blocks[1:]]
        psi = PsiFunction.step(breakpoints, d_grid)
        return psi, family

    def sigma_from_psi(self, psi: PsiFunction, family: IntervalFamily, points_per_octave: int = 8) -> SigmaResult:
        """σ(x) = min(Ψ(x/2e)/2e, √S_{max(1, n(x))}) as a right-continuous step function"""
        if family.size == 0:
            raise UsageError("family is empty")
        two_e = 2.0 * np.e
        S = np.cumsum(psi(family.lengths) * family.terms)
        ends = 2.0 * family.b
        top = ends[-1] * 4.0
        bottom = min(ends[0], 1.0) / 16.0
        dense = bottom * 2.0 ** (np.arange(int(np.ceil(np.log2(top / bottom) * points_per_octave)) + 1) / points_per_octave)
        if psi.kind == "tabulated":
            jumps = two_e * np.asarray(psi.params["breakpoints"], dtype=float)
        else:
            jumps = np.zeros(0)
        x = np.unique(np.concatenate([[0.0], dense, ends, jumps]))
        n_of_x = np.searchsorted(ends, x, side="right")
        cap = np.sqrt(S[np.maximum(n_of_x, 1) - 1])
        values = np.minimum(psi(x / two_e) / two_e, cap)
        warnings: List[str] = []
        if family.size < 2 or S[-1] <= S[0]:
            warnings.append("partial sums S_n do not grow within the horizon; the certificate holds only as far as the data extends")
        sigma = GrowthFunction.tabulated(x, values, mode="step")
        if warnings:
            self.logger.warning("σ certificate is degenerate", extra={"intervals": family.size})
        return SigmaResult(sigma, S, family.b.copy(), warnings)


# Global density service instance
density_service = None


def get_density_service() -> DensityService:
    """Get the global density service instance"""
    global density_service
    if density_service is None:
        density_service = DensityService()
    return density_service
