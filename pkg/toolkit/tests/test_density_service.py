"""
Density Service Tests
Substantial families, density lower bounds and σ construction
"""
import numpy as np
import pytest

from core.models.errors import SearchError, UsageError, WindowError
from core.models.growth import PsiFunction
from core.services.density_service import IntervalFamily
from core.services.spectrum_service import Spectrum


@pytest.fixture
def lattice_plus():
    return Spectrum.arithmetic(1.0, T=2048.0, side="positive")


@pytest.mark.unit
class TestIntervalFamily:
    """Bookkeeping on a hand-built family"""

    @pytest.fixture
    def family(self):
        return IntervalFamily(np.array([1.5, 4.5]), np.array([3.5, 8.5]), np.array([2, 4]))

    def test_derived_columns(self, family):
        np.testing.assert_allclose(family.lengths, [2.0, 4.0])
        np.testing.assert_allclose(family.ratios, [1.0, 1.0])
        np.testing.assert_allclose(family.terms, [(2 / 3.5) ** 2, (4 / 8.5) ** 2])

    def test_frame(self, family):
        frame = family.to_frame()
        assert list(frame.columns) == ["a_k", "b_k", "count", "ratio", "term", "cumulative"]
        assert frame["cumulative"].iloc[-1] == pytest.approx(family.divergence_sum)

    def test_verify_against_spectrum(self, family, lattice_plus):
        assert family.verify(lattice_plus, PsiFunction.constant(0.9))
        assert not family.verify(lattice_plus, PsiFunction.constant(1.0))

    def test_verify_rejects_wrong_counts(self, lattice_plus):
        family = IntervalFamily(np.array([1.5]), np.array([3.5]), np.array([3]))
        assert not family.verify(lattice_plus, PsiFunction.constant(0.5))

    def test_verify_rejects_overlap(self, lattice_plus):
        family = IntervalFamily(np.array([1.5, 2.5]), np.array([3.5, 5.5]), np.array([2, 3]))
        assert not family.verify(lattice_plus, PsiFunction.constant(0.5))

    def test_truncated(self, family):
        short = family.truncated(0.1)
        assert short.size == 1
        assert family.truncated(10.0).size == 2


@pytest.mark.unit
class TestSubstantialSearch:
    """Families whose ratios exceed a threshold"""

    def test_lattice_family_is_substantial(self, density_service, lattice_plus):
        family = density_service.substantial_search(lattice_plus, 0.9, 1024.0, 2.0)
        assert family is not None
        assert family.divergence_sum >= 2.0
        assert family.tail_sum >= 1.0
        assert family.verify(lattice_plus, PsiFunction.constant(0.9))

    def test_threshold_above_density_fails(self, density_service, lattice_plus):
        assert density_service.substantial_search(lattice_plus, 1.05, 1024.0, 2.0) is None

    def test_needs_threshold(self, density_service, lattice_plus):
        with pytest.raises(UsageError):
            density_service.substantial_search(lattice_plus, None, 1024.0)

    def test_horizon_beyond_window(self, density_service, lattice_plus):
        with pytest.raises(WindowError):
            density_service.substantial_search(lattice_plus, 0.5, 4096.0)

    def test_psi_family(self, density_service, lattice_plus):
        psi = PsiFunction.log(0.1)
        family = density_service.psi_substantial_search(lattice_plus, psi, 1024.0, 2.0)
        assert family is not None
        assert family.verify(lattice_plus, psi)


@pytest.mark.integration
class TestDensityLowerBound:
    """Certified lower bounds at a finite horizon"""

    def test_integers(self, density_service):
        result = density_service.bm_lower_bound(Spectrum.arithmetic(1.0, T=2048.0), 1024.0, 2.0, 0.01)
        assert 0.95 <= result["bound"] <= 1.0
        assert result["bound_plus"] == result["bound_minus"]
        assert result["family"] is not None

    def test_half_integers(self, density_service):
        result = density_service.bm_lower_bound(Spectrum.arithmetic(0.5, T=2048.0), 1024.0, 2.0, 0.01)
        assert 1.9 <= result["bound"] <= 2.0

    def test_squares_have_no_density(self, density_service):
        squares = Spectrum.explicit(np.arange(1, 101, dtype=float) ** 2)
        assert density_service.substantial_search(squares, 0.5, 1e4, 1.0) is None
        result = density_service.bm_lower_bound(squares, 1e4, 2.0, 0.01)
        assert result["bound"] < 0.1

    @pytest.mark.slow
    def test_bound_never_drops_with_horizon(self, density_service):
        spec = Spectrum.explicit(np.arange(1, 1001, dtype=float) * 0.1, lower=0.0, upper=1e4)
        bounds = [density_service.bm_lower_bound(spec, h, 2.0, 0.01)["bound"] for h in (100.0, 1e3, 1e4)]
        assert bounds[0] >= 9.9
        assert bounds == sorted(bounds)

    def test_bound_never_rises_with_s_min(self, density_service):
        spec = Spectrum.arithmetic(1.0, T=2048.0)
        bounds = [density_service.bm_lower_bound(spec, 1024.0, s, 0.01)["bound"] for s in (1.0, 1.5, 2.0)]
        assert bounds == sorted(bounds, reverse=True)
        assert bounds[-1] >= 0.95

    def test_reports_where_bound_is_attained(self, density_service):
        result = density_service.bm_lower_bound(Spectrum.arithmetic(1.0, T=2048.0), 1024.0, 2.0, 0.01)
        assert result["best_horizon"] in density_service.horizon_ladder(Spectrum.arithmetic(1.0, T=2048.0, side="positive"), 1024.0)

    def test_horizon_ladder_is_nested(self, density_service):
        side = Spectrum.explicit(np.arange(1, 1001, dtype=float) * 0.1, lower=0.0, upper=1e4)
        short = density_service.horizon_ladder(side, 100.0)
        long = density_service.horizon_ladder(side, 1e4)
        assert short[-1] == 64.0
        assert long[-1] == 1e4
        np.testing.assert_array_equal(long[: short.size], short)

    def test_one_sided_spectrum_uses_better_side(self, density_service):
        spec = Spectrum.explicit(np.concatenate([-np.arange(1, 2049, dtype=float)[::-1], [0.5]]))
        result = density_service.bm_lower_bound(spec, 1024.0, 2.0, 0.01)
        assert result["bound_plus"] == 0.0
        assert result["bound"] == result["bound_minus"] >= 0.95

    def test_rejects_bad_tolerance(self, density_service):
        with pytest.raises(UsageError):
            density_service.bm_lower_bound(Spectrum.arithmetic(1.0, T=64.0), 32.0, 2.0, 0.0)


@pytest.mark.integration
class TestSigmaConstruction:
    """Diagonal Ψ and the σ it induces"""

    def test_diagonal_psi_is_substantial(self, density_service, lattice_plus):
        psi, family = density_service.diagonal_psi(lattice_plus, [0.5, 0.9], 1024.0)
        assert psi.kind == "tabulated"
        assert family.verify(lattice_plus, psi)

    def test_diagonal_psi_single_level(self, density_service, lattice_plus):
        psi, family = density_service.diagonal_psi(lattice_plus, [0.8], 1024.0)
        assert psi(3.0) == 0.8
        assert family.size >= 1

    def test_diagonal_psi_unreachable_level(self, density_service, lattice_plus):
        with pytest.raises(SearchError):
            density_service.diagonal_psi(lattice_plus, [0.5, 1.5], 1024.0)

    def test_diagonal_psi_rejects_unsorted_grid(self, density_service, lattice_plus):
        with pytest.raises(UsageError):
            density_service.diagonal_psi(lattice_plus, [0.9, 0.5], 1024.0)

    def test_sigma_respects_psi_cap(self, density_service, constant_psi, dyadic_family_bounds):
        a, b = dyadic_family_bounds
        spec = Spectrum.arithmetic(1.0 / 64, T=4096.0, side="positive")
        counts = density_service.spectra.counts(spec, a, b)
        family = IntervalFamily(a, b, counts)
        result = density_service.sigma_from_psi(constant_psi, family)
        x = np.geomspace(0.01, 1e4, 200)
        cap = constant_psi(x / (2 * np.e)) / (2 * np.e)
        assert np.all(result.sigma(x) <= cap + 1e-12)
        assert np.all(np.diff(result.partial_sums) > 0)
        assert result.warnings == []

    def test_sigma_needs_family(self, density_service, constant_psi):
        empty = IntervalFamily(np.zeros(0), np.zeros(0), np.zeros(0, dtype=int))
        with pytest.raises(UsageError):
            density_service.sigma_from_psi(constant_psi, empty)


@pytest.fixture
def sqrt_plus():
    return Spectrum.power(0.5, T=1e6)


@pytest.mark.integration
class TestPsiFamilies:
    """Ψ-substantial families on growing and linear densities"""

    def test_sqrt_spectrum_beats_log_psi(self, density_service, sqrt_plus):
        psi = PsiFunction.log(1.0)
        family = density_service.psi_substantial_search(sqrt_plus, psi, 1e6, 2.0)
        assert family is not None
        assert family.verify(sqrt_plus, psi)

    def test_integers_cannot_beat_linear_psi(self, density_service):
        integers = Spectrum.arithmetic(1.0, T=1e6, side="positive")
        assert density_service.psi_substantial_search(integers, PsiFunction.power(1.0, 1.0), 1e6, 2.0) is None

    def test_constant_psi_matches_threshold_search(self, density_service, lattice_plus):
        by_psi = density_service.psi_substantial_search(lattice_plus, PsiFunction.constant(0.5), 1024.0, 2.0)
        by_threshold = density_service.substantial_search(lattice_plus, 0.5, 1024.0, 2.0)
        np.testing.assert_array_equal(by_psi.a, by_threshold.a)
        np.testing.assert_array_equal(by_psi.b, by_threshold.b)
        np.testing.assert_array_equal(by_psi.counts, by_threshold.counts)

    def test_diagonal_psi_on_sqrt_spectrum(self, density_service, sqrt_plus):
        psi, family = density_service.diagonal_psi(sqrt_plus, [1.0, 2.0, 4.0], 1e6)
        assert psi.params["values"] == [1.0, 2.0, 4.0]
        assert len(psi.params["breakpoints"]) == 3
        assert family.size >= 3
        assert family.verify(sqrt_plus, psi)

    def test_sigma_from_constant_psi_on_dyadic_family(self, density_service, constant_psi, dyadic_family_bounds):
        a, b = dyadic_family_bounds
        spec = Spectrum.arithmetic(1.0 / 64, T=4096.0, side="positive")
        family = IntervalFamily(a, b, density_service.spectra.counts(spec, a, b))
        result = density_service.sigma_from_psi(constant_psi, family)
        n = np.arange(1, family.size + 1)
        expected = np.minimum(40.0 / (2 * np.e), np.sqrt(np.cumsum(40.0 * family.terms)))
        np.testing.assert_allclose(result.sigma(2.0 * b), expected)
        np.testing.assert_allclose(result.partial_sums, 40.0 * n / 4.0, rtol=0.05)

    def test_single_interval_family_warns(self, density_service, constant_psi):
        family = IntervalFamily(np.array([1.5]), np.array([3.5]), np.array([2]))
        result = density_service.sigma_from_psi(constant_psi, family)
        assert len(result.warnings) == 1

    def test_sigma_from_log_psi_is_dominated_by_partial_sums(self, density_service, sqrt_plus):
        psi = PsiFunction.log(1.0)
        family = density_service.psi_substantial_search(sqrt_plus, psi, 1e6, 2.0)
        result = density_service.sigma_from_psi(psi, family)
        assert np.all(result.sigma(2.0 * family.b) ** 2 <= result.partial_sums * (1 + 1e-12))
