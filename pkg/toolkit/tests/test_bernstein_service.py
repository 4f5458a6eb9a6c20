"""
Bernstein Service Tests
ω construction, zero-count and log-integral bounds, Carleman diagnostics
and the uniqueness certificate
"""
import math

import numpy as np
import pytest

from core.models.domain_models import Applicability, CertificateStatus, Verdict
from core.models.errors import GrowthClaimError, GrowthFunctionError, UsageError
from core.models.growth import GrowthFunction, PsiFunction
from core.services.bernstein_service import EntireSample, gss
from core.services.density_service import IntervalFamily
from core.services.spectrum_service import Spectrum


@pytest.mark.unit
class TestEntireSamples:
    """Built-in entire functions and their zero rules"""

    def test_sine_zeros(self):
        np.testing.assert_allclose(EntireSample.sine(1.0).real_zeros(0.5, 7.0), [math.pi, 2 * math.pi])

    def test_with_zeros_counts_own_zeros(self):
        F = EntireSample.with_zeros([10.1, 10.3, 10.5, 10.7, 10.9], 0.05)
        assert F.zero_count(10.0, 11.0) == 5
        assert abs(complex(F(10.5))) == 0.0
        assert F.sigma(3.0) == pytest.approx(0.25)

    def test_sinc_product_skips_origin(self):
        F = EntireSample.sinc_product([1.0, 2.0])
        assert F.zero_count(-0.1, 0.1) == 0
        assert complex(F(0.0)) == pytest.approx(1.0)

    def test_growth_claim_holds(self):
        EntireSample.sine(1.0).check_growth()
        EntireSample.with_zeros([10.1, 10.3], 0.05).check_growth()

    def test_growth_claim_violated(self):
        with pytest.raises(GrowthClaimError):
            EntireSample.sine(1.0).check_growth(GrowthFunction.affine(0.5, 0.0))

    def test_scaling_above_one_rejected(self):
        with pytest.raises(UsageError):
            EntireSample.sine(1.0).scaled(2.0)

    def test_from_dict(self):
        assert EntireSample.from_dict({"kind": "zeros", "zeros": [1.0], "beta": 0.5}).name == "zeros"
        with pytest.raises(UsageError):
            EntireSample.from_dict({"kind": "cosine"})


@pytest.mark.unit
class TestOmega:
    """ω(s) = L(s) + 2 log(1+s)"""

    def test_golden_section(self):
        assert gss(lambda x: (x - 2.0) ** 2, 0.0, 5.0) == pytest.approx(2.0, abs=1e-6)

    def test_legendre_of_affine_sigma(self, bernstein_service):
        """σ(y) = 1 + y gives L(s) = (s−1)²/4"""
        omega = bernstein_service.omega_from_sigma(GrowthFunction.affine(1.0, 1.0))
        L, y = omega.legendre(3.0)
        assert L == pytest.approx(1.0, rel=1e-6)
        assert y == pytest.approx(1.0, rel=1e-4)
        assert omega.legendre(0.5) == (0.0, 0.0)

    def test_legendre_of_linear_sigma(self, bernstein_service):
        """σ(y) = y gives L(s) = s²/4"""
        omega = bernstein_service.omega_from_sigma(GrowthFunction.affine(0.0, 1.0))
        s = np.array([0.0, 0.5, 1.0, 3.0, 10.0])
        np.testing.assert_allclose(omega.L(s), s**2 / 4.0, rtol=0, atol=1e-8)

    @pytest.mark.slow
    def test_integral_bound_for_linear_sigma(self, bernstein_service):
        omega = bernstein_service.omega_from_sigma(GrowthFunction.affine(0.0, 1.0))
        table = bernstein_service.verify_omega(omega, [0.0, 1.0, 2.0, 4.0])
        assert table["passed"].all()
        np.testing.assert_allclose(table["normalised_integral"], [0.596, 0.529, 0.196, 0.047], atol=5e-3)
        assert table["normalised_integral"].is_monotonic_decreasing

    def test_omega_is_even(self, bernstein_service, log_sigma):
        omega = bernstein_service.omega_from_sigma(log_sigma)
        assert omega(-2.5) == pytest.approx(omega(2.5))

    def test_bounded_sigma_rejected(self, bernstein_service):
        with pytest.raises(GrowthFunctionError):
            bernstein_service.omega_from_sigma(GrowthFunction.affine(1.0, 0.0))

    @pytest.mark.slow
    def test_integral_bound(self, bernstein_service, log_sigma):
        omega = bernstein_service.omega_from_sigma(log_sigma)
        table = bernstein_service.verify_omega(omega, [0.5, 1.0, 2.0])
        assert list(table.columns) == ["y", "normalised_integral", "abserr", "passed"]
        assert table["passed"].all()


@pytest.mark.unit
class TestZeroCountBound:
    """max|F| on [a, b] against (b−a)^n min e^{yσ(y)}/y^n"""

    def test_no_zeros(self, bernstein_service):
        assert bernstein_service.zero_count_bound(0, 0.5, 2.5, GrowthFunction.affine(1.0, 0.0)) == 1.0

    def test_two_zeros(self, bernstein_service):
        bound = bernstein_service.zero_count_bound(2, 0.5, 7.0, GrowthFunction.affine(1.0, 0.0))
        assert bound == pytest.approx(6.5**2 * math.e**2 / 4.0, rel=1e-6)

    def test_check_on_sine(self, bernstein_service):
        res = bernstein_service.zero_count_check(EntireSample.sine(1.0), 0.5, 2.5)
        assert res["n"] == 0
        assert res["max_abs_F"] == pytest.approx(1.0, abs=1e-6)
        assert res["holds"]

    def test_rejects_empty_interval(self, bernstein_service):
        with pytest.raises(UsageError):
            bernstein_service.zero_count_bound(1, 2.0, 2.0, GrowthFunction.affine(1.0, 0.0))


@pytest.mark.unit
class TestLogIntegral:
    """∫ log|F|/x² and the bound that needs many zeros"""

    def test_constant_function(self, bernstein_service):
        value, _ = bernstein_service.log_integral(EntireSample.constant(1.0), 1.0, 4.0)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_constant_half(self, bernstein_service):
        value, _ = bernstein_service.log_integral(EntireSample.constant(0.5), 1.0, 2.0)
        assert value == pytest.approx(-math.log(2.0) * 0.5, rel=1e-9)

    def test_requires_positive_range(self, bernstein_service):
        with pytest.raises(UsageError):
            bernstein_service.log_integral(EntireSample.sine(1.0), 0.0, 1.0)

    def test_solve_y_n(self, bernstein_service):
        assert bernstein_service.solve_y_n(4.0, GrowthFunction.affine(1.0, 0.0)) == pytest.approx(4.0)
        assert bernstein_service.solve_y_n(4.0, GrowthFunction.affine(0.0, 1.0)) == pytest.approx(2.0)

    def test_bound_holds_with_clustered_zeros(self, bernstein_service):
        F = EntireSample.with_zeros([10.1, 10.3, 10.5, 10.7, 10.9], 0.05)
        psi = PsiFunction.constant(2.0 * math.e * 0.25)
        report = bernstein_service.log_integral_check(F, 10.0, 11.0, psi, GrowthFunction.affine(0.25, 0.0))
        assert report.applicability == Applicability.APPLICABLE
        assert report.n == 5
        assert report.holds
        assert report.lhs <= report.rhs

    def test_inapplicable_without_zeros(self, bernstein_service):
        report = bernstein_service.log_integral_check(EntireSample.sine(1.0), 0.5, 2.5, PsiFunction.constant(5.0))
        assert report.applicability == Applicability.INAPPLICABLE
        assert report.holds is None
        assert report.reason


@pytest.mark.integration
class TestCarleman:
    """Q(R) stays above its calibration value"""

    def test_sine_regression(self, bernstein_service, log_sigma):
        report = bernstein_service.carleman_check(EntireSample.sine(1.0), [10.0, 30.0, 100.0, 300.0], log_sigma)
        assert report.passed
        assert [row.R for row in report.rows] == [10.0, 30.0, 100.0, 300.0]
        assert report.C == report.rows[0].Q

    def test_small_radius_rejected(self, bernstein_service, log_sigma):
        with pytest.raises(UsageError):
            bernstein_service.carleman_check(EntireSample.sine(1.0), [2.0], log_sigma)

    def test_rows_do_not_depend_on_threads(self, bernstein_service, log_sigma):
        radii = [30.0, 10.0, 100.0]
        serial = bernstein_service.carleman_check(EntireSample.sine(1.0), radii, log_sigma, threads=1)
        pooled = bernstein_service.carleman_check(EntireSample.sine(1.0), radii, log_sigma, threads=4)
        assert serial.model_dump() == pooled.model_dump()
        assert [row.R for row in pooled.rows] == [10.0, 30.0, 100.0]


@pytest.mark.integration
class TestUniquenessCertificate:
    """Divergence table S_n against σ(2b_n)"""

    @pytest.fixture
    def lattice(self):
        return Spectrum.arithmetic(1.0 / 64, T=4096.0, side="positive")

    @pytest.fixture
    def family(self, lattice, density_service, dyadic_family_bounds):
        a, b = dyadic_family_bounds
        return IntervalFamily(a, b, density_service.spectra.counts(lattice, a, b))

    def test_pass_with_sigma_from_psi(self, bernstein_service, density_service, lattice, family, constant_psi):
        sigma = density_service.sigma_from_psi(constant_psi, family).sigma
        cert, table = bernstein_service.uniqueness_certificate(lattice, sigma, constant_psi, family, 10.0)
        assert cert.status == CertificateStatus.PASS
        assert cert.final_ratio > 10.0
        assert cert.increasing_last_quartile
        assert len(table) == 12

    def test_fail_when_sigma_too_large(self, bernstein_service, lattice, family, constant_psi):
        cert, _ = bernstein_service.uniqueness_certificate(
            lattice, GrowthFunction.affine(40.0, 0.0), constant_psi, family, 10.0
        )
        assert cert.status == CertificateStatus.FAIL
        assert cert.violation_x is not None

    def test_fail_with_too_few_intervals(self, bernstein_service, density_service, lattice, constant_psi):
        a, b = np.array([1.0 + 1 / 128]), np.array([2.0 - 1 / 128])
        short = IntervalFamily(a, b, density_service.spectra.counts(lattice, a, b))
        sigma = density_service.sigma_from_psi(constant_psi, short).sigma
        cert, _ = bernstein_service.uniqueness_certificate(lattice, sigma, constant_psi, short, 10.0)
        assert cert.status == CertificateStatus.FAIL


@pytest.mark.integration
class TestSigmaGenerator:
    """φ̂ = ĝ ⋆ χ_ε ⋆ χ_ε for an unbounded σ"""

    def test_sinc_square_constant(self, bernstein_service):
        assert bernstein_service.sinc_square_estimate(1.0) >= 1.0

    @pytest.mark.slow
    def test_generator_is_positive(self, bernstein_service, log_sigma):
        built = bernstein_service.sigma_generator(log_sigma, 0.5, s_max=6.0, nodes=241)
        assert built["verdict"]["verdict"] == Verdict.POSITIVE_ON_WINDOW
        assert np.all(built["g_hat"] > 0)
        np.testing.assert_allclose(built["phi_hat"], built["phi_hat"][::-1], rtol=1e-6)

    def test_rejects_nonpositive_eps(self, bernstein_service, log_sigma):
        with pytest.raises(UsageError):
            bernstein_service.sigma_generator(log_sigma, 0.0)
