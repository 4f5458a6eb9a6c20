"""
Exponential Fitting Service Tests
Sobolev norms, exponential least squares and radius scans
"""
import math

import numpy as np
import pytest

from core.models.errors import IllConditionedError, WindowError
from core.services.expfit_service import (
    SampledFunction,
    TrigPolynomial,
    l1_from_sobolev,
    sobolev_norm,
    trapezoid_weights,
)


@pytest.mark.unit
class TestSobolevNorm:
    """‖h‖_I = ‖h‖₂ + ‖h′‖₂ on an interval"""

    def test_identity_on_unit_interval(self):
        h = SampledFunction.from_callable(lambda x: x, 0.0, 1.0, df=np.ones_like)
        assert sobolev_norm(h) == pytest.approx(1.0 / math.sqrt(3.0) + 1.0, rel=1e-6)

    def test_sine_on_half_period(self):
        h = SampledFunction.from_callable(np.sin, 0.0, math.pi, df=np.cos)
        assert sobolev_norm(h) == pytest.approx(2.0 * math.sqrt(math.pi / 2.0), rel=1e-6)

    def test_too_few_nodes(self):
        with pytest.raises(WindowError):
            SampledFunction.from_callable(np.sin, 0.0, 1.0, nodes=8)

    def test_empty_interval(self):
        with pytest.raises(WindowError):
            SampledFunction.from_callable(np.sin, 1.0, 1.0)

    def test_trapezoid_weights_sum_to_length(self):
        x = np.linspace(-2.0, 3.0, 101)
        assert trapezoid_weights(x).sum() == pytest.approx(5.0)


@pytest.mark.unit
class TestL1FromSobolev:
    """Transform must have decayed at the window ends"""

    def test_decayed_transform(self):
        phi_hat = SampledFunction.from_callable(
            lambda x: np.exp(-(x**2)), -10.0, 10.0, df=lambda x: -2 * x * np.exp(-(x**2))
        )
        assert l1_from_sobolev(phi_hat) == pytest.approx(sobolev_norm(phi_hat))

    def test_tail_above_tolerance(self):
        phi_hat = SampledFunction.from_callable(lambda x: np.exp(-(x**2)), -1.0, 1.0)
        with pytest.raises(WindowError) as exc:
            l1_from_sobolev(phi_hat)
        assert exc.value.details["tail"] == pytest.approx(math.exp(-1.0))


@pytest.mark.unit
class TestTrigPolynomial:
    def test_evaluation_and_derivative(self):
        P = TrigPolynomial(np.array([0.0, 2.0]), np.array([1.0, 0.5j]))
        z = np.array([0.0, 0.3])
        np.testing.assert_allclose(P(z), 1.0 + 0.5j * np.exp(2j * z))
        np.testing.assert_allclose(P.derivative(z), -1.0 * np.exp(2j * z))

    def test_bound(self):
        P = TrigPolynomial(np.array([1.0, -2.0]), np.array([1.0, 0.5]))
        assert P.bound == pytest.approx(3.5)

    def test_duplicate_frequencies(self):
        with pytest.raises(ValueError):
            TrigPolynomial(np.array([1.0, 1.0]), np.array([1.0, 1.0]))

    def test_zero_polynomial(self):
        assert np.all(TrigPolynomial.zero()(np.linspace(0, 1, 5)) == 0)


@pytest.mark.unit
class TestFitExponentials:
    """Sobolev least squares"""

    def test_constant_target(self, expfit_service):
        target = SampledFunction.from_callable(np.ones_like, -1.0, 1.0, nodes=256, df=np.zeros_like)
        fit = expfit_service.fit_exponentials(target, [0.0])
        assert fit.poly.coefs[0] == pytest.approx(1.0, abs=1e-8)
        assert fit.residual == pytest.approx(0.0, abs=1e-8)

    def test_single_exponential_target(self, expfit_service):
        target = SampledFunction.from_callable(
            lambda z: np.exp(0.7j * z), -1.0, 1.0, nodes=256, df=lambda z: 0.7j * np.exp(0.7j * z)
        )
        fit = expfit_service.fit_exponentials(target, [0.7])
        assert fit.poly.coefs[0] == pytest.approx(1.0, abs=1e-8)

    def test_matches_normal_equations(self, expfit_service):
        """QR solve agrees with the dense normal-equation oracle"""
        ridge = 1e-10
        freqs = np.arange(-2.0, 3.0)
        target = SampledFunction.from_callable(lambda z: z, -1.0, 1.0, nodes=512, df=np.ones_like)
        fit = expfit_service.fit_exponentials(target, freqs, ridge=ridge, refine=False)

        x = target.x
        w = trapezoid_weights(x)
        E = np.exp(1j * np.multiply.outer(x, freqs))
        dE = E * (1j * freqs)
        gram = E.conj().T @ (w[:, None] * E) + dE.conj().T @ (w[:, None] * dE) + ridge * np.eye(freqs.size)
        rhs = E.conj().T @ (w * target.values) + dE.conj().T @ (w * target.derivative_values)
        oracle = np.linalg.solve(gram, rhs)

        rel = np.linalg.norm(fit.poly.coefs - oracle) / np.linalg.norm(oracle)
        assert rel <= 1e-6

    def test_no_frequencies(self, expfit_service):
        target = SampledFunction.from_callable(np.sin, 0.0, math.pi, df=np.cos)
        fit = expfit_service.fit_exponentials(target, [])
        assert fit.residual == pytest.approx(sobolev_norm(target))
        assert fit.coef_norm == 0.0

    def test_singular_without_ridge(self, expfit_service):
        target = SampledFunction.from_callable(np.ones_like, -1.0, 1.0, nodes=256, df=np.zeros_like)
        with pytest.raises(IllConditionedError):
            expfit_service.fit_exponentials(target, [0.0, 1e-14], ridge=0.0, refine=False)

    def test_more_frequencies_never_increase_residual(self, expfit_service):
        target = expfit_service.bump(2.0, nodes=512)
        few = expfit_service.fit_exponentials(target, np.arange(-3.0, 4.0), refine=False)
        many = expfit_service.fit_exponentials(target, np.arange(-6.0, 7.0), refine=False)
        assert many.residual <= few.residual + 1e-9


@pytest.mark.unit
class TestRadiusEstimate:
    """Jump detection on residual tables"""

    def test_detects_jump(self, expfit_service):
        rows = [
            {"rho": 1.0, "residual": 1e-6},
            {"rho": 2.0, "residual": 2e-6},
            {"rho": 3.0, "residual": 1e-3},
        ]
        assert expfit_service.estimate_radius(rows) == pytest.approx(2.5)

    def test_no_jump(self, expfit_service):
        rows = [{"rho": r, "residual": 1e-4 * r} for r in (1.0, 2.0, 3.0)]
        assert expfit_service.estimate_radius(rows) is None

    def test_cross_check(self, expfit_service):
        out = expfit_service.cross_check_radius(3.1, 1.0)
        assert out["predicted"] == pytest.approx(math.pi)
        assert out["abs_diff"] == pytest.approx(math.pi - 3.1)
        assert expfit_service.cross_check_radius(None, 1.0)["abs_diff"] is None


@pytest.mark.integration
@pytest.mark.slow
class TestRadiusScan:
    """ℤ and its exponentially perturbed copy have spectral radius π"""

    def test_transition_across_pi(self, expfit_service, integers):
        rows = expfit_service.radius_scan(integers, [2.5, 3.4], 40.0, ridge=1e-8, nodes=1024)
        low, high = rows[0]["residual"], rows[1]["residual"]
        assert low <= 1e-2
        assert high >= 10 * low
        assert rows[0]["n_freqs"] == 81

    def test_perturbed_integers_share_the_transition(self, expfit_service, perturbed):
        rows = expfit_service.radius_scan(perturbed, [2.5, 3.4], 40.0, ridge=1e-8, nodes=1024)
        low, high = rows[0]["residual"], rows[1]["residual"]
        assert low <= 1e-2
        assert high >= 10 * low
