"""
Span Service Tests
Nonvanishing checks and approximation by translates
"""
import numpy as np
import pytest

from core.models.domain_models import Verdict
from core.models.errors import UsageError, WindowError
from core.services.expfit_service import SampledFunction
from core.services.span_service import SpanProblem, l1_norm, time_grid
from core.services.spectrum_service import Spectrum


def gaussian(s):
    return np.exp(-np.asarray(s, dtype=float) ** 2)


def two_translates(t):
    return gaussian(t - 1.0) + 0.5 * gaussian(t + 2.0)


@pytest.mark.unit
class TestCheckInN:
    """min |φ̂| on the sampled window"""

    def test_positive_samples(self, span_service):
        out = span_service.check_in_N(np.array([1.0, -2.0, 0.5]), np.array([0.0, 1.0, 2.0]))
        assert out["verdict"] == Verdict.POSITIVE_ON_WINDOW
        assert out["min_abs"] == 0.5
        assert out["argmin"] == 2.0
        assert out["window"] == [0.0, 2.0]
        assert out["note"]

    def test_zero_sample_fails(self, span_service):
        out = span_service.check_in_N(np.array([1.0, 0.0, 1.0]), np.array([-1.0, 0.0, 1.0]))
        assert out["verdict"] == Verdict.FAIL

    def test_sampled_function(self, span_service):
        phi_hat = SampledFunction.from_callable(lambda x: 2.0 + np.cos(x), -5.0, 5.0, nodes=64)
        out = span_service.check_in_N(phi_hat)
        assert out["verdict"] == Verdict.POSITIVE_ON_WINDOW
        assert out["min_abs"] >= 1.0

    def test_raw_values_need_locations(self, span_service):
        with pytest.raises(UsageError):
            span_service.check_in_N(np.ones(4))


@pytest.mark.unit
class TestSpanProblem:
    def test_needs_generator(self):
        with pytest.raises(UsageError):
            SpanProblem([], np.zeros(1), gaussian)

    def test_coarse_grid(self):
        with pytest.raises(WindowError):
            SpanProblem([gaussian], np.zeros(1), gaussian, t=np.linspace(-1, 1, 5))

    def test_from_spectrum_window(self, integers):
        problem = SpanProblem.from_spectrum(integers, [gaussian], gaussian, 3.0, time_grid(16, 512))
        np.testing.assert_array_equal(problem.freqs, [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0])
        assert problem.n_translates == 7

    def test_design_columns(self, integers):
        t = time_grid(16, 512)
        problem = SpanProblem.from_spectrum(integers, [gaussian, gaussian], gaussian, 1.0, t)
        A = problem.design()
        assert A.shape == (t.size, 6)
        np.testing.assert_allclose(A[:, 0], gaussian(t + 1.0))
        np.testing.assert_allclose(A[:, 3], A[:, 0])

    def test_tail_warning(self):
        problem = SpanProblem([np.ones_like], np.zeros(1), gaussian, t=time_grid(8, 64))
        assert len(problem.tail_warnings()) == 1
        clean = SpanProblem([gaussian], np.zeros(1), gaussian, t=time_grid(8, 64))
        assert clean.tail_warnings() == []


@pytest.mark.unit
class TestApproximateTranslates:
    """L² and L¹ fits by translates"""

    @pytest.fixture
    def problem(self, integers):
        return SpanProblem.from_spectrum(integers, [gaussian], two_translates, 3.0, time_grid(16, 2048))

    def test_exact_combination_lstsq(self, span_service, problem):
        result = span_service.approximate_translates(problem)
        assert result.l1_residual <= 1e-6 * result.target_l1
        coefs = dict(zip(problem.freqs.tolist(), result.coefs))
        assert coefs[1.0] == pytest.approx(1.0, abs=1e-6)
        assert coefs[-2.0] == pytest.approx(0.5, abs=1e-6)
        assert result.report.mode == "lstsq"
        assert result.report.n_translates == 7

    def test_exact_combination_lp(self, span_service, problem):
        result = span_service.approximate_translates(problem, mode="lp")
        assert result.l1_residual <= 1e-4 * result.target_l1
        assert result.report.mode == "lp"

    def test_no_translates(self, span_service):
        spec = Spectrum.explicit([10.0])
        problem = SpanProblem.from_spectrum(spec, [gaussian], gaussian, 3.0, time_grid(16, 512))
        result = span_service.approximate_translates(problem)
        assert result.report.n_translates == 0
        assert result.l1_residual == pytest.approx(result.target_l1)

    def test_unknown_mode(self, span_service, problem):
        with pytest.raises(UsageError):
            span_service.approximate_translates(problem, mode="simplex")

    def test_residual_never_exceeds_target(self, span_service, integers):
        def far(t):
            return gaussian(np.asarray(t) - 0.5) * np.exp(3j * np.asarray(t))

        problem = SpanProblem.from_spectrum(integers, [gaussian], far, 2.0, time_grid(16, 1024))
        result = span_service.approximate_translates(problem)
        assert result.l1_residual <= result.target_l1

    def test_l1_norm(self):
        t = time_grid(40, 8192)
        assert l1_norm(t, gaussian(t)) == pytest.approx(np.sqrt(np.pi), rel=1e-8)
