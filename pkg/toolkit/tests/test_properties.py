"""
Property Tests
Invariants checked over generated inputs with hypothesis
"""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from core.models.domain_models import Verdict
from core.services.generator_service import GeneratorSchedule, PiecewiseLinearProfile
from core.services.pairgen_service import PairGeneratorConfig, PairGeneratorService, phi_hat_closed_form
from core.services.span_service import SpanService
from core.services.spectrum_service import Spectrum, SpectrumService

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False, allow_subnormal=False)
pair_a = st.floats(0.05 * math.pi, 0.49 * math.pi)

INTEGERS = Spectrum.arithmetic(1.0, N=64)
PAIR = PairGeneratorConfig(a=0.45 * math.pi, K=30)


@pytest.mark.property
class TestCheckInNProperties:
    @given(st.lists(finite, min_size=1, max_size=40), st.floats(0.5, 2.0))
    @settings(max_examples=100, deadline=None)
    def test_scale_covariance(self, values, c):
        svc = SpanService()
        x = np.arange(len(values), dtype=float)
        base = svc.check_in_N(np.array(values), x)
        scaled = svc.check_in_N(-c * np.array(values), x)
        assert scaled["min_abs"] == pytest.approx(c * base["min_abs"], rel=1e-12)
        assert scaled["verdict"] == base["verdict"]

    @given(st.lists(finite, min_size=1, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_verdict_matches_zero_sample(self, values):
        out = SpanService().check_in_N(np.array(values), np.arange(len(values), dtype=float))
        assert (out["verdict"] == Verdict.FAIL) == (0.0 in values)


@pytest.mark.property
class TestClosedFormProperties:
    @given(st.lists(finite, min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_nonnegative_and_shifted(self, xs):
        x = np.array(xs)
        phi1 = phi_hat_closed_form(x, 1, PAIR)
        assert np.all(phi1 >= 0)
        np.testing.assert_array_equal(phi_hat_closed_form(x, 2, PAIR), phi_hat_closed_form(x - math.pi, 1, PAIR))

    @given(pair_a, pair_a)
    @settings(max_examples=25, deadline=None)
    def test_margin_monotone_in_a(self, a1, a2):
        lo, hi = sorted((a1, a2))
        svc = PairGeneratorService()
        assert svc.positivity_margin(PairGeneratorConfig(a=lo), 16).margin <= svc.positivity_margin(
            PairGeneratorConfig(a=hi), 16
        ).margin


@pytest.mark.property
class TestScheduleProperties:
    @given(st.integers(1, 40), st.integers(0, 40))
    def test_tail_sum(self, k, extra):
        K = k + extra
        assert GeneratorSchedule.tail_sum(k, K) == pytest.approx(2.0**-k - 2.0 ** (-K - 1), rel=1e-12)

    @given(st.integers(2, 100))
    def test_windows_nest(self, k):
        schedule = GeneratorSchedule()
        assert schedule.I(k - 1) < schedule.J(k) < schedule.I(k)


@pytest.mark.property
class TestCountProperties:
    @given(st.floats(-60.0, 60.0), st.floats(-60.0, 60.0), st.floats(-60.0, 60.0))
    @settings(max_examples=100, deadline=None)
    def test_additivity_on_integers(self, p, q, r):
        a, b, c = sorted((p, q, r))
        assume(a < b < c)
        svc = SpectrumService()
        split = svc.count(INTEGERS, a, b) + svc.count(INTEGERS, b, c) + (1 if float(b).is_integer() else 0)
        assert split == svc.count(INTEGERS, a, c)


@pytest.mark.property
class TestProfileProperties:
    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6, unique=True))
    @settings(max_examples=50, deadline=None)
    def test_distance_to_itself(self, heights):
        values = np.append(np.sort(heights)[::-1], 0.0)
        G = PiecewiseLinearProfile(np.arange(values.size, dtype=float), values)
        assert G.distance(G) == 0.0
        assert G.agrees_with(G, G.support)
        assert G.bound >= G.values[0]
