"""
Pytest Configuration
Shared fixtures: spectra, growth functions, services and output directories
"""
import json
import math
import os

import numpy as np
import pytest

os.environ.setdefault("TOOLKIT_LOG_LEVEL", "WARNING")

from core.models.growth import GrowthFunction, PsiFunction  # noqa: E402
from core.services.bernstein_service import BernsteinService  # noqa: E402
from core.services.density_service import DensityService  # noqa: E402
from core.services.expfit_service import ExpFitService  # noqa: E402
from core.services.generator_service import GeneratorSchedule, GeneratorService  # noqa: E402
from core.services.pairgen_service import PairGeneratorConfig, PairGeneratorService  # noqa: E402
from core.services.span_service import SpanService  # noqa: E402
from core.services.spectrum_service import Spectrum, SpectrumService  # noqa: E402


@pytest.fixture
def spectrum_service():
    return SpectrumService()


@pytest.fixture
def expfit_service():
    return ExpFitService()


@pytest.fixture
def density_service():
    return DensityService()


@pytest.fixture
def bernstein_service():
    return BernsteinService()


@pytest.fixture
def span_service():
    return SpanService()


@pytest.fixture
def pairgen_service():
    return PairGeneratorService()


@pytest.fixture
def generator_service():
    return GeneratorService()


@pytest.fixture
def schedule():
    return GeneratorSchedule()


@pytest.fixture
def integers():
    """ℤ ∩ [−64, 64]"""
    return Spectrum.arithmetic(1.0, N=64)


@pytest.fixture
def positive_integers():
    return Spectrum.arithmetic(1.0, T=64.0, side="positive")


@pytest.fixture
def sqrt_spectrum():
    """{±√n : 0 ≤ n ≤ 400}"""
    return Spectrum.power(0.5, N=400, side="both")


@pytest.fixture
def perturbed():
    """n + 0.1·0.5^{|n|}, |n| ≤ 40"""
    return Spectrum.perturbed_integers(0.1, 0.5, N=40)


@pytest.fixture
def pair_config():
    return PairGeneratorConfig(a=0.45 * math.pi, K=30)


@pytest.fixture
def log_sigma():
    """σ(y) = 1 + log(1 + y)"""
    return GrowthFunction.logarithmic(1.0, 1.0, 1.0)


@pytest.fixture
def constant_psi():
    return PsiFunction.constant(40.0)


@pytest.fixture
def dyadic_family_bounds():
    """a_k = 2^k + 1/128, b_k = 2^{k+1} − 1/128 for k = 0..11"""
    k = np.arange(12)
    return 2.0**k + 1.0 / 128, 2.0 ** (k + 1) - 1.0 / 128


@pytest.fixture
def spectrum_file(tmp_path):
    """Write a spectrum JSON file and return its path"""

    def write(data, name="spectrum.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
