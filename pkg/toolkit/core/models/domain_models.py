"""
Domain Models
Pydantic models for the files the CLI reads and the reports it writes
"""
from datetime import datetime, timezone
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator


# Enums
class SpectrumKind(str, Enum):
    PERTURBED_INTEGERS = "perturbed_integers"
    POWER = "power"
    ARITHMETIC = "arithmetic"
    EXPLICIT = "explicit"


class SignRule(str, Enum):
    PLUS = "plus"
    ALTERNATING = "alternating"


class Side(str, Enum):
    BOTH = "both"
    POSITIVE = "positive"


class Verdict(str, Enum):
    POSITIVE_ON_WINDOW = "POSITIVE_ON_WINDOW"
    FAIL = "FAIL"


class CertificateStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"


class Applicability(str, Enum):
    APPLICABLE = "applicable"
    INAPPLICABLE = "inapplicable"


class StrictModel(BaseModel):
    """Unknown keys are rejected everywhere"""

    model_config = ConfigDict(extra="forbid")


# Spectrum files
class _WindowedSpectrum(StrictModel):
    N: Optional[int] = Field(None, gt=0, description="Index window")
    T: Optional[float] = Field(None, gt=0, description="Horizon window")
    side: Side = Field(Side.BOTH, description="Two-sided or positive half")

    @model_validator(mode="after")
    def check_window(self):
        if self.N is None and self.T is None:
            raise ValueError("a window N or T is required")
        return self


class PerturbedIntegersFile(_WindowedSpectrum):
    kind: Literal["perturbed_integers"]
    C: float = Field(..., gt=0, description="Perturbation amplitude")
    r: float = Field(..., gt=0, lt=1, description="Perturbation decay ratio")
    sign: SignRule = Field(SignRule.PLUS, description="Sign pattern of a_n")


class PowerFile(_WindowedSpectrum):
    kind: Literal["power"]
    alpha: float = Field(..., gt=0, le=1, description="Exponent of n^alpha")


class ArithmeticFile(_WindowedSpectrum):
    kind: Literal["arithmetic"]
    step: float = Field(..., gt=0, description="Lattice step")


class ExplicitFile(StrictModel):
    kind: Literal["explicit"]
    points: List[float] = Field(..., min_length=1, description="Sorted distinct points")
    lower: Optional[float] = Field(None, description="Lower end of the window")
    upper: Optional[float] = Field(None, description="Upper end of the window")

    @field_validator("points")
    @classmethod
    def validate_points(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("explicit points must be strictly increasing")
        return v


SpectrumFile = Annotated[
    Union[PerturbedIntegersFile, PowerFile, ArithmeticFile, ExplicitFile],
    Field(discriminator="kind"),
]

spectrum_file_adapter = TypeAdapter(SpectrumFile)


# Reports
class StageCertificate(StrictModel):
    stage: int
    delta: float
    eq1_measured: float
    eq2_measured: float
    B_G: float
    B_P: float
    freq_count: int
    G_norm: float = Field(..., description="Global Sobolev norm of G_k")
    ramp_height: float = Field(0.0, description="Apex height of the new tail")
    eq1_ok: bool
    eq2_ok: bool


class TelescopingReport(StrictModel):
    k: int
    stages: int
    fourier_direct: float
    fourier_split: float
    fourier_target: float
    tail_estimate: float
    l1_quadrature: float
    l1_tail_bound: float
    l1_measured: float
    eps_k: float
    note: str = "finite-stage certificate; the infinite construction is not run"


class SpanReport(StrictModel):
    window: float
    n_translates: int
    l1_residual: float
    coef_norm: float
    target_l1: float
    weighted_l2_residual: float
    mode: str = "lstsq"
    generators: int = 1


class RadiusRow(StrictModel):
    rho: float
    residual: float
    coef_norm: float
    n_freqs: int


class PositivityReport(StrictModel):
    a: float
    K: int
    margin: float
    argmin: float
    verdict: Verdict


class DensitySummary(StrictModel):
    horizon: float
    s_min: float
    tol: float
    bound: float
    bound_plus: float
    bound_minus: float
    best_horizon: Optional[float] = None
    family_size: int
    divergence_sum: float
    note: str = "certified lower bound at this horizon and s_min, not D_BM itself"


class LogIntegralReport(StrictModel):
    a: float
    b: float
    n: int
    y_n: Optional[float]
    lhs: float
    zero_count_bound: Optional[float]
    rhs: Optional[float]
    slack: Optional[float]
    holds: Optional[bool]
    applicability: Applicability
    reason: str = ""


class CarlemanRow(StrictModel):
    R: float
    log_integral_half: float
    sigma_R: float
    Q: float
    carleman_line: float
    carleman_arc: float
    carleman_sum: float
    growth_adjusted_integral: float


class CarlemanReport(StrictModel):
    calibration_R: float
    C: float
    tol: float
    rows: List[CarlemanRow]
    min_Q: float
    passed: bool


class UniquenessCertificate(StrictModel):
    status: CertificateStatus
    threshold: float
    final_ratio: Optional[float]
    increasing_last_quartile: bool
    violation_x: Optional[float] = None
    reason: str = ""
    rows: int


class VerifyCheck(StrictModel):
    check: str
    value: float
    target: str
    passed: bool


class RunManifest(StrictModel):
    command: str
    params: Dict[str, Any]
    outputs: List[str]
    exit_code: int
    toolkit_version: str
    timestamp: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
