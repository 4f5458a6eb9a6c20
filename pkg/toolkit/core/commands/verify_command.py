"""
verify: desk-scale battery of the toolkit's numerical claims
"""
import argparse
import math
from typing import Callable, List, Tuple

import numpy as np

from ..models.domain_models import Applicability, VerifyCheck
from ..models.growth import GrowthFunction, PsiFunction
from ..services.bernstein_service import EntireSample, get_bernstein_service
from ..services.density_service import get_density_service
from ..services.expfit_service import get_expfit_service
from ..services.generator_service import GeneratorSchedule, PiecewiseLinearProfile
from ..services.pairgen_service import PairGeneratorConfig, get_pairgen_service, phi_hat_closed_form
from ..services.report_writer import ReportWriter
from ..services.span_service import l1_norm, time_grid
from ..services.spectrum_service import Spectrum
from .common import add_common

EXIT_CHECK_FAILED = 3


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="Run the acceptance battery")
    add_common(parser, spectrum_required=False)
    parser.set_defaults(handler=run)


def _closed_form_vs_quadrature() -> VerifyCheck:
    cfg = PairGeneratorConfig(a=1.4, K=30)
    x = np.linspace(-10 * np.pi, 10 * np.pi, 201)
    diff = get_pairgen_service().quadrature_agreement(cfg, x)
    value = max(diff.values())
    return VerifyCheck(check="closed_form_vs_quadrature", value=value, target="<= 1e-5", passed=value <= 1e-5)


def _support_identity() -> VerifyCheck:
    cfg = PairGeneratorConfig(a=1.4, K=30)
    x = np.linspace(-10 * np.pi, 10 * np.pi, 20001)
    dist = np.abs(x - 2 * np.pi * np.round(x / (2 * np.pi)))
    gap = x[(dist > 2 * cfg.a + 1e-9) & (dist <= np.pi)][:1000]
    value = float(np.max(np.abs(phi_hat_closed_form(gap, 1, cfg))))
    return VerifyCheck(check="support_identity", value=value, target="== 0 on the gaps", passed=value == 0.0)


def _shift_identity() -> VerifyCheck:
    cfg = PairGeneratorConfig(a=1.4, K=30)
    x = np.linspace(-10 * np.pi, 10 * np.pi, 1001)
    value = float(np.max(np.abs(phi_hat_closed_form(x, 2, cfg) - phi_hat_closed_form(x - np.pi, 1, cfg))))
    return VerifyCheck(check="shift_identity", value=value, target="== 0", passed=value == 0.0)


def _positivity() -> List[VerifyCheck]:
    svc = get_pairgen_service()
    checks = []
    margins = []
    for a in (0.26 * math.pi, 0.35 * math.pi, 0.45 * math.pi):
        m = svc.positivity_margin(PairGeneratorConfig(a=a)).margin
        margins.append(m)
        checks.append(VerifyCheck(check=f"positivity_a={a / math.pi:.2f}pi", value=m, target="> 0", passed=m > 0))
    edge = svc.positivity_margin(PairGeneratorConfig(a=math.pi / 4)).margin
    checks.append(VerifyCheck(check="positivity_a=pi/4", value=edge, target="|margin| <= 1e-12", passed=abs(edge) <= 1e-12))
    monotone = bool(np.all(np.diff([edge] + margins) >= 0))
    checks.append(VerifyCheck(check="positivity_monotone", value=float(monotone), target="nondecreasing in a", passed=monotone))
    return checks


RADIUS_SPECTRA = (
    ("Z", Spectrum.arithmetic(1.0, N=64)),
    ("perturbed", Spectrum.perturbed_integers(0.1, 0.5, N=40)),
)


def _radius_transition() -> List[VerifyCheck]:
    svc = get_expfit_service()
    checks = []
    for name, spec in RADIUS_SPECTRA:
        rows = svc.radius_scan(spec, [2.5, 3.4], 40.0, ridge=1e-8)
        low, high = rows[0]["residual"], rows[1]["residual"]
        passed = low <= 1e-2 and high >= 10 * low
        checks.append(
            VerifyCheck(
                check=f"radius_transition_{name}",
                value=high / max(low, 1e-300),
                target="r(2.5) <= 1e-2, r(3.4)/r(2.5) >= 10",
                passed=passed,
            )
        )
    return checks


def _density_integers() -> VerifyCheck:
    bound = get_density_service().bm_lower_bound(Spectrum.arithmetic(1.0, T=2048.0), 1024.0, 2.0, 0.01)["bound"]
    return VerifyCheck(check="density_Z", value=bound, target="in [0.95, 1.0]", passed=0.95 <= bound <= 1.0)


def _l1_from_sobolev() -> VerifyCheck:
    G = PiecewiseLinearProfile.first(GeneratorSchedule())
    t = time_grid()
    l1 = l1_norm(t, G.inverse_transform(t))
    return VerifyCheck(check="l1_below_sobolev", value=l1, target=f"<= {G.norm:.6g}", passed=l1 <= G.norm)


def _omega() -> List[VerifyCheck]:
    svc = get_bernstein_service()
    omega = svc.omega_from_sigma(GrowthFunction.affine(0.0, 1.0))
    s = np.array([0.5, 1.0, 3.0, 10.0])
    legendre_err = float(np.max(np.abs(omega.L(s) - s**2 / 4.0)))
    table = svc.verify_omega(omega, [0.0, 1.0, 2.0, 4.0])
    value = float(table["normalised_integral"].max())
    return [
        VerifyCheck(check="omega_legendre", value=legendre_err, target="|L(s) - s^2/4| <= 1e-8", passed=legendre_err <= 1e-8),
        VerifyCheck(check="omega_integral", value=value, target="<= 1", passed=bool(table["passed"].all())),
    ]


def _zero_count() -> VerifyCheck:
    res = get_bernstein_service().zero_count_check(EntireSample.sine(1.0), 0.5, 2.5)
    return VerifyCheck(check="zero_count_bound", value=res["max_abs_F"], target=f"<= {res['bound']:.6g}", passed=res["holds"])


def _log_integral() -> VerifyCheck:
    F = EntireSample.with_zeros([10.1, 10.3, 10.5, 10.7, 10.9], 0.05)
    sigma = GrowthFunction.affine(0.25, 0.0)
    psi = PsiFunction.constant(2.0 * math.e * 0.25)
    rep = get_bernstein_service().log_integral_check(F, 10.0, 11.0, psi, sigma)
    passed = rep.applicability == Applicability.APPLICABLE and bool(rep.holds)
    return VerifyCheck(check="log_integral_bound", value=rep.lhs, target=f"<= {rep.rhs}", passed=passed)


def _carleman() -> VerifyCheck:
    rep = get_bernstein_service().carleman_check(
        EntireSample.sine(1.0), [10.0, 30.0, 100.0, 300.0], GrowthFunction.logarithmic(1.0, 1.0, 1.0)
    )
    return VerifyCheck(check="carleman_regression", value=rep.min_Q, target=f">= {rep.C - rep.tol:.6g}", passed=rep.passed)


BATTERY: Tuple[Callable, ...] = (
    _closed_form_vs_quadrature,
    _support_identity,
    _shift_identity,
    _positivity,
    _radius_transition,
    _density_integers,
    _l1_from_sobolev,
    _omega,
    _zero_count,
    _log_integral,
    _carleman,
)


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    checks: List[VerifyCheck] = []
    for check in BATTERY:
        out = check()
        checks.extend(out if isinstance(out, list) else [out])
    writer.json("verify.json", checks)
    failed = [c.check for c in checks if not c.passed]
    return EXIT_CHECK_FAILED if failed else 0
