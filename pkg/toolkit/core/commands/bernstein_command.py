"""
bernstein: ω construction, zero-count and log-integral bounds, Carleman table
and the uniqueness certificate
"""
import argparse

import numpy as np
import pandas as pd

from config import settings

from ..models.errors import UsageError
from ..services.bernstein_service import EntireSample, get_bernstein_service
from ..services.density_service import IntervalFamily, get_density_service
from ..services.report_writer import ReportWriter
from ..services.spectrum_service import get_spectrum_service
from .common import add_common, growth_from_arg, json_arg, load_spectrum, psi_from_arg

DEFAULT_SIGMA = {"kind": "log", "params": {"c0": 1.0, "c1": 1.0, "shift": 1.0}}
DEFAULT_FUNCTION = {"kind": "sine", "a": 1.0}


def register(subparsers) -> None:
    parser = subparsers.add_parser("bernstein", help="Bernstein-class diagnostics")
    add_common(parser, spectrum_required=False)
    parser.add_argument("--sigma", type=json_arg, default=DEFAULT_SIGMA, help="σ as JSON {kind, params}")
    parser.add_argument("--function", type=json_arg, default=DEFAULT_FUNCTION, help="Entire sample as JSON {kind, ...}")
    parser.add_argument("--R", type=float, nargs="+", default=[10.0, 30.0, 100.0, 300.0], help="Carleman radii")
    parser.add_argument("--interval", type=float, nargs=2, default=None, metavar=("A", "B"))
    parser.add_argument("--psi", type=json_arg, default=None, help="Ψ as JSON {kind, params}")
    parser.add_argument("--omega-y", type=float, nargs="*", default=[0.5, 1.0, 2.0, 4.0, 8.0])
    parser.add_argument("--certificate", action="store_true", help="Uniqueness certificate (needs --spectrum and --psi)")
    parser.add_argument("--horizon", type=float, default=4096.0)
    parser.add_argument("--s-min", type=float, default=settings.S_MIN)
    parser.add_argument("--threshold", type=float, default=settings.CERT_THRESHOLD)
    parser.add_argument("--eps", type=float, default=None, help="Build the σ-generator with box half-width eps")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    svc = get_bernstein_service()
    sigma = growth_from_arg(args.sigma)
    psi = psi_from_arg(args.psi)
    F = EntireSample.from_dict(args.function)

    writer.json("carleman.json", svc.carleman_check(F, args.R, sigma, threads=args.threads))

    if args.omega_y and sigma.unbounded:
        omega = svc.omega_from_sigma(sigma)
        writer.csv("omega.csv", svc.verify_omega(omega, args.omega_y, threads=args.threads))

    if args.interval is not None:
        a, b = args.interval
        writer.json("zero_count.json", svc.zero_count_check(F, a, b, sigma))
        if psi is not None:
            writer.json("log_integral.json", svc.log_integral_check(F, a, b, psi, sigma))

    if args.certificate:
        spec = load_spectrum(args)
        if spec is None or psi is None:
            raise UsageError("--certificate needs --spectrum and --psi")
        plus, _ = get_spectrum_service().split(spec)
        family = get_density_service().psi_substantial_search(plus, psi, args.horizon, args.s_min)
        if family is None:
            family = IntervalFamily(np.zeros(0), np.zeros(0), np.zeros(0, dtype=int))
        cert, table = svc.uniqueness_certificate(plus, sigma, psi, family, args.threshold)
        writer.csv("divergence.csv", table)
        writer.json("certificate.json", cert)

    if args.eps is not None:
        built = svc.sigma_generator(sigma, args.eps)
        writer.csv("sigma_generator.csv", pd.DataFrame({k: built[k] for k in ("s", "g_hat", "phi_hat")}))
        writer.json("sigma_generator.json", {**built["verdict"], "eps": args.eps, "sinc_square_C": svc.sinc_square_estimate(args.eps)})
    return 0
