"""
pair: the two-generator construction for exponentially perturbed integers
"""
import argparse

import numpy as np

from config import settings

from ..services.pairgen_service import TARGETS, PairGeneratorConfig, get_pairgen_service
from ..services.report_writer import ReportWriter
from ..services.spectrum_service import Spectrum
from .common import add_common, load_spectrum

DEFAULT_SPECTRUM = {"C": 0.1, "r": 0.5, "N": 40}


def register(subparsers) -> None:
    parser = subparsers.add_parser("pair", help="Pair of generators: profiles, positivity and span tests")
    add_common(parser, spectrum_required=False)
    parser.add_argument("--a", type=float, default=settings.PAIR_A, help="Half-width parameter, π/4 < a < π/2")
    parser.add_argument("--K", type=int, default=settings.PAIR_K, help="Truncation order of Σ e^{−|k|}")
    parser.add_argument("--grid-points", type=int, default=256, help="Positivity grid density (power of two)")
    parser.add_argument("--window", type=float, nargs="+", default=[6.0, 12.0, 24.0], help="Translate windows W")
    parser.add_argument("--targets", nargs="+", choices=TARGETS, default=["gaussian_comb"])
    parser.add_argument("--single", action="store_true", help="Also run the φ₁-only control")
    parser.add_argument("--lattice", action="store_true", help="Also run the pair on ℤ over the same window")
    parser.add_argument("--mode", choices=["lstsq", "lp"], default="lstsq")
    parser.add_argument("--ridge", type=float, default=None)
    parser.add_argument("--no-span", action="store_true", help="Skip the span tests")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    cfg = PairGeneratorConfig(a=args.a, K=args.K)
    svc = get_pairgen_service()
    x = np.linspace(-4.0 * np.pi, 4.0 * np.pi, 2049)
    profile = svc.profile_frame(cfg, x)
    writer.csv("profile.csv", profile)
    writer.svg(
        "profile.svg",
        {"phi_hat_1": (x, profile["phi_hat_1"]), "phi_hat_2": (x, profile["phi_hat_2"]), "sum": (x, profile["sum"])},
        title="Transforms of the pair",
        xlabel="x",
    )
    writer.json("positivity.json", svc.positivity_margin(cfg, args.grid_points))
    if args.no_span:
        return 0

    spec = load_spectrum(args) or Spectrum.perturbed_integers(**DEFAULT_SPECTRUM)
    runs = [("pair", spec, False)]
    if args.single:
        runs.append(("single", spec, True))
    if args.lattice:
        runs.append(("lattice", svc.integer_control(spec), False))
    rows = []
    for label, run_spec, single in runs:
        for w in args.window:
            for row in svc.pair_span_test(run_spec, cfg, args.targets, w, args.ridge, single, args.mode, threads=args.threads):
                rows.append({"run": label, **row})
    writer.json("span.json", {"a": cfg.a, "K": cfg.K, "rows": rows})

    series = {}
    for label, _, _ in runs:
        for target in args.targets:
            pts = [(r["window"], r["l1_residual"]) for r in rows if r["run"] == label and r["target"] == target]
            series[f"{label}:{target}"] = ([p[0] for p in pts], [p[1] for p in pts])
    writer.svg("span_decay.svg", series, title="L1 residual against window", xlabel="W", ylabel="L1 residual", logy=True)
    return 0
