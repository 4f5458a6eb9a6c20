"""
gen: finite-stage generator construction with certificates
"""
import argparse

import pandas as pd

from ..models.errors import StageFitError
from ..services.generator_service import get_generator_service
from ..services.report_writer import ReportWriter
from .common import add_common, load_spectrum


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen", help="Build a generator stage by stage")
    add_common(parser, spectrum_required=True)
    parser.add_argument("--stages", type=int, default=2, help="Number of stages K")
    parser.add_argument("--freq-budget", type=int, default=None, help="Cap on frequencies per stage")
    parser.add_argument("--ridge", type=float, default=None)
    parser.add_argument("--nodes", type=int, default=None)
    parser.add_argument("--sanity", action="store_true", help="Run the bump-fit radius check before each stage")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    spec = load_spectrum(args)
    gen = get_generator_service()
    try:
        stages = gen.run(spec, args.stages, args.freq_budget, args.ridge, args.nodes, args.sanity)
    except StageFitError as e:
        writer.json("certificates.json", e.details.get("completed", []))
        raise
    writer.json("certificates.json", [s.certificate for s in stages])
    writer.json("warnings.json", {str(s.certificate.stage): s.warnings for s in stages})
    writer.csv("Phi_knots.csv", stages[-1].G.to_frame())
    if len(stages) < 2:
        return 0

    Phi, t, phi = gen.assemble_phi(stages)
    writer.csv("phi.csv", pd.DataFrame({"t": t, "phi": phi}))
    writer.svg("phi.svg", {"phi": (t, phi)}, title="Assembled generator", xlabel="t", ylabel="phi")
    reports = [gen.telescoping_check(stages, k) for k in range(1, len(stages))]
    writer.json("telescoping.json", {"Phi_norm": Phi.norm, "Phi_bound": Phi.bound, "reports": reports})
    return 0
