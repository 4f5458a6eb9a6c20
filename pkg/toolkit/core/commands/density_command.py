"""
density: certified lower bound for the Beurling–Malliavin density
"""
import argparse

import numpy as np

from config import settings

from ..models.domain_models import DensitySummary
from ..services.density_service import get_density_service
from ..services.report_writer import ReportWriter
from ..services.spectrum_service import get_spectrum_service
from .common import add_common, json_arg, load_spectrum, psi_from_arg


def register(subparsers) -> None:
    parser = subparsers.add_parser("density", help="Substantial-family density bounds")
    add_common(parser, spectrum_required=True)
    parser.add_argument("--horizon", type=float, default=1024.0, help="Largest interval endpoint searched")
    parser.add_argument("--s-min", type=float, default=settings.S_MIN, help="Finite stand-in for a divergent series")
    parser.add_argument("--tol", type=float, default=settings.DENSITY_TOL, help="Bisection tolerance on D")
    parser.add_argument("--psi", type=json_arg, default=None, help='Ψ as JSON, e.g. {"kind": "log", "params": {"scale": 0.5}}')
    parser.add_argument("--d-grid", type=float, nargs="+", default=None, help="Increasing D values for the diagonal Ψ")
    parser.add_argument("--export-points", action="store_true", help="Write the realised points to points.csv")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    spec = load_spectrum(args)
    if args.export_points:
        writer.csv("points.csv", get_spectrum_service().points_frame(spec))
    density = get_density_service()
    result = density.bm_lower_bound(spec, args.horizon, args.s_min, args.tol)
    family = result["family"]
    if family is not None:
        writer.csv("family.csv", family.to_frame())
    summary = DensitySummary(
        horizon=result["horizon"],
        s_min=result["s_min"],
        tol=result["tol"],
        bound=result["bound"],
        bound_plus=result["bound_plus"],
        bound_minus=result["bound_minus"],
        best_horizon=result["best_horizon"],
        family_size=family.size if family is not None else 0,
        divergence_sum=family.divergence_sum if family is not None else 0.0,
    )
    writer.json("summary.json", summary)

    plus, _ = get_spectrum_service().split(spec)
    psi = psi_from_arg(args.psi)
    if psi is not None:
        found = density.psi_substantial_search(plus, psi, args.horizon, args.s_min)
        writer.json(
            "psi_search.json",
            {
                "psi": psi.describe(),
                "found": found is not None,
                "family_size": found.size if found is not None else 0,
                "verified": bool(found.verify(plus, psi)) if found is not None else False,
            },
        )
        if found is not None:
            writer.csv("psi_family.csv", found.to_frame())

    if args.d_grid:
        psi_diag, diag = density.diagonal_psi(plus, args.d_grid, args.horizon, args.s_min)
        sigma = density.sigma_from_psi(psi_diag, diag)
        writer.csv("diagonal_family.csv", diag.to_frame())
        writer.json(
            "diagonal.json",
            {
                "psi": psi_diag.describe(),
                "family_size": diag.size,
                "verified": bool(diag.verify(plus, psi_diag)),
                "sigma": sigma.sigma.describe(),
                "certificate": np.asarray(sigma.certificate()),
                "warnings": sigma.warnings,
            },
        )
    return 0
