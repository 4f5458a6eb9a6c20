"""
radius: residual-versus-ρ curve for the spectral radius
"""
import argparse

import numpy as np
import pandas as pd

from ..models.domain_models import RadiusRow
from ..models.errors import UsageError
from ..services.expfit_service import get_expfit_service
from ..services.report_writer import ReportWriter
from .common import add_common, load_spectrum


def register(subparsers) -> None:
    parser = subparsers.add_parser("radius", help="Spectral radius scan")
    add_common(parser, spectrum_required=True)
    parser.add_argument("--rho", type=float, nargs="*", default=None, help="Explicit ρ values")
    parser.add_argument("--rho-min", type=float, default=0.5)
    parser.add_argument("--rho-max", type=float, default=5.0)
    parser.add_argument("--rho-steps", type=int, default=19)
    parser.add_argument("--max-freqs", type=float, default=40.0, help="Use Λ ∩ [−max, max]")
    parser.add_argument("--ridge", type=float, default=None)
    parser.add_argument("--nodes", type=int, default=None)
    parser.add_argument("--jump", type=float, default=10.0, help="Residual jump factor for the ρ* estimate")
    parser.add_argument("--density", type=float, default=None, help="Density D for the π·D cross-check")
    parser.set_defaults(handler=run)


def rho_grid(args: argparse.Namespace) -> np.ndarray:
    if args.rho is not None:
        grid = np.asarray(args.rho, dtype=float)
    elif args.rho_steps < 1:
        grid = np.zeros(0)
    else:
        grid = np.linspace(args.rho_min, args.rho_max, args.rho_steps)
    if grid.size == 0:
        raise UsageError("empty ρ grid")
    if np.any(grid <= 0):
        raise UsageError("ρ values must be positive", {"rho": grid.tolist()})
    return grid


def run(args: argparse.Namespace, writer: ReportWriter) -> int:
    grid = rho_grid(args)
    spec = load_spectrum(args)
    svc = get_expfit_service()
    rows = svc.radius_scan(spec, grid, args.max_freqs, args.ridge, args.nodes, args.threads)
    rows = [RadiusRow(**r).model_dump() for r in rows]
    frame = pd.DataFrame(rows)
    writer.csv("radius.csv", frame)
    writer.svg(
        "radius.svg",
        {"residual": (frame["rho"], frame["residual"])},
        title="Best bump fit residual",
        xlabel="rho",
        ylabel="residual",
        logy=True,
    )
    rho_star = svc.estimate_radius(rows, args.jump)
    summary = {"rho_star": rho_star, "jump": args.jump, "n_freqs": rows[0]["n_freqs"]}
    if args.density is not None:
        summary["cross_check"] = svc.cross_check_radius(rho_star, args.density)
    writer.json("radius.json", summary)
    return 0
