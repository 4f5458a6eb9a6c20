"""
Shared argument handling for the subcommands
"""
import argparse
import json
from typing import Any, Callable, Dict, Optional

from config import settings

from ..models.errors import UsageError
from ..models.growth import GrowthFunction, PsiFunction
from ..services.spectrum_service import Spectrum, get_spectrum_service


def add_common(parser: argparse.ArgumentParser, spectrum_required: bool) -> None:
    parser.add_argument(
        "--spectrum",
        required=spectrum_required,
        help="Path to a spectrum JSON file",
    )
    parser.add_argument("--out", default=None, help="Output directory (default: out/<command>)")
    parser.add_argument("--threads", type=int, default=settings.THREADS, help="Worker threads; results do not depend on it")


def load_spectrum(args: argparse.Namespace) -> Optional[Spectrum]:
    if not args.spectrum:
        return None
    return get_spectrum_service().load(args.spectrum)


def json_arg(value: str) -> Dict[str, Any]:
    """argparse type for inline JSON objects"""
    try:
        data = json.loads(value)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"invalid JSON: {e}")
    if not isinstance(data, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return data


def _build(factory: Callable, data: Dict[str, Any], what: str):
    if "kind" not in data:
        raise UsageError(f"{what} needs a 'kind'", {"given": data})
    return factory(data["kind"], dict(data.get("params", {})))


def growth_from_arg(data: Optional[Dict[str, Any]]) -> Optional[GrowthFunction]:
    return None if data is None else _build(GrowthFunction, data, "σ")


def psi_from_arg(data: Optional[Dict[str, Any]]) -> Optional[PsiFunction]:
    return None if data is None else _build(PsiFunction, data, "Ψ")
