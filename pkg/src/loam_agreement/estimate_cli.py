import argparse
import logging
from pathlib import Path

from .config import LoamConfig
from .reporting import build_run_report, render_text, to_json
from .storage import file_digest, read_long_csv

logger = logging.getLogger(__name__)


def emit(text: str, out: str | None) -> None:
    """Print to stdout, or write to --out when given."""
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def add_estimate_commands(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("estimate", help="ANOVA, variance components and LOAM with intervals for one dataset")
    p.add_argument("input", help="long-format CSV: subject,observer,replicate,value")
    p.add_argument("--level", type=float, default=None, help="confidence level of the intervals (config: loam.level)")
    p.add_argument("--z", type=float, default=None, help="LOAM multiplier (config: loam.z)")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--emit-differences", action="store_true", help="include the per-measurement difference series")
    p.add_argument("--out", required=False, help="write the report here instead of stdout")


def handle_estimate_command(args, cfg: LoamConfig) -> int:
    if args.cmd != "estimate":
        return 1

    path = Path(args.input)
    grid = read_long_csv(path)
    report = build_run_report(
        grid,
        level=args.level if args.level is not None else cfg.level,
        z=args.z if args.z is not None else cfg.z,
        emit_differences=args.emit_differences,
        input_digest=file_digest(path),
    )
    payload = report.to_dict()
    emit(to_json(payload) if args.format == "json" else render_text(payload), args.out)
    return 0
