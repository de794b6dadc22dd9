import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .anova import decompose
from .bootstrap import PairedStudy, bootstrap_compare
from .config import LoamConfig
from .estimate_cli import emit
from .grid import MeasurementGrid
from .intervals import IntervalResult, exact_repeatability_ci, gw_reproducibility_ci
from .loam import LoamKind, loam
from .reporting import render_comparison_text, to_json
from .simulation import new_seed
from .storage import file_digest, read_paired

logger = logging.getLogger(__name__)


def upper_limit_ci(grid: MeasurementGrid, kind: LoamKind, level: float, z: float) -> IntervalResult:
    anova = decompose(grid)
    if kind is LoamKind.REPRODUCIBILITY:
        return gw_reproducibility_ci(anova, grid.design, level, z)[0]
    return exact_repeatability_ci(anova, grid.design, level, z)[0]


def add_compare_commands(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("compare", help="Bootstrap test for a difference in LOAM between two methods")
    p.add_argument("input", help="wide CSV (one column per method) or long CSV with a method column")
    p.add_argument("--second", required=False, help="second long-format CSV; input then holds the first method")
    p.add_argument("--methods", nargs=2, metavar=("X", "Y"), required=False, help="method columns to compare, in order")
    p.add_argument("--kind", choices=[k.value for k in LoamKind], default=None, help="config: bootstrap.kind")
    p.add_argument("--resamples", type=int, default=None, help="config: bootstrap.resamples")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed; generated and printed when omitted")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $LOAM_THREADS or all cores)")
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--out", required=False)


def handle_compare_command(args, cfg: LoamConfig) -> int:
    if args.cmd != "compare":
        return 1

    grids, names = read_paired(Path(args.input), Path(args.second) if args.second else None, args.methods)
    name_x, name_y = names
    study = PairedStudy(grids[name_x], grids[name_y], name_x, name_y)

    kind = LoamKind(args.kind or cfg.kind)
    level = args.level if args.level is not None else cfg.level
    z = args.z if args.z is not None else cfg.z
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None:
        seed = new_seed()
        print(f"seed: {seed}", file=sys.stderr)

    result = bootstrap_compare(
        study,
        kind=kind,
        n_resamples=args.resamples if args.resamples is not None else cfg.resamples,
        seed=seed,
        z=z,
        n_jobs=args.threads,
        redraw_factor=cfg.redraw_factor,
    )

    cis = {name: upper_limit_ci(grids[name], kind, level, z) for name in names}
    methods = {}
    for name in names:
        anova = decompose(grids[name])
        methods[name] = {
            "limit": loam(anova, grids[name].design, kind, z).limit,
            "upper_ci": cis[name].to_dict(),
        }
    ci_x, ci_y = cis[name_x], cis[name_y]
    overlap = ci_x.lower <= ci_y.upper and ci_y.lower <= ci_x.upper

    payload = {
        "comparison": result.to_dict(),
        "methods": methods,
        "order": [name_x, name_y],
        "method_cis_overlap": overlap,
        "design": study.design.to_dict(),
        "provenance": {"input_sha256": file_digest(Path(args.input)), "tool_version": __version__, "seed": int(seed)},
    }
    emit(to_json(payload) if args.format == "json" else render_comparison_text(payload), args.out)
    return 0
