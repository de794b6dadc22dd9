import argparse
import logging
import sys
from pathlib import Path

from .config import LoamConfig
from .coverage import run_coverage_study
from .estimate_cli import emit
from .grid import Design
from .reporting import to_json
from .simulation import ModelParams, new_seed, simulate, true_loam
from .storage import write_json, write_long_csv

logger = logging.getLogger(__name__)


def truth_sidecar_path(out: Path) -> Path:
    return out.with_name(out.name + ".truth.json")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--sigma-a", type=float, default=None, help="subject effect SD")
    p.add_argument("--sigma-b", type=float, default=None, help="observer effect SD")
    p.add_argument("--sigma-ab", type=float, default=None, help="interaction SD")
    p.add_argument("--sigma-e", type=float, default=None, help="error SD")
    p.add_argument("--a", type=int, default=None, help="subjects")
    p.add_argument("--b", type=int, default=None, help="observers")
    p.add_argument("--c", type=int, default=None, help="replicates")
    p.add_argument("--seed", type=int, default=None)


def _model_from_args(args, cfg: LoamConfig) -> tuple[ModelParams, Design]:
    defaults = cfg.simulation

    def pick(name: str):
        value = getattr(args, name)
        return value if value is not None else defaults[name]

    params = ModelParams(
        mu=pick("mu"),
        sigma_a=pick("sigma_a"),
        sigma_b=pick("sigma_b"),
        sigma_ab=pick("sigma_ab"),
        sigma_e=pick("sigma_e"),
    )
    return params, Design(int(pick("a")), int(pick("b")), int(pick("c")))


def _seed(args, fallback) -> int:
    if args.seed is not None:
        return args.seed
    if fallback is not None:
        return int(fallback)
    seed = new_seed()
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def add_simulate_commands(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("simulate", help="Draw a dataset from the random-effects model")
    _model_args(p)
    p.add_argument("--out", required=True, help="long-format CSV; the true limits go to <out>.truth.json")
    p.add_argument("--z", type=float, default=None)

    cov = sub.add_parser("coverage", help="Monte Carlo coverage of every interval at one configuration")
    _model_args(cov)
    cov.add_argument("--n-sims", type=int, default=None, help="config: coverage.n_sims")
    cov.add_argument("--threads", type=int, default=None)
    cov.add_argument("--level", type=float, default=None)
    cov.add_argument("--z", type=float, default=None)
    cov.add_argument("--format", choices=["json", "text"], default="text")
    cov.add_argument("--out", required=False)


def handle_simulate_command(args, cfg: LoamConfig) -> int:
    if args.cmd not in ("simulate", "coverage"):
        return 1

    params, design = _model_from_args(args, cfg)
    z = args.z if args.z is not None else cfg.z

    if args.cmd == "simulate":
        seed = _seed(args, cfg.simulation.get("seed"))
        grid = simulate(params, design, seed)
        out = write_long_csv(grid, Path(args.out))
        sidecar = write_json(
            {
                "true_loam": true_loam(params, design, z).to_dict(),
                "params": params.to_dict(),
                "design": design.to_dict(),
                "seed": int(seed),
            },
            truth_sidecar_path(out),
        )
        print(f"Simulated data written: {out}")
        print(f"True limits written: {sidecar}")
        return 0

    seed = _seed(args, cfg.coverage_seed)
    report = run_coverage_study(
        params,
        design,
        n_sims=args.n_sims if args.n_sims is not None else cfg.coverage_sims,
        seed=seed,
        level=args.level if args.level is not None else cfg.level,
        z=z,
        n_jobs=args.threads,
    )
    if args.format == "json":
        text = to_json(report.to_dict())
    else:
        header = f"Coverage over {report.n_sims} simulations, design a={design.a} b={design.b} c={design.c}, seed={seed}\n"
        text = header + report.to_frame().to_string(index=False, float_format=lambda v: f"{v:.4f}") + "\n"
    emit(text, args.out)
    return 0
