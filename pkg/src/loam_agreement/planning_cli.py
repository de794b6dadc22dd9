import argparse

from .config import LoamConfig
from .core.error_handler import DomainError, NotAchievable
from .estimate_cli import emit
from .planning import PilotEstimates, solve_observers, solve_subjects
from .reporting import render_plan_text, to_json


def add_planning_commands(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("samplesize", help="Smallest number of observers (or subjects) reaching a target CI width")
    p.add_argument("--sigma2-b0", type=float, required=True, help="pilot observer variance")
    p.add_argument("--sigma2-ab0", type=float, required=True, help="pilot interaction variance")
    p.add_argument("--sigma2-e0", type=float, required=True, help="pilot error variance")
    p.add_argument("--a", type=int, required=False, help="number of subjects (fixed when solving for b)")
    p.add_argument("--b", type=int, required=False, help="number of observers (fixed when solving for a)")
    p.add_argument("--c", type=int, required=True, help="replicates per subject-observer cell")
    p.add_argument("--target-width", type=float, required=True)
    p.add_argument("--solve-for", choices=["b", "a"], default="b")
    p.add_argument("--b-max", type=int, default=None, help="search cap for b (config: planning.b_max)")
    p.add_argument("--a-max", type=int, default=None, help="search cap for a (config: planning.a_max)")
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--z", type=float, default=None)
    p.add_argument("--format", choices=["json", "text"], default="text")


def handle_planning_command(args, cfg: LoamConfig) -> int:
    if args.cmd != "samplesize":
        return 1

    pilot = PilotEstimates(args.sigma2_b0, args.sigma2_ab0, args.sigma2_e0)
    level = args.level if args.level is not None else cfg.level
    z = args.z if args.z is not None else cfg.z

    try:
        if args.solve_for == "b":
            if args.a is None:
                raise DomainError("--a is required when solving for b")
            cap = args.b_max if args.b_max is not None else cfg.b_max
            plan = solve_observers(pilot, args.a, args.c, args.target_width, b_max=cap, level=level, z=z)
        else:
            if args.b is None:
                raise DomainError("--b is required when solving for a")
            cap = args.a_max if args.a_max is not None else cfg.a_max
            plan = solve_subjects(pilot, args.b, args.c, args.target_width, a_max=cap, level=level, z=z)
    except NotAchievable as e:
        print(f"not achievable: W({args.solve_for}={e.cap}) = {e.width_at_cap:.6g} > target {args.target_width:.6g}")
        raise

    payload = {"plan": plan.to_dict()}
    emit(to_json(payload) if args.format == "json" else render_plan_text(payload), None)
    return 0
