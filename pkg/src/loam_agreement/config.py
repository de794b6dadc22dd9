import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .core.error_handler import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoamConfig:
    z: float = 1.96
    level: float = 0.95
    resamples: int = 2000
    kind: str = "reproducibility"
    b_max: int = 10_000
    a_max: int = 10_000
    seed: int | None = None
    redraw_factor: int = 10
    coverage_sims: int = 2000
    coverage_seed: int = 0
    simulation: dict = field(
        default_factory=lambda: {"mu": 0.0, "sigma_a": 1.0, "sigma_b": 1.0, "sigma_ab": 1.0, "sigma_e": 1.0, "a": 20, "b": 5, "c": 3}
    )


# YAML section -> {yaml key: LoamConfig field}
_SECTIONS = {
    "loam": {"z": "z", "level": "level"},
    "bootstrap": {"resamples": "resamples", "kind": "kind", "seed": "seed", "max_redraw_factor": "redraw_factor"},
    "planning": {"b_max": "b_max", "a_max": "a_max"},
    "coverage": {"n_sims": "coverage_sims", "seed": "coverage_seed"},
}


def load_config(path: Path | None) -> LoamConfig:
    """
    Defaults overlaid with the YAML file, if it exists.

    Unknown keys are ignored with a warning so older files keep working.
    """
    cfg = LoamConfig()
    if path is None or not Path(path).exists():
        return cfg

    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise DomainError(f"{path}: top level must be a mapping")

    updates: dict = {}
    known = {f.name for f in fields(LoamConfig)}
    for section, values in raw.items():
        if section == "simulation":
            merged = dict(cfg.simulation)
            merged.update(values or {})
            updates["simulation"] = merged
            continue
        mapping = _SECTIONS.get(section)
        if mapping is None:
            logger.warning(f"{path}: unknown section {section!r} ignored")
            continue
        for key, value in (values or {}).items():
            target = mapping.get(key)
            if target is None or target not in known:
                logger.warning(f"{path}: unknown key {section}.{key} ignored")
                continue
            updates[target] = value

    cfg = replace(cfg, **updates)
    if not 0 < float(cfg.level) < 1:
        raise DomainError(f"{path}: loam.level must lie in (0, 1)")
    if float(cfg.z) <= 0:
        raise DomainError(f"{path}: loam.z must be positive")
    logger.info(f"Loaded config from {path}")
    return cfg
