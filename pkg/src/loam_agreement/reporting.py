import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
import pandas as pd

from . import __version__
from .anova import AnovaDecomposition, VarianceComponents, decompose, estimate_components
from .grid import MeasurementGrid
from .intervals import IntervalResult, exact_repeatability_ci, gw_reproducibility_ci, sigma2_e_interval, sigma_ci
from .loam import (
    DifferenceKind,
    difference_series,
    repeatability_loam,
    repeatability_loam_components,
    reproducibility_loam,
    reproducibility_loam_components,
)

SCHEMA_VERSION = 1


def load_schema() -> dict:
    text = resources.files("loam_agreement").joinpath("schemas/run_report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class RunReport:
    grid: MeasurementGrid
    anova: AnovaDecomposition
    components: VarianceComponents
    sigma_intervals: dict[str, IntervalResult]
    reprod: tuple[IntervalResult, IntervalResult]
    repeat: tuple[IntervalResult, IntervalResult]
    level: float
    z: float
    emit_differences: bool
    provenance: dict

    def to_dict(self) -> dict:
        design = self.grid.design
        reprod_up, reprod_lo = self.reprod
        repeat_up, repeat_lo = self.repeat
        s2e_lo, s2e_hi = sigma2_e_interval(self.anova, self.level)

        comps = self.components.to_dict()
        for name, iv in self.sigma_intervals.items():
            comps[name]["interval"] = iv.to_dict()

        out = {
            "schema_version": SCHEMA_VERSION,
            "design": design.to_dict(),
            "labels": {"subjects": list(self.grid.subject_labels), "observers": list(self.grid.observer_labels)},
            "anova": self.anova.rows(),
            "variance_components": comps,
            "sigma2_e_interval": {"lower": s2e_lo, "upper": s2e_hi, "level": self.level},
            "loam": {
                "z": self.z,
                "level": self.level,
                "reproducibility": {
                    "limit": reproducibility_loam(self.anova, design, self.z).limit,
                    "component_form": reproducibility_loam_components(self.components, design, self.z),
                    "upper_ci": reprod_up.to_dict(),
                    "lower_ci": reprod_lo.to_dict(),
                },
                "repeatability": {
                    "limit": repeatability_loam(self.anova, design, self.z).limit,
                    "component_form": repeatability_loam_components(self.components, design, self.z),
                    "upper_ci": repeat_up.to_dict(),
                    "lower_ci": repeat_lo.to_dict(),
                },
            },
            "provenance": self.provenance,
        }
        if self.emit_differences:
            out["differences"] = {
                kind.value: [
                    {"subject": s, "observer": o, "replicate": int(r), "difference": float(d)}
                    for s, o, r, d in difference_series(self.grid, kind).as_tuples()
                ]
                for kind in DifferenceKind
            }
        return out


def build_run_report(
    grid: MeasurementGrid,
    level: float = 0.95,
    z: float = 1.96,
    emit_differences: bool = False,
    input_digest: str | None = None,
) -> RunReport:
    """Full single-dataset analysis."""
    anova = decompose(grid)
    comps = estimate_components(anova, grid.design)
    reprod = gw_reproducibility_ci(anova, grid.design, level, z)
    repeat = exact_repeatability_ci(anova, grid.design, level, z)

    sigmas = {w: sigma_ci(comps, anova, grid.design, w, level) for w in ("A", "B", "AB", "E")}
    return RunReport(
        grid=grid,
        anova=anova,
        components=comps,
        sigma_intervals=sigmas,
        reprod=reprod,
        repeat=repeat,
        level=level,
        z=z,
        emit_differences=emit_differences,
        provenance={"input_sha256": input_digest, "tool_version": __version__, "seed": None},
    )


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "n/a"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _table(df: pd.DataFrame) -> str:
    cols = [str(c) for c in df.columns]
    cells = [[_fmt(v) for v in row] for row in df.itertuples(index=False, name=None)]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)), "  ".join("-" * w for w in widths)]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)


def render_text(report: dict) -> str:
    d = report["design"]
    loam = report["loam"]
    comps = report["variance_components"]

    anova = pd.DataFrame(report["anova"])[["source", "df", "ss", "ms"]]
    vc = pd.DataFrame(
        [
            {
                "component": name,
                "raw": comps[name]["raw"],
                "truncated": comps[name]["truncated"],
                "sd_lower": comps[name]["interval"]["lower"],
                "sd_upper": comps[name]["interval"]["upper"],
                "ci_available": comps[name]["interval"]["available"],
                "method": comps[name]["interval"]["method"],
            }
            for name in ("A", "B", "AB", "E")
        ]
    )
    limits = pd.DataFrame(
        [
            {
                "loam": kind,
                "limit": loam[kind]["limit"],
                "upper_ci": f"({_fmt(loam[kind]['upper_ci']['lower'])}, {_fmt(loam[kind]['upper_ci']['upper'])})",
                "lower_ci": f"({_fmt(loam[kind]['lower_ci']['lower'])}, {_fmt(loam[kind]['lower_ci']['upper'])})",
            }
            for kind in ("reproducibility", "repeatability")
        ]
    )

    return "\n".join(
        [
            f"Design: a={d['a']} subjects, b={d['b']} observers, c={d['c']} replicates, N={d['N']}",
            "",
            "ANOVA",
            _table(anova),
            "",
            f"Variance components ({loam['level']:.0%} intervals for the standard deviations)",
            _table(vc),
            "",
            f"LOAM (z={loam['z']}, {loam['level']:.0%} intervals)",
            _table(limits),
            "",
        ]
    )


def render_comparison_text(payload: dict) -> str:
    res = payload["comparison"]
    per = payload["methods"]
    lines = [f"Method comparison ({res['kind']} LOAM), seed={res['seed']}, resamples={res['n_resamples']}"]
    for name, m in per.items():
        ci = m["upper_ci"]
        lines.append(f"  {name}: limit={_fmt(m['limit'])}  CI upper limit=({_fmt(ci['lower'])}, {_fmt(ci['upper'])})")
    lines += [
        f"  difference ({payload['order'][0]} - {payload['order'][1]}) = {_fmt(res['observed_diff'])}",
        f"  95% percentile CI = ({_fmt(res['ci_95'][0])}, {_fmt(res['ci_95'][1])})",
        f"  p-value = {_fmt(res['p_value'])}",
        f"  method CIs overlap: {_fmt(payload['method_cis_overlap'])}",
        "",
    ]
    return "\n".join(lines)


def render_plan_text(payload: dict) -> str:
    p = payload["plan"]
    var = p["solved_for"]
    prev = "n/a" if p["width_previous"] is None else _fmt(p["width_previous"])
    return "\n".join(
        [
            f"{var}* = {p['value']}",
            f"W({var}*) = {_fmt(p['width'])}",
            f"W({var}*-1) = {prev}",
            f"target = {_fmt(p['target_width'])}",
            "",
        ]
    )
