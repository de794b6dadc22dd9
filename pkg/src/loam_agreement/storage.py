import hashlib
import json
import logging
from pathlib import Path
from typing import Sequence

import pandas as pd

from .core.data_validator import DataValidator
from .core.error_handler import IngestionError, MalformedRow, MismatchedDesign
from .grid import LONG_COLUMNS, LongRecord, MeasurementGrid, ingest_long

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["subject", "observer", "replicate"]


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_text_table(path: Path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except FileNotFoundError as e:
        raise IngestionError(f"{path}: no such file") from e
    except pd.errors.EmptyDataError as e:
        raise MalformedRow("file is empty", line=1) from e
    except pd.errors.ParserError as e:
        raise MalformedRow(f"cannot parse CSV: {e}") from e
    df.columns = [str(c).strip() for c in df.columns]
    return df


def _records(df: pd.DataFrame, value_col: str) -> list[LongRecord]:
    out: list[LongRecord] = []
    for s, o, r, v in zip(df["subject"], df["observer"], df["replicate"], df[value_col]):
        if pd.isna(v) or str(v).strip() == "":
            continue
        out.append(LongRecord(str(s).strip(), str(o).strip(), int(str(r).strip()), float(str(v).strip())))
    return out


def read_long_csv(path: Path) -> MeasurementGrid:
    """Read `subject,observer,replicate,value` into a grid (single method)."""
    grids = read_long_csv_by_method(path)
    if len(grids) != 1:
        raise IngestionError(f"{path} holds {len(grids)} methods {list(grids)}; pick one with the compare command")
    return next(iter(grids.values()))


def read_long_csv_by_method(path: Path) -> dict[str, MeasurementGrid]:
    """
    Read a long file. With a `method` column the rows are split per method,
    in order of first appearance; otherwise the single key is "value".
    """
    df = _read_text_table(Path(path))
    DataValidator().validate_table(df, key_columns=KEY_COLUMNS, value_columns=["value"], strict=True)

    if "method" not in df.columns:
        return {"value": ingest_long(_records(df, "value"))}

    grids: dict[str, MeasurementGrid] = {}
    for method in pd.unique(df["method"].str.strip()):
        part = df[df["method"].str.strip() == method]
        grids[str(method)] = ingest_long(_records(part, "value"))
    logger.info(f"Read {len(grids)} method(s) from {path}: {list(grids)}")
    return grids


def read_wide_csv(path: Path, methods: Sequence[str] | None = None) -> dict[str, MeasurementGrid]:
    """
    Read `subject,observer,replicate,<m1>,<m2>,...` into one grid per method.

    A blank cell means that method has no measurement on that row, which
    normally surfaces as UnbalancedDesign for the method concerned.
    """
    df = _read_text_table(Path(path))
    value_cols = [c for c in df.columns if c not in KEY_COLUMNS]
    if methods:
        unknown = [m for m in methods if m not in value_cols]
        if unknown:
            raise MalformedRow(f"method column(s) {unknown} not found; available: {value_cols}", line=1)
        value_cols = list(methods)
    if not value_cols:
        raise MalformedRow("no method columns after subject,observer,replicate", line=1)

    DataValidator().validate_table(
        df, key_columns=KEY_COLUMNS, value_columns=value_cols, strict=True, allow_blank_values=True
    )
    return {col: ingest_long(_records(df, col)) for col in value_cols}


def read_paired(path: Path, second: Path | None = None, methods: Sequence[str] | None = None) -> tuple[dict[str, MeasurementGrid], list[str]]:
    """
    Load the two grids of a method comparison from a wide file, a long file
    with a method column, or two long files.
    """
    if second is not None:
        first_name, second_name = Path(path).stem, Path(second).stem
        if first_name == second_name:
            second_name = f"{second_name}_2"
        grids = {first_name: read_long_csv(path), second_name: read_long_csv(second)}
        if methods:
            grids = dict(zip(methods, grids.values()))
    else:
        header = _read_text_table(Path(path)).columns
        if "value" in header:
            grids = read_long_csv_by_method(path)
            if methods:
                grids = {m: grids[m] for m in methods if m in grids}
        else:
            grids = read_wide_csv(path, methods)

    names = list(grids)
    if len(names) != 2:
        raise MismatchedDesign(f"a comparison needs exactly two methods, found {names}")
    return grids, names


def write_long_csv(grid: MeasurementGrid, path: Path, method: str | None = None) -> Path:
    out = grid.to_frame()
    if method is not None:
        out.insert(3, "method", method)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def to_wide_frame(grids: dict[str, MeasurementGrid]) -> pd.DataFrame:
    """Join per-method grids back into the wide layout."""
    frames = iter(grids.items())
    name, first = next(frames)
    wide = first.to_frame().rename(columns={"value": name})
    for name, grid in frames:
        part = grid.to_frame().rename(columns={"value": name})
        wide = wide.merge(part, on=KEY_COLUMNS, how="outer", sort=False)
    return wide[KEY_COLUMNS + list(grids)]


def write_wide_csv(grids: dict[str, MeasurementGrid], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_wide_frame(grids).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def write_json(payload: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


__all__ = [
    "LONG_COLUMNS",
    "file_digest",
    "read_long_csv",
    "read_long_csv_by_method",
    "read_paired",
    "read_wide_csv",
    "to_wide_frame",
    "write_json",
    "write_long_csv",
    "write_wide_csv",
]
