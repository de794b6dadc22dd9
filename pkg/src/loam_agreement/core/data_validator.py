"""
Row-level validation of long and wide measurement tables

Works on frames read with dtype=str so that every cell is still the text as
written in the file. Balance checks happen later, in grid.ingest_long.
"""

import logging
import math
from typing import Any, List, Optional, Sequence, Tuple

import pandas as pd

from .error_handler import MalformedRow, NonFiniteValue

# CSV data starts on line 2; line 1 is the header.
FIRST_DATA_LINE = 2


def _is_blank(v: Any) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v)) or str(v).strip() == ""


class DataValidator:
    """
    Validates measurement tables before they are ingested.

    Each check returns (passed, errors); strict mode raises on the first
    problem instead, naming the offending file line.
    """

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)

    def validate_table(
        self,
        df: pd.DataFrame,
        key_columns: Sequence[str],
        value_columns: Sequence[str],
        strict: bool = True,
        allow_blank_values: bool = False,
    ) -> Tuple[bool, List[str]]:
        """
        Check columns, blank fields, replicate indices and numeric values.

        Args:
            df: table read with dtype=str
            key_columns: label columns, must be non-blank (replicate included)
            value_columns: measurement columns, must parse as finite floats
            strict: raise on the first problem instead of collecting
            allow_blank_values: treat blank measurement cells as absent
                (wide files, one method missing a row)

        Returns:
            (passed, list of error messages)

        Raises:
            MalformedRow: strict mode, structural problem
            NonFiniteValue: strict mode, NaN/inf measurement
        """
        errors: List[str] = []

        def fail(exc: Exception) -> None:
            errors.append(str(exc))
            if strict:
                raise exc

        missing = [c for c in list(key_columns) + list(value_columns) if c not in df.columns]
        if missing:
            fail(MalformedRow(f"missing required columns: {missing}", line=1))
            return self._record(errors)

        if df.empty:
            fail(MalformedRow("file has a header but no data rows", line=1))
            return self._record(errors)

        for pos, row in enumerate(df.itertuples(index=False)):
            line = pos + FIRST_DATA_LINE
            rec = dict(zip(df.columns, row))

            blank_keys = [c for c in key_columns if _is_blank(rec[c])]
            if blank_keys:
                fail(MalformedRow(f"missing field(s) {blank_keys}", line=line))
                continue

            rep_text = str(rec["replicate"]).strip() if "replicate" in key_columns else None
            if rep_text is not None and (not rep_text.isdigit() or int(rep_text) < 1):
                fail(MalformedRow(f"replicate must be a positive integer, got {rep_text!r}", line=line))
                continue

            for col in value_columns:
                text = rec[col]
                if _is_blank(text):
                    if not allow_blank_values:
                        fail(MalformedRow(f"missing value in column {col!r}", line=line))
                    continue
                try:
                    value = float(str(text).strip())
                except ValueError:
                    fail(MalformedRow(f"cannot parse {text!r} in column {col!r} as a number", line=line))
                    continue
                if not math.isfinite(value):
                    fail(NonFiniteValue(f"line {line}: non-finite value {text!r} in column {col!r}"))

        return self._record(errors)

    def _record(self, errors: List[str]) -> Tuple[bool, List[str]]:
        if errors:
            self.logger.warning(f"Validation found {len(errors)} problem(s): {errors[:5]}")
        return not errors, errors
