"""
Shared fixtures: the two-subject, two-observer, two-replicate CT / MRI
example used for hand-checked golden values.
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from loam_agreement.grid import LongRecord, ingest_long  # noqa: E402

# subject, observer, replicate, CT, MRI
TWO_METHOD_ROWS = [
    ("1", "1", 1, 26.0, 25.8),
    ("1", "1", 2, 26.2, 25.8),
    ("1", "2", 1, 25.8, 24.9),
    ("1", "2", 2, 25.7, 24.8),
    ("2", "1", 1, 19.0, 18.2),
    ("2", "1", 2, 19.1, 17.9),
    ("2", "2", 1, 19.9, 19.9),
    ("2", "2", 2, 20.1, 19.7),
]


def example_records(method: str = "CT") -> list[LongRecord]:
    col = 3 if method == "CT" else 4
    return [LongRecord(r[0], r[1], r[2], r[col]) for r in TWO_METHOD_ROWS]


def long_csv_text(method: str = "CT") -> str:
    lines = ["subject,observer,replicate,value"]
    lines += [f"{r.subject},{r.observer},{r.replicate},{r.value}" for r in example_records(method)]
    return "\n".join(lines) + "\n"


def wide_csv_text() -> str:
    lines = ["subject,observer,replicate,CT,MRI"]
    lines += [f"{s},{o},{k},{ct},{mri}" for s, o, k, ct, mri in TWO_METHOD_ROWS]
    return "\n".join(lines) + "\n"


@pytest.fixture
def ct_grid():
    return ingest_long(example_records("CT"))


@pytest.fixture
def mri_grid():
    return ingest_long(example_records("MRI"))


@pytest.fixture
def ct_csv(tmp_path):
    path = tmp_path / "ct.csv"
    path.write_text(long_csv_text("CT"), encoding="utf-8")
    return path


@pytest.fixture
def wide_csv(tmp_path):
    path = tmp_path / "paired_wide.csv"
    path.write_text(wide_csv_text(), encoding="utf-8")
    return path
