import json

import numpy as np
import pytest

from conftest import TWO_METHOD_ROWS, long_csv_text, wide_csv_text

from loam_agreement.core.error_handler import IngestionError, MalformedRow, MismatchedDesign, NonFiniteValue, UnbalancedDesign
from loam_agreement.storage import (
    file_digest,
    read_long_csv,
    read_long_csv_by_method,
    read_paired,
    read_wide_csv,
    to_wide_frame,
    write_json,
    write_long_csv,
    write_wide_csv,
)


class TestLongCsv:
    def test_read_example(self, ct_csv):
        grid = read_long_csv(ct_csv)
        assert grid.design.shape == (2, 2, 2)
        assert grid.values[0, 0, 0] == 26.0

    def test_round_trip_is_byte_identical(self, ct_csv, tmp_path):
        grid = read_long_csv(ct_csv)
        out = write_long_csv(grid, tmp_path / "again.csv")
        again = write_long_csv(read_long_csv(out), tmp_path / "again2.csv")
        assert out.read_bytes() == again.read_bytes()
        assert np.array_equal(read_long_csv(again).values, grid.values)

    def test_short_row_names_the_line(self, tmp_path):
        text = long_csv_text().replace("1,2,2,25.7\n", "1,2,2\n")
        path = tmp_path / "short.csv"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(MalformedRow) as info:
            read_long_csv(path)
        assert info.value.line == 5
        assert "line 5" in str(info.value)

    def test_unparsable_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(long_csv_text().replace("19.9", "abc"), encoding="utf-8")
        with pytest.raises(MalformedRow):
            read_long_csv(path)

    def test_nan_value(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text(long_csv_text().replace("19.9", "nan"), encoding="utf-8")
        with pytest.raises(NonFiniteValue):
            read_long_csv(path)

    def test_missing_row(self, tmp_path):
        path = tmp_path / "missing.csv"
        path.write_text(long_csv_text().replace("2,2,2,20.1\n", ""), encoding="utf-8")
        with pytest.raises(UnbalancedDesign):
            read_long_csv(path)

    def test_empty_and_missing_files(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("", encoding="utf-8")
        with pytest.raises(MalformedRow):
            read_long_csv(empty)
        with pytest.raises(IngestionError):
            read_long_csv(tmp_path / "nope.csv")

    def test_method_column(self, tmp_path):
        lines = ["subject,observer,replicate,method,value"]
        lines += [f"{s},{o},{k},CT,{ct}" for s, o, k, ct, _ in TWO_METHOD_ROWS]
        lines += [f"{s},{o},{k},MRI,{mri}" for s, o, k, _, mri in TWO_METHOD_ROWS]
        path = tmp_path / "by_method.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        grids = read_long_csv_by_method(path)
        assert list(grids) == ["CT", "MRI"]
        assert grids["MRI"].values[0, 0, 0] == 25.8
        with pytest.raises(IngestionError):
            read_long_csv(path)


class TestWideCsv:
    def test_read(self, wide_csv):
        grids = read_wide_csv(wide_csv)
        assert list(grids) == ["CT", "MRI"]
        assert grids["CT"].values[1, 1, 1] == 20.1

    def test_blank_cell_unbalances_one_method(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text(wide_csv_text().replace("2,2,2,20.1,19.7", "2,2,2,20.1,"), encoding="utf-8")
        assert read_wide_csv(path, ["CT"])["CT"].design.n == 8
        with pytest.raises(UnbalancedDesign):
            read_wide_csv(path)

    def test_unknown_method(self, wide_csv):
        with pytest.raises(MalformedRow):
            read_wide_csv(wide_csv, ["PET"])

    def test_wide_round_trip(self, wide_csv, tmp_path):
        grids = read_wide_csv(wide_csv)
        frame = to_wide_frame(grids)
        assert list(frame.columns) == ["subject", "observer", "replicate", "CT", "MRI"]
        out = write_wide_csv(grids, tmp_path / "out.csv")
        assert np.array_equal(read_wide_csv(out)["MRI"].values, grids["MRI"].values)


class TestPaired:
    def test_wide(self, wide_csv):
        grids, names = read_paired(wide_csv)
        assert names == ["CT", "MRI"]

    def test_two_long_files(self, ct_csv, tmp_path):
        mri = tmp_path / "mri.csv"
        mri.write_text(long_csv_text("MRI"), encoding="utf-8")
        grids, names = read_paired(ct_csv, mri)
        assert names == ["ct", "mri"]

    def test_same_stem(self, ct_csv, tmp_path):
        other = tmp_path / "sub" / "ct.csv"
        other.parent.mkdir()
        other.write_text(long_csv_text("MRI"), encoding="utf-8")
        _, names = read_paired(ct_csv, other)
        assert names == ["ct", "ct_2"]

    def test_needs_two_methods(self, tmp_path):
        path = tmp_path / "three.csv"
        path.write_text(
            "subject,observer,replicate,A,B,C\n" + "".join(f"{s},{o},{k},{ct},{mri},1.0\n" for s, o, k, ct, mri in TWO_METHOD_ROWS),
            encoding="utf-8",
        )
        with pytest.raises(MismatchedDesign):
            read_paired(path)
        _, names = read_paired(path, methods=["C", "A"])
        assert names == ["C", "A"]


class TestJson:
    def test_sorted_and_digest(self, tmp_path):
        path = write_json({"b": 1, "a": [1.5]}, tmp_path / "x.json")
        assert json.loads(path.read_text()) == {"a": [1.5], "b": 1}
        assert path.read_text().index('"a"') < path.read_text().index('"b"')
        assert len(file_digest(path)) == 64
