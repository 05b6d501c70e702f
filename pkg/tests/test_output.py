import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anyon_gas.output import (
    SCHEMA_VERSION,
    OutputRecord,
    deterministic_timestamp,
    emit_error,
    emit_output,
    make_provenance,
    read_csv_columns,
)


def _record(**tables):
    params = {"alpha": 0.5, "n_max": 3}
    return OutputRecord(
        subcommand="demo",
        parameters=params,
        columns={"N": [2, 3, 4], "value": [0.1, 1.0 / 3.0, float("nan")]},
        provenance=make_provenance("demo", params, 7),
        tables=tables,
    )


def test_timestamp_is_deterministic():
    a = deterministic_timestamp("tf", {"n": 1, "m": 2.0}, 0)
    b = deterministic_timestamp("tf", {"m": 2.0, "n": 1}, 0)
    assert a == b
    assert a.endswith("Z") and a.startswith("20")
    assert deterministic_timestamp("tf", {"n": 1, "m": 2.0}, 1) != a


def test_provenance_fields():
    prov = make_provenance("e2", {"x": 1}, 3)
    assert set(prov) == {"revision", "timestamp", "seed"}
    assert prov["revision"].startswith("anyon-gas ")
    assert prov["seed"] == 3


def test_record_validation():
    prov = make_provenance("demo", {}, 0)
    with pytest.raises(ValueError):
        OutputRecord("demo", {}, {}, prov)
    with pytest.raises(ValueError):
        OutputRecord("demo", {}, {"a": [1, 2], "b": [1.0]}, prov)
    with pytest.raises(ValueError):
        OutputRecord("demo", {}, {"a": [1]}, prov, tables={"side": {"x": [1], "y": [1, 2]}})
    with pytest.raises(TypeError):
        OutputRecord("demo", {}, {"a": ["text"]}, prov)


def test_record_normalizes_numpy_values():
    columns = {"a": np.arange(3), "b": np.array([True, False, True])}
    rec = OutputRecord("demo", {}, columns, make_provenance("demo", {}, 0))
    assert rec.columns == {"a": [0, 1, 2], "b": [1, 0, 1]}
    assert rec.n_rows == 3


def test_json_output():
    with tempfile.TemporaryDirectory() as tmpdir:
        out = Path(tmpdir) / "demo.json"
        written = emit_output(_record(side={"x": [1.0, 2.0]}), str(out), "json")
        assert written == [out]
        text = out.read_text()
        assert text.endswith("\n")
        data = json.loads(text)
        assert data["schema_version"] == SCHEMA_VERSION
        assert data["columns"]["N"] == [2, 3, 4]
        assert data["tables"]["side"]["x"] == [1.0, 2.0]
        assert data["provenance"]["seed"] == 7


def test_csv_output_with_side_tables():
    with tempfile.TemporaryDirectory() as tmpdir:
        out = Path(tmpdir) / "demo.csv"
        written = emit_output(_record(side={"x": [1.0, 2.0]}), str(out), "csv")
        names = sorted(p.name for p in written)
        assert names == ["demo.csv", "demo.csv.meta.json", "demo.side.csv"]

        lines = out.read_text().splitlines()
        assert lines[0] == "N,value"
        assert lines[1] == "2,0.10000000000000001"
        assert lines[3] == "4,nan"

        back = read_csv_columns(str(out))
        assert back["value"][1] == 1.0 / 3.0

        meta = json.loads((Path(tmpdir) / "demo.csv.meta.json").read_text())
        assert meta["subcommand"] == "demo"
        assert meta["tables"] == ["side"]
        assert meta["parameters"] == {"alpha": 0.5, "n_max": 3}


def test_rerun_is_byte_identical():
    with tempfile.TemporaryDirectory() as tmpdir:
        a = Path(tmpdir) / "a.json"
        b = Path(tmpdir) / "b.json"
        emit_output(_record(), str(a))
        emit_output(_record(), str(b))
        assert a.read_bytes() == b.read_bytes()


def test_unknown_format_rejected():
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(ValueError):
            emit_output(_record(), os.path.join(tmpdir, "x.txt"), "txt")


def test_unwritable_path():
    with tempfile.TemporaryDirectory() as tmpdir:
        missing = os.path.join(tmpdir, "no_such_dir", "out.json")
        with pytest.raises(OSError):
            emit_output(_record(), missing)
        assert emit_error(ValueError("boom"), missing) is False


def test_error_record_written():
    with tempfile.TemporaryDirectory() as tmpdir:
        path = os.path.join(tmpdir, "err.json")
        assert emit_error(ValueError("boom"), path)
        data = json.loads(Path(path).read_text())
        assert data == {"error": {"type": "ValueError", "message": "boom"}}
