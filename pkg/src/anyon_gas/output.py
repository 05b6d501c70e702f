"""
Output records and their CSV / JSON writers.

A record is a set of equal-length numeric columns plus the parameters that produced them and a
provenance block. Optional named side tables hold data of another length (vortex lists,
radial profiles); in CSV form each goes to its own ``<stem>.<table>.csv`` file.
"""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = "1"
FORMATS = ("csv", "json")
_EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)
_TIMESTAMP_SPAN = 10 * 365 * 24 * 3600

Columns = Dict[str, List[Any]]


def _scalar(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise TypeError(f"column values must be numbers, got {type(value).__name__}")


def _check_table(name: str, columns: Mapping[str, Sequence[Any]]) -> Columns:
    if not columns:
        raise ValueError(f"table '{name}' has no columns")
    out: Columns = {}
    lengths = set()
    for key, values in columns.items():
        cells = [_scalar(v) for v in np.asarray(values).ravel().tolist()]
        lengths.add(len(cells))
        out[str(key)] = cells
    if len(lengths) != 1:
        raise ValueError(f"columns of table '{name}' differ in length: {sorted(lengths)}")
    return out


def deterministic_timestamp(subcommand: str, parameters: Mapping[str, Any], seed: int) -> str:
    """ISO-8601 pseudo-timestamp derived from a SHA-256 digest of the run inputs."""
    payload = json.dumps([subcommand, parameters, seed], sort_keys=True, default=str)
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    offset = int(digest[:12], 16) % _TIMESTAMP_SPAN
    return (_EPOCH + timedelta(seconds=offset)).strftime("%Y-%m-%dT%H:%M:%SZ")


def make_provenance(subcommand: str, parameters: Mapping[str, Any], seed: int) -> Dict[str, Any]:
    from . import __version__

    return {
        "revision": f"anyon-gas {__version__}",
        "timestamp": deterministic_timestamp(subcommand, parameters, seed),
        "seed": int(seed),
    }


@dataclass
class OutputRecord:
    subcommand: str
    parameters: Dict[str, Any]
    columns: Columns
    provenance: Dict[str, Any]
    tables: Dict[str, Columns] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        self.columns = _check_table("columns", self.columns)
        self.tables = {name: _check_table(name, cols) for name, cols in self.tables.items()}

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _cell(value: Any) -> str:
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _write_csv_table(path: Path, columns: Columns) -> None:
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def emit_output(rec: OutputRecord, path: str, fmt: str = "json") -> List[Path]:
    """Write ``rec`` to ``path`` in ``fmt``; returns every file written.

    CSV output writes the main columns to ``path``, the parameters and provenance to
    ``<path>.meta.json`` and each side table to ``<stem>.<table>.csv``. Raises OSError when the
    path is not writable.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    target = Path(path)
    if fmt == "json":
        target.write_text(_dump_json(rec.to_dict()), encoding="utf-8")
        return [target]

    written = [target]
    _write_csv_table(target, rec.columns)
    for name, cols in rec.tables.items():
        side = target.with_name(f"{target.stem}.{name}.csv")
        _write_csv_table(side, cols)
        written.append(side)
    meta = Path(f"{target}.meta.json")
    meta.write_text(
        _dump_json(
            {
                "schema_version": rec.schema_version,
                "subcommand": rec.subcommand,
                "parameters": rec.parameters,
                "provenance": rec.provenance,
                "tables": sorted(rec.tables),
            }
        ),
        encoding="utf-8",
    )
    written.append(meta)
    return written


def read_csv_columns(path: str) -> Columns:
    """Read a CSV written by ``emit_output`` back into float columns."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        names = next(reader)
        data: Columns = {n: [] for n in names}
        for row in reader:
            for n, cell in zip(names, row):
                data[n].append(float(cell))
    return data


def error_record(exc: BaseException) -> Dict[str, Any]:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def emit_error(exc: BaseException, path: str) -> bool:
    """Best-effort JSON error record; returns False when it could not be written."""
    try:
        Path(path).write_text(_dump_json(error_record(exc)), encoding="utf-8")
    except OSError:
        return False
    return True
