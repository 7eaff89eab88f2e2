"""Point files and benchmark records."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

__all__ = [
    "PointFileError",
    "read_points",
    "write_points",
    "format_points",
    "dataset_tag",
    "BenchRecord",
    "RECORD_COLUMNS",
    "write_records",
    "read_records",
    "format_records",
    "parse_records",
]

# first token of the optional header line of a point file
HEADER = "pargeo"


class PointFileError(ValueError):
    """A point file could not be parsed."""


def read_points(path) -> np.ndarray:
    """Read a point file: optional ``HEADER <d>`` line, then one point per line."""
    text = Path(path).read_text()
    rows = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if not rows and dim is None and parts[0] == HEADER:
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise PointFileError(f"{path}:{lineno}: bad header {line!r}")
            dim = int(parts[1])
            continue
        try:
            vals = [float(x) for x in parts]
        except ValueError:
            raise PointFileError(f"{path}:{lineno}: non-numeric field") from None
        if dim is None:
            dim = len(vals)
        if len(vals) != dim:
            raise PointFileError(f"{path}:{lineno}: expected {dim} fields, got {len(vals)}")
        if not all(np.isfinite(vals)):
            raise PointFileError(f"{path}:{lineno}: non-finite coordinate")
        rows.append(vals)
    return np.array(rows, dtype=np.float64).reshape(len(rows), dim or 0)


def format_points(P: np.ndarray, header: bool = True) -> str:
    P = np.asarray(P, dtype=np.float64)
    buf = io.StringIO()
    if header:
        buf.write(f"{HEADER} {P.shape[1]}\n")
    np.savetxt(buf, P, fmt="%.17g")
    return buf.getvalue()


def write_points(path, P: np.ndarray, header: bool = True) -> None:
    Path(path).write_text(format_points(P, header))


def dataset_tag(d: int, name: str, n: int) -> str:
    """``<d>D-<name>-<size>`` with sizes such as ``10M`` or ``100K``."""
    if n >= 10**6 and n % 10**6 == 0:
        size = f"{n // 10**6}M"
    elif n >= 1000 and n % 1000 == 0:
        size = f"{n // 1000}K"
    else:
        size = str(n)
    return f"{d}D-{name}-{size}"


@dataclass
class BenchRecord:
    algorithm: str
    dataset: str
    n: int
    d: int
    threads: int
    seconds: float
    summary: str

    def __post_init__(self):
        self.n, self.d, self.threads = int(self.n), int(self.d), int(self.threads)
        self.seconds = float(self.seconds)
        if self.seconds < 0:
            raise ValueError("time must be nonnegative")


RECORD_COLUMNS = [f.name for f in fields(BenchRecord)]


def format_records(records, extra_columns: list[str] | None = None) -> str:
    cols = RECORD_COLUMNS + list(extra_columns or [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in records:
        row = asdict(r) if isinstance(r, BenchRecord) else dict(r)
        row["seconds"] = repr(float(row["seconds"]))
        w.writerow(row)
    return buf.getvalue()


def parse_records(text: str) -> list[BenchRecord]:
    """Records from CSV text; repeated header rows (concatenated files) are skipped."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        if row.get("algorithm") == "algorithm":
            continue
        try:
            out.append(BenchRecord(**{k: row[k] for k in RECORD_COLUMNS}))
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"malformed record {row!r}: {e}") from None
    return out


def write_records(path, records) -> None:
    Path(path).write_text(format_records(records))


def read_records(path) -> list[BenchRecord]:
    return parse_records(Path(path).read_text())
