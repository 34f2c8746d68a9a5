"""Time-series container with a fixed CSV layout.

CSV layout: header row, comma separated, time column ``t_us`` first.
Complex quantities are split into ``_re``/``_im`` columns and statistical
errors carry an ``_se`` suffix.  Floats are written in shortest
round-trip form so that re-running a configuration reproduces the file
byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TableError(ValueError):
    pass


@dataclass
class TimeSeriesTable:
    """A strictly increasing time grid (us) plus named real columns."""

    t: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1 or len(self.t) < 2:
            raise TableError("time grid must be a 1-D array with >= 2 points")
        if not np.all(np.diff(self.t) > 0):
            raise TableError("time grid must be strictly increasing")
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for name, col in self.columns.items():
            if col.shape != self.t.shape:
                raise TableError(f"column {name!r} length does not match time grid")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def check(self) -> None:
        """Schema self-check: consistent lengths, monotone time, finite values."""
        for name, col in self.columns.items():
            if col.shape != self.t.shape:
                raise TableError(f"column {name!r} length mismatch")
            if not np.all(np.isfinite(col)):
                raise TableError(f"column {name!r} contains non-finite values")
        if not np.all(np.isfinite(self.t)) or not np.all(np.diff(self.t) > 0):
            raise TableError("time grid invalid")

    def to_csv(self, path) -> None:
        self.check()
        write_csv(path, ["t_us", *self.columns], [self.t, *self.columns.values()])


def write_csv(path, names: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(rows):
            fh.write(",".join(repr(float(col[i])) for col in columns) + "\n")


def check_csv(path, grouped: bool = False) -> None:
    """Validate an emitted CSV: rectangular, finite, monotone time.

    With ``grouped=True`` (long-format sweep surfaces) the time column may
    reset to the first grid value, marking the next sweep point; it must
    still increase strictly within each block.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if not header or header[0] != "t_us":
            raise TableError(f"{path}: first column must be t_us")
        n_cols = len(header)
        prev_t = None
        t_first = None
        for line_no, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").split(",")
            if len(fields) != n_cols:
                raise TableError(f"{path}:{line_no}: expected {n_cols} columns")
            values = [float(f) for f in fields]
            if not all(np.isfinite(values)):
                raise TableError(f"{path}:{line_no}: non-finite value")
            t = values[0]
            if t_first is None:
                t_first = t
            if prev_t is not None and t <= prev_t:
                if not (grouped and t == t_first):
                    raise TableError(f"{path}:{line_no}: time not increasing")
            prev_t = t
        if prev_t is None:
            raise TableError(f"{path}: no data rows")
