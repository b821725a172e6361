"""Tabular fire-test data: ingestion, summary statistics, discretization,
treatment binarization, and a synthetic generator for desk-scale runs.

The canonical schema has seven input variables (column width W, reinforcement
ratio r, length L, concrete strength fc, effective length factor K, concrete
cover C, applied load P) and one outcome, the fire resistance time FR in
minutes.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Column",
    "ColumnSchema",
    "Table",
    "SummaryStats",
    "BinaryTreatment",
    "DatasetError",
    "FIRE_SCHEMA",
    "FIRE_INPUTS",
    "FIRE_OUTCOME",
    "load_csv",
    "write_csv",
    "summarize",
    "pearson_correlation",
    "correlation_matrix",
    "binarize_at_mean",
    "quantile_discretize",
    "synthesize_fire_dataset",
]


class DatasetError(ValueError):
    """Raised for schema violations, parse failures, and degenerate columns."""


@dataclass(frozen=True)
class Column:
    name: str
    unit: str
    role: str  # "input" | "outcome" | "auxiliary"


@dataclass(frozen=True)
class ColumnSchema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate column names in schema")
        for c in self.columns:
            if c.role not in ("input", "outcome", "auxiliary"):
                raise DatasetError(f"unknown role {c.role!r} for column {c.name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DatasetError(f"unknown column {name!r}")

    def column(self, name: str) -> Column:
        return self.columns[self.index(name)]

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.role == "input")

    @property
    def outcome_name(self) -> str:
        outs = [c.name for c in self.columns if c.role == "outcome"]
        if len(outs) != 1:
            raise DatasetError("schema must declare exactly one outcome column")
        return outs[0]


FIRE_SCHEMA = ColumnSchema(
    columns=(
        Column("W", "mm", "input"),
        Column("r", "%", "input"),
        Column("L", "m", "input"),
        Column("fc", "MPa", "input"),
        Column("K", "-", "input"),
        Column("C", "mm", "input"),
        Column("P", "kN", "input"),
        Column("FR", "min", "outcome"),
    )
)

FIRE_INPUTS = FIRE_SCHEMA.input_names
FIRE_OUTCOME = "FR"


class Table:
    """Immutable column-oriented numeric table.

    Stores data as a read-only (n_rows, n_cols) float array aligned with the
    schema column order.
    """

    def __init__(self, schema: ColumnSchema, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(schema.columns):
            raise DatasetError(
                f"data shape {data.shape} does not match schema with "
                f"{len(schema.columns)} columns"
            )
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise DatasetError(
                f"non-finite value at row {bad[0]}, column "
                f"{schema.columns[bad[1]].name!r}"
            )
        self.schema = schema
        self._data = data.copy()
        self._data.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self._data.shape[0]

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names

    def column(self, name: str) -> np.ndarray:
        return self._data[:, self.schema.index(name)]

    def matrix(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        if names is None:
            return self._data.copy()
        idx = [self.schema.index(n) for n in names]
        return self._data[:, idx].copy()

    def with_column(self, name: str, unit: str, role: str, values: np.ndarray) -> "Table":
        """New table with an extra column appended."""
        values = np.asarray(values, dtype=float).reshape(-1, 1)
        if values.shape[0] != self.n_rows:
            raise DatasetError("appended column length does not match row count")
        schema = ColumnSchema(self.schema.columns + (Column(name, unit, role),))
        return Table(schema, np.hstack([self._data, values]))

    def replace_column(self, name: str, values: np.ndarray) -> "Table":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_rows,):
            raise DatasetError("replacement column length does not match row count")
        data = self._data.copy()
        data[:, self.schema.index(name)] = values
        return Table(self.schema, data)

    def take_rows(self, indices: np.ndarray) -> "Table":
        return Table(self.schema, self._data[np.asarray(indices, dtype=int)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Table)
            and self.schema == other.schema
            and self._data.shape == other._data.shape
            and bool(np.array_equal(self._data, other._data))
        )

    def __repr__(self) -> str:
        return f"Table({self.n_rows} rows x {len(self.names)} cols: {', '.join(self.names)})"


@dataclass(frozen=True)
class SummaryStats:
    minimum: float
    maximum: float
    mean: float
    std_dev: float
    skewness: float


@dataclass(frozen=True)
class BinaryTreatment:
    source_column: str
    threshold: float
    values: np.ndarray = field(repr=False)

    @property
    def n_treated(self) -> int:
        return int(self.values.sum())

    @property
    def n_control(self) -> int:
        return int(len(self.values) - self.values.sum())


def load_csv(path: str | os.PathLike, schema: ColumnSchema = FIRE_SCHEMA) -> Table:
    """Read a comma-separated, dot-decimal, UTF-8 file with one header row.

    Header must contain every schema column (order-insensitive, extra columns
    rejected); every cell must parse as a finite real.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"empty file: {path}") from None
        header = [h.strip() for h in header]
        missing = set(schema.names) - set(header)
        if missing:
            raise DatasetError(f"missing column(s): {', '.join(sorted(missing))}")
        extra = set(header) - set(schema.names)
        if extra:
            raise DatasetError(f"unexpected column(s): {', '.join(sorted(extra))}")
        col_pos = {name: header.index(name) for name in schema.names}
        rows = []
        for line_no, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(header):
                raise DatasetError(f"row at line {line_no} has {len(raw)} cells, expected {len(header)}")
            row = []
            for name in schema.names:
                cell = raw[col_pos[name]].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"non-numeric cell {cell!r} at line {line_no}, column {name!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DatasetError(f"non-finite cell at line {line_no}, column {name!r}")
                row.append(value)
            rows.append(row)
    if not rows:
        raise DatasetError(f"no data rows in {path}")
    return Table(schema, np.array(rows, dtype=float))


def write_csv(table: Table, path: str | os.PathLike) -> None:
    """Write canonical CSV (header + rows), atomically via temp + rename."""
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(table.names)
            for row in table.matrix():
                writer.writerow([repr(float(v)) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summarize(table: Table, column: str) -> SummaryStats:
    """Five summary statistics for one column.

    std_dev uses the sample (n-1) convention; skewness is the adjusted
    Fisher-Pearson sample skewness (the common spreadsheet convention).
    A zero-variance column has skewness 0 by convention.
    """
    x = table.column(column)
    n = len(x)
    if n < 2:
        raise DatasetError("need at least 2 rows for summary statistics")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    if sd == 0.0 or n < 3:
        skew = 0.0
    else:
        m3 = float(np.mean((x - mean) ** 3))
        g1 = m3 / float(np.mean((x - mean) ** 2)) ** 1.5
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    return SummaryStats(
        minimum=float(np.min(x)),
        maximum=float(np.max(x)),
        mean=mean,
        std_dev=sd,
        skewness=skew,
    )


def pearson_correlation(table: Table, a: str, b: str) -> float:
    """Pearson product-moment correlation between two columns."""
    xa = table.column(a)
    xb = table.column(b)
    da = xa - xa.mean()
    db = xb - xb.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0:
        raise DatasetError(f"zero-variance column {a!r}")
    if vb == 0.0:
        raise DatasetError(f"zero-variance column {b!r}")
    return float(np.dot(da, db) / math.sqrt(va * vb))


def correlation_matrix(table: Table) -> np.ndarray:
    """Pairwise Pearson correlations over all columns, unit diagonal."""
    names = table.names
    d = len(names)
    out = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            rho = pearson_correlation(table, names[i], names[j])
            out[i, j] = out[j, i] = rho
    return out


def binarize_at_mean(
    table: Table, column: str, threshold: Optional[float] = None
) -> BinaryTreatment:
    """0/1 treatment: 1 exactly when the value is strictly above the threshold.

    With no explicit threshold, the column mean is used.
    """
    x = table.column(column)
    if threshold is None:
        threshold = summarize(table, column).mean
    values = (x > threshold).astype(float)
    n1 = int(values.sum())
    if n1 == 0 or n1 == len(values):
        raise DatasetError(
            f"degenerate treatment: all values of {column!r} on one side of {threshold}"
        )
    values.setflags(write=False)
    return BinaryTreatment(source_column=column, threshold=float(threshold), values=values)


def quantile_discretize(table: Table, column: str, bins: int) -> np.ndarray:
    """Integer labels 0..bins-1 with boundaries at empirical quantiles.

    Labels are a non-decreasing function of the source value.
    """
    if bins < 2:
        raise DatasetError("bins must be >= 2")
    x = table.column(column)
    if len(np.unique(x)) < bins:
        raise DatasetError(
            f"bins={bins} exceeds the {len(np.unique(x))} distinct values of {column!r}"
        )
    edges = np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1])
    labels = np.searchsorted(edges, x, side="left")
    return labels.astype(int)


# Synthetic generator. Each input is a scaled Beta draw on its Table-style
# [min, max] range with alpha/beta solved from the target mean and standard
# deviation, so moments are matched analytically (no clipping needed on
# inputs). The outcome follows the linear mechanism below plus Gaussian
# noise, then is clipped to its range.
#
# K has no published summary row; its range/mean/sd below are a documented
# synthetic choice based on typical effective length factors.
_INPUT_TARGETS = {
    # name: (lo, hi, mean, sd)
    "W": (203.0, 610.0, 350.4, 105.3),
    "r": (0.9, 4.4, 2.1, 0.5),
    "L": (2.1, 5.7, 3.9, 0.5),
    "fc": (24.0, 138.0, 55.7, 33.0),
    "K": (0.5, 2.0, 1.0, 0.25),
    "C": (25.0, 64.0, 42.4, 7.1),
    "P": (0.0, 5373.0, 1501.8, 1168.6),
}

# Documented synthetic outcome mechanism (minutes). Signs follow the
# direction pattern of the significant estimated effects; the small positive
# W coefficient is a synthetic choice, not a claim about the real data.
FIRE_DGP_COEFFICIENTS = {
    "W": 0.05,
    "r": 8.0,
    "L": -20.0,
    "fc": 0.6,
    "K": -60.0,
    "C": 1.5,
    "P": 0.01,
}
FIRE_DGP_NOISE_SD = 25.0
FIRE_OUTCOME_RANGE = (55.0, 389.0)
FIRE_OUTCOME_MEAN = 176.6

FIRE_DGP_INTERCEPT = FIRE_OUTCOME_MEAN - sum(
    FIRE_DGP_COEFFICIENTS[name] * _INPUT_TARGETS[name][2] for name in FIRE_INPUTS
)


def _beta_params(lo: float, hi: float, mean: float, sd: float) -> tuple[float, float]:
    m = (mean - lo) / (hi - lo)
    v = (sd / (hi - lo)) ** 2
    if not 0 < m < 1 or v >= m * (1 - m):
        raise DatasetError("infeasible beta moment targets")
    common = m * (1 - m) / v - 1
    return m * common, (1 - m) * common


def synthesize_fire_dataset(n: int, seed: int) -> Table:
    """Deterministic synthetic dataset with the canonical eight columns."""
    if n < 10:
        raise DatasetError("n must be >= 10")
    rng = np.random.default_rng(seed)
    data = np.empty((n, 8))
    for j, name in enumerate(FIRE_INPUTS):
        lo, hi, mean, sd = _INPUT_TARGETS[name]
        a, b = _beta_params(lo, hi, mean, sd)
        data[:, j] = lo + (hi - lo) * rng.beta(a, b, size=n)
    fr = np.full(n, FIRE_DGP_INTERCEPT)
    for j, name in enumerate(FIRE_INPUTS):
        fr += FIRE_DGP_COEFFICIENTS[name] * data[:, j]
    fr += rng.normal(0.0, FIRE_DGP_NOISE_SD, size=n)
    data[:, 7] = np.clip(fr, *FIRE_OUTCOME_RANGE)
    return Table(FIRE_SCHEMA, data)
