"""Column-typed tabular data with explicit cell states.

Every cell is either observed, missing, or a survey non-response. The two
unobserved states are deliberately distinct: non-response rows are excluded
from every analysis, while missing cells may be multiply imputed. Datasets
are immutable after construction; all operations return new datasets and are
safe to share across threads.

Discrete cell values are stored as small integer codes into the column kind's
level list; continuous values as float64. Unobserved cells carry code -1 /
NaN and are only meaningful through the state array.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DataError, InputError, RecodeError


class CellState(enum.IntEnum):
    OBSERVED = 0
    MISSING = 1
    NONRESPONSE = 2


#: Sentinel used in cell lists passed to :meth:`Column.build`.
NONRESPONSE = CellState.NONRESPONSE

#: Token used by :func:`write_csv` to encode non-response cells.
NONRESPONSE_TOKEN = "__NR__"


# ---------------------------------------------------------------------------
# Column kinds


@dataclass(frozen=True)
class Continuous:
    """Real-valued column."""


@dataclass(frozen=True)
class Categorical:
    """Discrete column with an ordered level list and a reference level."""

    levels: tuple[str, ...]
    reference: str

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise InputError("categorical kind needs at least one level")
        if len(set(self.levels)) != len(self.levels):
            raise InputError(f"duplicate levels: {self.levels}")
        if self.reference not in self.levels:
            raise InputError(f"reference {self.reference!r} not among levels {self.levels}")


@dataclass(frozen=True)
class Binary:
    """Two-level column; the non-reference level codes to 1 in design matrices."""

    levels: tuple[str, str] = ("0", "1")
    reference: str = "0"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) != 2 or len(set(self.levels)) != 2:
            raise InputError(f"binary kind needs two distinct levels, got {self.levels}")
        if self.reference not in self.levels:
            raise InputError(f"reference {self.reference!r} not among levels {self.levels}")


ColumnKind = Union[Continuous, Categorical, Binary]


def kind_levels(kind: ColumnKind) -> tuple[str, ...] | None:
    """Level labels of a discrete kind, or None for continuous."""
    if isinstance(kind, (Categorical, Binary)):
        return kind.levels
    return None


def nonreference_levels(kind) -> tuple[str, ...]:
    return tuple(lv for lv in kind.levels if lv != kind.reference)


# ---------------------------------------------------------------------------
# Columns and datasets


@dataclass(frozen=True, eq=False)
class Column:
    """One column: a kind, packed values, and a per-cell state array."""

    kind: ColumnKind
    values: np.ndarray
    state: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        state = np.asarray(self.state, dtype=np.uint8)
        if values.shape != state.shape or values.ndim != 1:
            raise InputError("values and state must be equal-length vectors")
        levels = kind_levels(self.kind)
        if levels is None:
            values = values.astype(np.float64)
            bad = np.flatnonzero((state == CellState.OBSERVED) & ~np.isfinite(values))
            if bad.size:
                raise DataError(f"non-finite observed value at row {bad[0]}")
            values = np.where(state == CellState.OBSERVED, values, np.nan)
        else:
            values = values.astype(np.int16)
            obs = state == CellState.OBSERVED
            if obs.any():
                codes = values[obs]
                if codes.min() < 0 or codes.max() >= len(levels):
                    raise DataError("code outside declared levels")
            values = np.where(obs, values, -1).astype(np.int16)
        values.setflags(write=False)
        state.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "state", state)

    @classmethod
    def build(cls, kind: ColumnKind, cells: Iterable) -> "Column":
        """Build a column from python cell values.

        Each cell is an observed value (a number, or a level label for
        discrete kinds), ``None`` for missing, or :data:`NONRESPONSE`.
        """
        cells = list(cells)
        n = len(cells)
        state = np.zeros(n, dtype=np.uint8)
        levels = kind_levels(kind)
        if levels is None:
            values = np.full(n, np.nan)
        else:
            values = np.full(n, -1, dtype=np.int16)
            index = {lv: i for i, lv in enumerate(levels)}
        for i, cell in enumerate(cells):
            if cell is None:
                state[i] = CellState.MISSING
            elif cell is NONRESPONSE:
                state[i] = CellState.NONRESPONSE
            elif levels is None:
                values[i] = float(cell)
            else:
                if cell not in index:
                    raise DataError(f"value {cell!r} not among levels {levels}")
                values[i] = index[cell]
        return cls(kind, values, state)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def observed(self) -> np.ndarray:
        return self.state == CellState.OBSERVED

    def label(self, row: int):
        """Observed cell value (label for discrete kinds); None when unobserved."""
        if self.state[row] != CellState.OBSERVED:
            return None
        levels = kind_levels(self.kind)
        if levels is None:
            return float(self.values[row])
        return levels[int(self.values[row])]

    def take(self, rows: np.ndarray) -> "Column":
        # Row selection cannot break invariants; skip re-validation.
        out = object.__new__(Column)
        values = self.values[rows]
        state = self.state[rows]
        values.setflags(write=False)
        state.setflags(write=False)
        object.__setattr__(out, "kind", self.kind)
        object.__setattr__(out, "values", values)
        object.__setattr__(out, "state", state)
        return out

    def __eq__(self, other):
        if not isinstance(other, Column):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.state, other.state)
            and np.array_equal(self.values, other.values, equal_nan=isinstance(self.kind, Continuous))
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable bundle of equal-length columns plus an optional weight column."""

    columns: dict[str, Column]
    weight_column: str | None = None

    def __post_init__(self):
        if not self.columns:
            raise InputError("dataset needs at least one column")
        lengths = {col.n_rows for col in self.columns.values()}
        if len(lengths) != 1:
            raise DataError(f"columns have unequal lengths: {sorted(lengths)}")
        if self.weight_column is not None:
            if self.weight_column not in self.columns:
                raise InputError(f"weight column {self.weight_column!r} not in dataset")
            wcol = self.columns[self.weight_column]
            if not isinstance(wcol.kind, Continuous):
                raise DataError("weight column must be continuous")
            if not wcol.observed.all():
                raise DataError("weight column has unobserved cells")
            if (wcol.values < 0).any():
                raise DataError("weights must be non-negative")

    @property
    def n_rows(self) -> int:
        return next(iter(self.columns.values())).n_rows

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise InputError(f"unknown column {name!r}") from None

    def weights(self) -> np.ndarray:
        if self.weight_column is None:
            return np.ones(self.n_rows)
        return self.columns[self.weight_column].values.astype(np.float64)

    def weights_from(self, source: str) -> np.ndarray:
        """A named column validated as an analysis-weight vector."""
        col = self[source]
        if not isinstance(col.kind, Continuous):
            raise InputError(f"weight source {source!r} must be continuous")
        if not col.observed.all():
            raise DataError(f"weight source {source!r} has unobserved cells")
        vals = col.values.astype(np.float64)
        if (vals < 0).any():
            raise DataError("weights must be non-negative")
        return vals

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        out = object.__new__(Dataset)
        object.__setattr__(out, "columns", {n: c.take(rows) for n, c in self.columns.items()})
        object.__setattr__(out, "weight_column", self.weight_column)
        return out

    def with_column(self, name: str, column: Column) -> "Dataset":
        if name in self.columns:
            raise InputError(f"column {name!r} already exists")
        cols = dict(self.columns)
        cols[name] = column
        return Dataset(cols, self.weight_column)

    def replace_columns(self, updates: Mapping[str, Column]) -> "Dataset":
        cols = dict(self.columns)
        for name, col in updates.items():
            if name not in cols:
                raise InputError(f"unknown column {name!r}")
            cols[name] = col
        return Dataset(cols, self.weight_column)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.weight_column == other.weight_column
            and self.names == other.names
            and all(self.columns[n] == other.columns[n] for n in self.names)
        )


@dataclass(frozen=True)
class VariableRoles:
    """Maps analysis roles onto dataset columns.

    Mediators are the support measures taken after exposure disclosure; the
    list may be empty only for total-effect-only analyses.
    """

    exposure: str
    outcome: str
    baseline_support: str
    mediators: tuple[str, ...] = ()
    covariates: tuple[str, ...] = ()
    survey_year: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "mediators", tuple(self.mediators))
        object.__setattr__(self, "covariates", tuple(self.covariates))

    def all_columns(self) -> tuple[str, ...]:
        cols = [self.exposure, self.outcome, self.baseline_support]
        cols.extend(self.mediators)
        cols.extend(self.covariates)
        if self.survey_year is not None:
            cols.append(self.survey_year)
        return tuple(cols)

    def adjustment_columns(self) -> tuple[str, ...]:
        """Covariates entering every outcome model (baseline support first)."""
        cols = [self.baseline_support, *self.covariates]
        if self.survey_year is not None:
            cols.append(self.survey_year)
        return tuple(cols)

    def validate(self, ds: Dataset) -> None:
        for name in self.all_columns():
            if name not in ds.columns:
                raise InputError(f"role column {name!r} not in dataset")
        for name in (self.exposure, self.outcome):
            if not isinstance(ds[name].kind, Binary):
                raise InputError(f"column {name!r} must be binary for its role")


# ---------------------------------------------------------------------------
# CSV ingestion / serialization


def ingest_csv(
    source,
    schema: Mapping[str, ColumnKind],
    missing_tokens: Iterable[str] = ("",),
    *,
    nonresponse_tokens: Iterable[str] = (),
    weight_column: str | None = None,
) -> Dataset:
    """Read a CSV file (RFC-4180 quoting) into a Dataset.

    Only columns named in ``schema`` are ingested; the header must contain
    every schema column. Cells matching ``missing_tokens`` become missing,
    ``nonresponse_tokens`` become non-response; anything else must parse
    under the declared kind, otherwise a DataError names the offending row
    and column. ``source`` may be a path or an open text stream.
    """
    missing = frozenset(missing_tokens)
    nonresponse = frozenset(nonresponse_tokens)
    names = list(schema)
    if hasattr(source, "read"):
        fh, close = source, False
    else:
        try:
            fh = open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read {source}: {exc}") from exc
        close = True
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file: no header row") from None
        positions = {}
        for name in names:
            if name not in header:
                raise DataError(f"column {name!r} not in header")
            positions[name] = header.index(name)
        level_index = {
            name: ({lv: i for i, lv in enumerate(kind_levels(kind))} if kind_levels(kind) else None)
            for name, kind in schema.items()
        }
        raw: dict[str, list] = {name: [] for name in names}
        states: dict[str, list] = {name: [] for name in names}
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, got {len(row)}")
            for name in names:
                token = row[positions[name]]
                if token in missing:
                    raw[name].append(0)
                    states[name].append(int(CellState.MISSING))
                    continue
                if token in nonresponse:
                    raw[name].append(0)
                    states[name].append(int(CellState.NONRESPONSE))
                    continue
                index = level_index[name]
                if index is None:
                    try:
                        raw[name].append(float(token))
                    except ValueError:
                        raise DataError(
                            f"row {row_no}, column {name!r}: cannot parse {token!r} as a number"
                        ) from None
                else:
                    if token not in index:
                        raise DataError(
                            f"row {row_no}, column {name!r}: {token!r} is not a declared level"
                        )
                    raw[name].append(index[token])
                states[name].append(int(CellState.OBSERVED))
    finally:
        if close:
            fh.close()
    columns = {}
    for name in names:
        kind = schema[name]
        state = np.asarray(states[name], dtype=np.uint8)
        if kind_levels(kind) is None:
            values = np.asarray(raw[name], dtype=np.float64)
        else:
            values = np.asarray(raw[name], dtype=np.int16)
        columns[name] = Column(kind, values, state)
    return Dataset(columns, weight_column)


def write_csv(
    ds: Dataset,
    dest,
    *,
    missing_token: str = "",
    nonresponse_token: str = NONRESPONSE_TOKEN,
) -> None:
    """Write a dataset to CSV so that :func:`ingest_csv` round-trips it.

    Missing cells are written as ``missing_token`` and non-response cells as
    ``nonresponse_token``; continuous values use shortest round-trip float
    formatting.
    """
    if hasattr(dest, "write"):
        fh, close = dest, False
    else:
        fh = open(dest, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        writer.writerow(ds.names)
        cols = [ds.columns[name] for name in ds.names]
        for i in range(ds.n_rows):
            row = []
            for col in cols:
                st = col.state[i]
                if st == CellState.MISSING:
                    row.append(missing_token)
                elif st == CellState.NONRESPONSE:
                    row.append(nonresponse_token)
                elif kind_levels(col.kind) is None:
                    row.append(repr(float(col.values[i])))
                else:
                    row.append(kind_levels(col.kind)[int(col.values[i])])
            writer.writerow(row)
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# Recoding


@dataclass(frozen=True)
class RecodeRule:
    """Maps raw labels of one source column onto a target kind.

    ``mapping`` sends each raw label to a target level, ``CellState.MISSING``
    or ``CellState.NONRESPONSE``. Labels that already are levels of the
    target kind pass through unchanged, which makes recoding idempotent.
    """

    kind: ColumnKind
    mapping: Mapping[str, str | CellState]

    def __post_init__(self):
        levels = kind_levels(self.kind)
        if levels is None:
            raise InputError("recode target kind must be discrete")
        mapped_levels = [t for t in self.mapping.values() if isinstance(t, str)]
        for target in mapped_levels:
            if target not in levels:
                raise InputError(f"recode target {target!r} not a level of {levels}")
        if not mapped_levels:
            raise InputError("recode rule must map at least one label to a level")


RecodeRuleSet = Mapping[str, RecodeRule]


def recode(ds: Dataset, rules: RecodeRuleSet) -> Dataset:
    """Apply label recodes, returning a new dataset with row order preserved.

    Raw labels with no mapping and no identity target raise a RecodeError
    naming the label. Cells already missing or non-response keep their state.
    """
    updates = {}
    for name, rule in rules.items():
        if name not in ds.columns:
            raise InputError(f"recode source column {name!r} not in dataset")
        col = ds[name]
        src_levels = kind_levels(col.kind)
        if src_levels is None:
            raise InputError(f"cannot recode continuous column {name!r}")
        tgt_levels = kind_levels(rule.kind)
        tgt_index = {lv: i for i, lv in enumerate(tgt_levels)}
        # Per-source-code target code, or the state it maps to; -9 = unmapped.
        code_map = np.full(len(src_levels), -9, dtype=np.int16)
        state_map = np.full(len(src_levels), int(CellState.OBSERVED), dtype=np.uint8)
        for i, label in enumerate(src_levels):
            target = rule.mapping.get(label)
            if target is None and label in tgt_index:
                target = label
            if isinstance(target, str):
                code_map[i] = tgt_index[target]
            elif isinstance(target, CellState):
                code_map[i] = -1
                state_map[i] = int(target)
        obs = col.observed
        src_codes = col.values[obs]
        unmapped = np.flatnonzero(code_map[src_codes] == -9)
        if unmapped.size:
            label = src_levels[int(src_codes[unmapped[0]])]
            raise RecodeError(f"column {name!r}: no recode target for label {label!r}")
        values = np.full(col.n_rows, -1, dtype=np.int16)
        state = col.state.copy()
        values[obs] = code_map[src_codes]
        state[obs] = state_map[src_codes]
        updates[name] = Column(rule.kind, values, state)
    return ds.replace_columns(updates)


def sgm_survey_rules(
    *,
    orientation: str = "orientation",
    depression: str = "depression",
    nonresponse_labels: Sequence[str] = ("Refused", "Don't know", "don't know"),
) -> dict[str, RecodeRule]:
    """Canned recode rules for NHIS-style sexual-orientation extracts.

    Orientation responses gay/lesbian, bisexual, and "something else" code to
    exposure level "1"; "straight" to "0". Refusals and don't-know responses
    become non-response. Depression "Yes"/"No" codes to "1"/"0".
    """
    nr = {label: CellState.NONRESPONSE for label in nonresponse_labels}
    return {
        orientation: RecodeRule(
            Binary(),
            {"gay/lesbian": "1", "bisexual": "1", "something else": "1", "straight": "0", **nr},
        ),
        depression: RecodeRule(Binary(), {"Yes": "1", "No": "0", **nr}),
    }


# ---------------------------------------------------------------------------
# Row filtering


@dataclass(frozen=True)
class ExclusionCounts:
    nonresponse: int
    missing: int
    retained: int

    def to_json_obj(self):
        return {"nonresponse": self.nonresponse, "missing": self.missing, "retained": self.retained}


def filter_analysis_rows(
    ds: Dataset, roles: VariableRoles, policy: str
) -> tuple[Dataset, ExclusionCounts]:
    """Drop rows unusable under the given missing-data policy.

    ``complete_case`` drops any row with a missing or non-response cell among
    the role columns; ``keep_missing_for_imputation`` drops only non-response
    rows (non-response is never imputed). Dropped rows are counted by reason,
    non-response taking precedence when a row has both.
    """
    if policy not in ("complete_case", "keep_missing_for_imputation"):
        raise InputError(f"unknown policy {policy!r}")
    roles.validate(ds)
    role_cols = [ds[name] for name in dict.fromkeys(roles.all_columns())]
    any_nonresponse = np.zeros(ds.n_rows, dtype=bool)
    any_missing = np.zeros(ds.n_rows, dtype=bool)
    for col in role_cols:
        any_nonresponse |= col.state == CellState.NONRESPONSE
        any_missing |= col.state == CellState.MISSING
    if policy == "complete_case":
        keep = ~(any_nonresponse | any_missing)
    else:
        keep = ~any_nonresponse
    dropped_nr = int(any_nonresponse.sum())
    dropped_missing = int((~keep & ~any_nonresponse).sum())
    counts = ExclusionCounts(dropped_nr, dropped_missing, int(keep.sum()))
    if counts.retained == 0:
        raise DataError("no analyzable rows remain after exclusions")
    return ds.take(np.flatnonzero(keep)), counts


# ---------------------------------------------------------------------------
# Descriptive summaries


@dataclass(frozen=True)
class DescriptiveRow:
    variable: str
    level: str | None
    stratum: str
    n: int
    pct: float | None
    mean: float | None
    sd: float | None


@dataclass(frozen=True)
class DescriptiveTable:
    rows: tuple[DescriptiveRow, ...]

    CSV_HEADER = ("variable", "level", "stratum", "n", "pct", "mean", "sd")

    def to_json_obj(self):
        return [
            {
                "variable": r.variable,
                "level": r.level,
                "stratum": r.stratum,
                "n": r.n,
                "pct": r.pct,
                "mean": r.mean,
                "sd": r.sd,
            }
            for r in self.rows
        ]

    def to_csv(self, dest) -> None:
        if hasattr(dest, "write"):
            fh, close = dest, False
        else:
            fh = open(dest, "w", encoding="utf-8", newline="")
            close = True
        try:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_HEADER)
            for r in self.rows:
                writer.writerow(
                    [
                        r.variable,
                        "" if r.level is None else r.level,
                        r.stratum,
                        r.n,
                        "" if r.pct is None else repr(r.pct),
                        "" if r.mean is None else repr(r.mean),
                        "" if r.sd is None else repr(r.sd),
                    ]
                )
        finally:
            if close:
                fh.close()


def describe(
    ds: Dataset, strata: str, columns: Sequence[str], *, weighted: bool = False
) -> DescriptiveTable:
    """Stratified descriptive table: mean (SD) for continuous columns, n (%)
    for discrete ones, computed within stratum over non-missing cells.

    Counts are raw row counts. With ``weighted=True`` the percentages, means,
    and SDs use the dataset's analysis weights (counts stay unweighted).
    """
    strata_col = ds[strata]
    strata_levels = kind_levels(strata_col.kind)
    if strata_levels is None:
        raise InputError(f"stratum column {strata!r} must be discrete")
    weights = ds.weights() if weighted else np.ones(ds.n_rows)
    rows = []
    for code, stratum in enumerate(strata_levels):
        in_stratum = strata_col.observed & (strata_col.values == code)
        for name in columns:
            col = ds[name]
            use = in_stratum & col.observed
            levels = kind_levels(col.kind)
            if levels is None:
                vals = col.values[use]
                w = weights[use]
                n = int(use.sum())
                if n == 0:
                    mean = sd = None
                else:
                    mean = float(np.average(vals, weights=w))
                    if n > 1:
                        var = float(np.average((vals - mean) ** 2, weights=w)) * n / (n - 1)
                        sd = float(np.sqrt(var))
                    else:
                        sd = None
                rows.append(DescriptiveRow(name, None, stratum, n, None, mean, sd))
            else:
                denom = float(weights[use].sum())
                for lcode, level in enumerate(levels):
                    sel = use & (col.values == lcode)
                    n = int(sel.sum())
                    pct = None if denom == 0 else float(weights[sel].sum()) / denom * 100.0
                    rows.append(DescriptiveRow(name, level, stratum, n, pct, None, None))
    return DescriptiveTable(tuple(rows))
