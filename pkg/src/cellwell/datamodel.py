"""Core data types and CSV ingestion for two-level cell/well data.

The data model is deliberately small: a cell-level feature table, an
optional well-level feature table, and a bio-assessment assigning each
well a rank (a permutation of 1..n_wells) and an ordinal class in
{Low, Medium, High}. All tables are immutable after construction and the
ordering of wells everywhere follows first appearance in the cell table.

CSV layout:

* cell table:      header ``well_id,<feature names...>``, one row per cell
* well table:      header ``well_id,<feature names...>``, one row per well
* bio-assessment:  header ``well_id,rank,class``, one row per well

Numbers are serialized with 17 significant digits so that a write/load
round trip reproduces every float bit-exactly. Files are written with a
plain ``\\n`` line terminator.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassRankInconsistent,
    DimensionMismatch,
    DuplicateWell,
    EmptyInput,
    InvalidTable,
    MissingColumn,
    NonNumericCell,
    RankNotPermutation,
    UnknownClassLabel,
    WellIdMismatch,
    WellWithSingleCell,
)

CLASS_ORDER = ("Low", "Medium", "High")
CLASS_CODE = {name: code for code, name in enumerate(CLASS_ORDER, start=1)}

# 17 significant digits guarantee an exact text round trip for doubles.
def format_float(x: float) -> str:
    """Serialize a float with enough digits for a bit-exact round trip."""
    # repr() is the shortest string that parses back to the same float.
    return repr(float(x))


def _first_appearance_order(ids) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for wid in ids:
        if wid not in seen:
            seen[wid] = None
    return tuple(seen)


def _check_names(names, what: str) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if any(not n for n in names):
        raise InvalidTable(f"{what} names must be non-empty")
    if len(set(names)) != len(names):
        raise InvalidTable(f"{what} names must be unique")
    return names


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CellTable:
    """Per-cell feature matrix with well membership.

    Rows keep their input order; ``well_order`` lists well ids by first
    appearance. Every well must contribute at least two cells and every
    value must be finite.
    """

    well_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "well_ids", tuple(str(w) for w in self.well_ids))
        object.__setattr__(self, "feature_names", _check_names(self.feature_names, "feature"))
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape != (len(self.well_ids), len(self.feature_names)):
            raise DimensionMismatch(
                f"cell values have shape {values.shape}, expected "
                f"({len(self.well_ids)}, {len(self.feature_names)})"
            )
        if len(self.well_ids) == 0:
            raise EmptyInput("cell table has no rows")
        bad = ~np.isfinite(values)
        if bad.any():
            r, c = map(int, np.argwhere(bad)[0])
            raise NonNumericCell(
                f"non-finite value in cell row {r + 1}, column {self.feature_names[c]}"
            )
        counts = Counter(self.well_ids)
        order = _first_appearance_order(self.well_ids)
        for wid in order:
            if counts[wid] < 2:
                raise WellWithSingleCell(f"well {wid} has {counts[wid]} cell(s); need at least 2")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "well_order", order)
        rows: dict[str, list[int]] = {wid: [] for wid in order}
        for i, wid in enumerate(self.well_ids):
            rows[wid].append(i)
        object.__setattr__(
            self, "_rows", {wid: np.asarray(ix, dtype=np.intp) for wid, ix in rows.items()}
        )

    @property
    def n_cells(self) -> int:
        return len(self.well_ids)

    @property
    def n_wells(self) -> int:
        return len(self.well_order)

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def rows_of(self, well_id: str) -> np.ndarray:
        """Row indices belonging to one well, in input order."""
        return self._rows[well_id]

    def select_wells(self, keep) -> "CellTable":
        """New table restricted to the given wells, preserving row order."""
        keep = set(keep)
        mask = [wid in keep for wid in self.well_ids]
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise EmptyInput("no cells left after well selection")
        return CellTable(
            tuple(self.well_ids[i] for i in idx), self.feature_names, self.values[idx]
        )


@dataclass(frozen=True)
class WellTable:
    """Per-well feature matrix; zero feature columns are allowed."""

    well_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "well_ids", tuple(str(w) for w in self.well_ids))
        if self.feature_names:
            object.__setattr__(self, "feature_names", _check_names(self.feature_names, "feature"))
        else:
            object.__setattr__(self, "feature_names", ())
        dup = [w for w, c in Counter(self.well_ids).items() if c > 1]
        if dup:
            raise DuplicateWell(f"duplicate well id(s) in well table: {', '.join(sorted(dup))}")
        values = np.asarray(self.values, dtype=float)
        if values.size == 0:
            values = values.reshape(len(self.well_ids), len(self.feature_names))
        if values.ndim != 2 or values.shape != (len(self.well_ids), len(self.feature_names)):
            raise DimensionMismatch(
                f"well values have shape {values.shape}, expected "
                f"({len(self.well_ids)}, {len(self.feature_names)})"
            )
        bad = ~np.isfinite(values)
        if bad.any():
            r, c = map(int, np.argwhere(bad)[0])
            raise NonNumericCell(
                f"non-finite value in well row {r + 1}, column {self.feature_names[c]}"
            )
        object.__setattr__(self, "values", _freeze(values))

    @property
    def n_wells(self) -> int:
        return len(self.well_ids)

    def reordered(self, order) -> "WellTable":
        pos = {wid: i for i, wid in enumerate(self.well_ids)}
        idx = [pos[wid] for wid in order]
        return WellTable(tuple(order), self.feature_names, self.values[idx])


@dataclass(frozen=True)
class BioAssessment:
    """Per-well bio-rank (permutation of 1..n) and ordinal bio-class.

    Classes must be non-decreasing along increasing rank in the order
    Low < Medium < High.
    """

    well_ids: tuple[str, ...]
    ranks: tuple[int, ...]
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "well_ids", tuple(str(w) for w in self.well_ids))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        n = len(self.well_ids)
        if n == 0:
            raise EmptyInput("assessment has no rows")
        if len(self.ranks) != n or len(self.classes) != n:
            raise DimensionMismatch("assessment columns have unequal lengths")
        dup = [w for w, c in Counter(self.well_ids).items() if c > 1]
        if dup:
            raise DuplicateWell(f"duplicate well id(s) in assessment: {', '.join(sorted(dup))}")
        for c in self.classes:
            if c not in CLASS_CODE:
                raise UnknownClassLabel(f"unknown bio-class {c!r}; expected one of {CLASS_ORDER}")
        if sorted(self.ranks) != list(range(1, n + 1)):
            raise RankNotPermutation(f"ranks must be a permutation of 1..{n}, got {self.ranks}")
        by_rank = sorted(zip(self.ranks, self.classes))
        codes = [CLASS_CODE[c] for _, c in by_rank]
        for a, b in zip(codes, codes[1:]):
            if b < a:
                raise ClassRankInconsistent(
                    "bio-classes must be non-decreasing along bio-rank"
                )

    @property
    def n_wells(self) -> int:
        return len(self.well_ids)

    def rank_of(self, well_id: str) -> int:
        return dict(zip(self.well_ids, self.ranks))[well_id]

    def class_of(self, well_id: str) -> str:
        return dict(zip(self.well_ids, self.classes))[well_id]

    def classes_for(self, order) -> tuple[str, ...]:
        lookup = dict(zip(self.well_ids, self.classes))
        return tuple(lookup[wid] for wid in order)

    def ranks_for(self, order) -> tuple[int, ...]:
        lookup = dict(zip(self.well_ids, self.ranks))
        return tuple(lookup[wid] for wid in order)

    def reordered(self, order) -> "BioAssessment":
        pos = {wid: i for i, wid in enumerate(self.well_ids)}
        idx = [pos[wid] for wid in order]
        return BioAssessment(
            tuple(order),
            tuple(self.ranks[i] for i in idx),
            tuple(self.classes[i] for i in idx),
        )

    def select_wells(self, keep) -> "BioAssessment":
        """Subset to the given wells, re-ranking to a 1..k permutation.

        Relative rank order and classes are preserved; absolute ranks are
        compacted so the permutation invariant keeps holding.
        """
        keep = set(keep)
        rows = [(r, w, c) for w, r, c in zip(self.well_ids, self.ranks, self.classes) if w in keep]
        rows.sort()
        new_rank = {w: i + 1 for i, (_, w, _) in enumerate(rows)}
        ids = tuple(w for w in self.well_ids if w in keep)
        return BioAssessment(
            ids,
            tuple(new_rank[w] for w in ids),
            tuple(self.class_of(w) for w in ids),
        )


@dataclass(frozen=True)
class Dataset:
    """A joined cell table, bio-assessment and optional well table.

    Built via :func:`join`, which aligns the assessment and well table to
    the cell table's first-appearance well order.
    """

    cells: CellTable
    assessment: BioAssessment
    wells: WellTable | None = None

    @property
    def well_order(self) -> tuple[str, ...]:
        return self.cells.well_order


def join(cells: CellTable, assessment: BioAssessment, wells: WellTable | None = None) -> Dataset:
    """Join the tables into a :class:`Dataset` on exact well-id agreement.

    Raises :class:`WellIdMismatch` listing the symmetric difference when
    any pair of tables covers different wells; the reported set does not
    depend on argument order.
    """
    cell_set = set(cells.well_order)
    diff = cell_set.symmetric_difference(assessment.well_ids)
    if diff:
        raise WellIdMismatch(diff, "cell table vs assessment")
    if wells is not None:
        diff = cell_set.symmetric_difference(wells.well_ids)
        if diff:
            raise WellIdMismatch(diff, "cell table vs well table")
        wells = wells.reordered(cells.well_order)
    return Dataset(cells, assessment.reordered(cells.well_order), wells)


def _read_rows(path) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh) if row and any(f.strip() for f in row)]


def _parse_value(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCell(f"row {row}, column {column}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise NonNumericCell(f"row {row}, column {column}: {text!r} is not finite")
    return value


def _load_matrix(path, what: str):
    rows = _read_rows(path)
    if not rows:
        raise MissingColumn(f"{what} file {path} is empty")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "well_id":
        raise MissingColumn(f"{what} file must start with a well_id column, got {header[:1]!r}")
    names = header[1:]
    ids: list[str] = []
    data: list[list[float]] = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise MissingColumn(
                f"{what} row {i} has {len(row)} field(s), expected {len(header)}"
            )
        ids.append(row[0].strip())
        data.append(
            [_parse_value(cell, i, names[j]) for j, cell in enumerate(row[1:])]
        )
    values = np.asarray(data, dtype=float).reshape(len(ids), len(names))
    return ids, tuple(names), values


def load_cell_table(path) -> CellTable:
    """Load a cell-level CSV; see the module docstring for the layout."""
    ids, names, values = _load_matrix(path, "cell table")
    if not names:
        raise MissingColumn(f"cell table {path} has no feature columns")
    return CellTable(tuple(ids), names, values)


def load_well_table(path) -> WellTable:
    """Load a well-level CSV; zero feature columns are allowed."""
    ids, names, values = _load_matrix(path, "well table")
    return WellTable(tuple(ids), names, values)


def load_assessment(path) -> BioAssessment:
    """Load a bio-assessment CSV with columns well_id, rank, class."""
    rows = _read_rows(path)
    if not rows:
        raise MissingColumn(f"assessment file {path} is empty")
    header = [h.strip() for h in rows[0]]
    if header != ["well_id", "rank", "class"]:
        raise MissingColumn(
            f"assessment header must be well_id,rank,class; got {','.join(header)}"
        )
    ids: list[str] = []
    ranks: list[int] = []
    classes: list[str] = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != 3:
            raise MissingColumn(f"assessment row {i} has {len(row)} field(s), expected 3")
        ids.append(row[0].strip())
        try:
            ranks.append(int(row[1]))
        except ValueError:
            raise NonNumericCell(f"row {i}, column rank: {row[1]!r} is not an integer") from None
        classes.append(row[2].strip())
    return BioAssessment(tuple(ids), tuple(ranks), tuple(classes))


def _write_matrix(path, header, ids, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for wid, row in zip(ids, values):
            writer.writerow([wid, *(format_float(v) for v in row)])


def write_cell_table(table: CellTable, path) -> None:
    _write_matrix(path, ["well_id", *table.feature_names], table.well_ids, table.values)


def write_well_table(table: WellTable, path) -> None:
    _write_matrix(path, ["well_id", *table.feature_names], table.well_ids, table.values)


def write_assessment(assessment: BioAssessment, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["well_id", "rank", "class"])
        for wid, rank, cls in zip(assessment.well_ids, assessment.ranks, assessment.classes):
            writer.writerow([wid, str(rank), cls])
