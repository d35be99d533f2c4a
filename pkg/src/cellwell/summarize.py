"""Summary statistics, orthonormal bases and well-level summarization.

Cell-level data are reduced to one feature vector per well by applying an
ordered menu of statistics (sample quantiles, min, max, sd) to each column
of the cell matrix, optionally after rotating the cells into a PCA or
rank-supervised basis and optionally scaling each well by its own
within-well standard deviations.

Statistic codes are plain strings: ``min``, ``max``, ``sd`` and
``q<percent>`` (for example ``q50`` is the median and ``q1`` the 1st
percentile; ``q01`` and ``q2.5`` parse as well). Summary columns are
labelled ``<basis column>.<statistic>``, for example ``PC1.q50``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    NonNumericCell,
    NotOrthonormal,
    QOutOfRange,
    SdOfSingleton,
    UnknownStatistic,
    WellIdMismatch,
    ZeroVarianceBlock,
    ZeroVarianceColumn,
)
from .datamodel import WellTable, _first_appearance_order, _freeze


def _parse_stat(code: str) -> tuple[str, float | None]:
    """Normalize one statistic code, returning (canonical code, quantile level)."""
    token = code.strip()
    low = token.lower()
    if low in ("min", "max", "sd"):
        return low, None
    if low.startswith("q"):
        try:
            percent = float(low[1:])
        except ValueError:
            raise UnknownStatistic(f"unknown statistic {code!r}") from None
        if not 0.0 < percent < 100.0:
            raise QOutOfRange(f"quantile percent must be in (0, 100), got {code!r}")
        return f"q{percent:g}", percent / 100.0
    raise UnknownStatistic(f"unknown statistic {code!r}")


@dataclass(frozen=True)
class SummaryConfig:
    """Ordered, duplicate-free menu of per-column summary statistics."""

    stats: tuple[str, ...]

    def __post_init__(self):
        if not self.stats:
            raise EmptyInput("summary configuration needs at least one statistic")
        canonical = tuple(_parse_stat(s)[0] for s in self.stats)
        if len(set(canonical)) != len(canonical):
            raise UnknownStatistic(f"duplicate statistics in {self.stats}")
        object.__setattr__(self, "stats", canonical)

    @property
    def n_stats(self) -> int:
        return len(self.stats)

    def quantile_levels(self) -> tuple[tuple[str, float], ...]:
        """The quantile statistics only, as (code, level) pairs in menu order."""
        out = []
        for code in self.stats:
            _, q = _parse_stat(code)
            if q is not None:
                out.append((code, q))
        return tuple(out)

    @property
    def all_quantiles(self) -> bool:
        return len(self.quantile_levels()) == self.n_stats


def parse_summary_spec(text: str) -> SummaryConfig:
    """Parse a comma-separated statistic list such as ``q1,q25,q50,q75,q99``."""
    return SummaryConfig(tuple(t for t in (s.strip() for s in text.split(",")) if t))


FIVE_QUANTILES = SummaryConfig(("q1", "q25", "q50", "q75", "q99"))
SIX_NUMBER_SUMMARY = SummaryConfig(("min", "max", "q25", "q50", "q75", "sd"))


def quantile(values, q: float) -> float:
    """Linearly interpolated sample quantile.

    With the m values sorted ascending and 1-indexed, the estimate sits at
    position h = (m - 1) q + 1 and interpolates between the two bracketing
    order statistics. Monotone in q and always inside [min, max].
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("quantile of empty input")
    if not 0.0 < float(q) < 1.0:
        raise QOutOfRange(f"quantile level must be in (0, 1), got {q}")
    if not np.isfinite(v).all():
        raise NonNumericCell("quantile input contains non-finite values")
    s = np.sort(v)
    return float(_quantiles_from_sorted(s[:, None], np.asarray([float(q)]))[0, 0])


def _quantiles_from_sorted(sorted_cols: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Quantiles per column from pre-sorted columns; returns (n_levels, n_cols)."""
    m = sorted_cols.shape[0]
    pos = (m - 1) * levels
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, m - 1)
    frac = (pos - lo)[:, None]
    return sorted_cols[lo, :] + frac * (sorted_cols[hi, :] - sorted_cols[lo, :])


def _stats_from_sorted(sorted_cols: np.ndarray, config: SummaryConfig) -> np.ndarray:
    """Evaluate the configured statistics on pre-sorted columns.

    Returns shape (n_cols, n_stats): all statistics of column 1 first.
    """
    m, d = sorted_cols.shape
    out = np.empty((len(config.stats), d))
    for j, code in enumerate(config.stats):
        if code == "min":
            out[j] = sorted_cols[0]
        elif code == "max":
            out[j] = sorted_cols[-1]
        elif code == "sd":
            if m < 2:
                raise SdOfSingleton("sample sd needs at least two values")
            out[j] = np.std(sorted_cols, axis=0, ddof=1)
        else:
            _, q = _parse_stat(code)
            out[j] = _quantiles_from_sorted(sorted_cols, np.asarray([q]))[0]
    return out.T


def summary_vector(values, config: SummaryConfig) -> np.ndarray:
    """Apply the statistic menu to a single 1-D sample, in menu order."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("summary of empty input")
    if not np.isfinite(v).all():
        raise NonNumericCell("summary input contains non-finite values")
    return _stats_from_sorted(np.sort(v)[:, None], config)[0]


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal column basis with labels and per-column weights."""

    columns: np.ndarray = field(repr=False)
    column_labels: tuple[str, ...]
    column_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2:
            raise DimensionMismatch("basis columns must form a 2-D array")
        d, k = cols.shape
        labels = tuple(str(c) for c in self.column_labels)
        if len(labels) != k or len(set(labels)) != k:
            raise DimensionMismatch("basis needs one unique label per column")
        gram = cols.T @ cols
        if np.max(np.abs(gram - np.eye(k))) > 1e-10:
            raise NotOrthonormal("basis columns are not orthonormal within 1e-10")
        weights = np.asarray(self.column_weights, dtype=float)
        if weights.shape != (k,):
            raise DimensionMismatch("basis needs one weight per column")
        if (weights < 0).any():
            raise DegenerateData("basis column weights must be nonnegative")
        object.__setattr__(self, "columns", _freeze(cols))
        object.__setattr__(self, "column_labels", labels)
        object.__setattr__(self, "column_weights", _freeze(weights))

    @property
    def dim(self) -> int:
        return self.columns.shape[0]


def _fix_signs(columns: np.ndarray) -> np.ndarray:
    """Sign convention: the largest-magnitude loading of each column is positive.

    Magnitude ties resolve to the lowest row index, which argmax already does.
    """
    out = columns.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _descending_eig(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    return np.maximum(evals[order], 0.0), evecs[:, order]


def pca_basis(X) -> OrthonormalBasis:
    """Full-rank PCA basis of the sample covariance (divisor n - 1).

    Columns are eigenvectors ordered by descending eigenvalue and labelled
    PC1..PCd; eigenvalue ties keep the underlying deterministic
    factorization order. Raises DegenerateData when the covariance is
    entirely zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("pca input must be a 2-D array")
    n, d = X.shape
    if n < 2:
        raise DegenerateData("pca needs at least two rows")
    cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    if np.max(np.abs(cov)) == 0.0:
        raise DegenerateData("pca on a covariance that is entirely zero")
    evals, evecs = _descending_eig(cov)
    labels = tuple(f"PC{i + 1}" for i in range(d))
    return OrthonormalBasis(_fix_signs(evecs), labels, evals)


def pls_basis(X, well_ids, assessment) -> OrthonormalBasis:
    """Rank-supervised basis: one covariance-maximizing column, then PCA.

    The first column is the unit vector proportional to Xc' rc where Xc is
    the column-centered cell matrix and rc the centered per-cell response
    (each cell inherits its well's bio-rank). Among unit vectors it
    maximizes sample covariance with the response. The remaining columns
    are the PCA basis of X projected onto the orthogonal complement,
    labelled PLS1, PC2..PCd.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("pls input must be a 2-D array")
    n, d = X.shape
    well_ids = tuple(well_ids)
    if len(well_ids) != n:
        raise DimensionMismatch("pls needs one well id per row")
    if n < 2:
        raise DegenerateData("pls needs at least two rows")
    known = set(assessment.well_ids)
    missing = {w for w in well_ids if w not in known}
    if missing:
        raise WellIdMismatch(missing, "cells vs assessment in pls")
    rank_of = dict(zip(assessment.well_ids, assessment.ranks))
    r = np.asarray([rank_of[w] for w in well_ids], dtype=float)
    Xc = X - X.mean(axis=0)
    rc = r - r.mean()
    g = Xc.T @ rc
    norm = float(np.linalg.norm(g))
    scale = max(1.0, float(np.linalg.norm(Xc)) * float(np.linalg.norm(rc)))
    if norm <= 1e-12 * scale:
        raise DegenerateData("response carries no covariance with the features")
    v1 = g / norm
    if d == 1:
        weights = np.asarray([float(np.var(X @ v1, ddof=1))])
        return OrthonormalBasis(v1[:, None], ("PLS1",), weights)
    # Orthonormal complement of v1 from a Householder QR of [v1 | I].
    q = np.linalg.qr(np.column_stack([v1, np.eye(d)]))[0]
    comp = q[:, 1:d]
    evals, evecs = _descending_eig(np.atleast_2d(np.cov(X @ comp, rowvar=False, ddof=1)))
    rest = _fix_signs(comp @ evecs)
    columns = np.column_stack([v1, rest])
    labels = ("PLS1", *(f"PC{i + 2}" for i in range(d - 1)))
    weights = np.concatenate([[float(np.var(X @ v1, ddof=1))], evals])
    return OrthonormalBasis(columns, labels, weights)


def project(X, basis: OrthonormalBasis) -> np.ndarray:
    """Coordinates of the rows of X in the basis: Y = X B."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != basis.dim:
        raise DimensionMismatch(
            f"cannot project shape {X.shape} onto a basis of dimension {basis.dim}"
        )
    return X @ basis.columns


def standardize_global(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and scale each column over the pooled rows (divisor n - 1).

    Returns (standardized matrix, column means, column sds).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DimensionMismatch("global standardization needs a 2-D array with >= 2 rows")
    means = X.mean(axis=0)
    sds = np.std(X, axis=0, ddof=1)
    zero = np.flatnonzero(sds == 0.0)
    if zero.size:
        raise ZeroVarianceColumn(f"column {int(zero[0])} has zero variance")
    return (X - means) / sds, means, sds


def standardize_within_well(X, well_ids) -> np.ndarray:
    """Scale each well's rows by that well's per-column sample sd.

    Scaling only, no centering: each well block keeps its location but is
    mapped to unit within-well sd per column.
    """
    X = np.asarray(X, dtype=float)
    well_ids = tuple(well_ids)
    if X.ndim != 2 or X.shape[0] != len(well_ids):
        raise DimensionMismatch("within-well standardization needs one well id per row")
    out = np.empty_like(X)
    for wid in _first_appearance_order(well_ids):
        idx = np.flatnonzero([w == wid for w in well_ids])
        block = X[idx]
        if block.shape[0] < 2:
            raise SdOfSingleton(f"well {wid} has fewer than two cells")
        sds = np.std(block, axis=0, ddof=1)
        zero = np.flatnonzero(sds == 0.0)
        if zero.size:
            raise ZeroVarianceBlock(f"well {wid}, column {int(zero[0])} has zero variance")
        out[idx] = block / sds
    return out


@dataclass(frozen=True)
class SummarizedTable:
    """One summary row per well; columns are ``<basis column>.<statistic>``."""

    well_ids: tuple[str, ...]
    column_labels: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "well_ids", tuple(str(w) for w in self.well_ids))
        labels = tuple(str(c) for c in self.column_labels)
        if len(set(labels)) != len(labels):
            raise DimensionMismatch("summary column labels must be unique")
        object.__setattr__(self, "column_labels", labels)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.well_ids), len(labels)):
            raise DimensionMismatch(
                f"summary values have shape {values.shape}, expected "
                f"({len(self.well_ids)}, {len(labels)})"
            )
        object.__setattr__(self, "values", _freeze(values))


def summarize_wells(Y, well_ids, config: SummaryConfig, column_labels=None) -> SummarizedTable:
    """Reduce cell rows to one summary row per well.

    Wells are ordered by first appearance. For each well, each of the d
    data columns is reduced by the configured statistics, giving d *
    n_stats summary columns with all statistics of column 1 first.
    """
    Y = np.asarray(Y, dtype=float)
    well_ids = tuple(well_ids)
    if Y.ndim != 2 or Y.shape[0] != len(well_ids):
        raise DimensionMismatch("summarize needs one well id per row")
    if Y.shape[0] == 0:
        raise EmptyInput("summarize of an empty matrix")
    d = Y.shape[1]
    if column_labels is None:
        column_labels = tuple(f"f{i + 1}" for i in range(d))
    column_labels = tuple(column_labels)
    if len(column_labels) != d:
        raise DimensionMismatch("need one column label per data column")
    order = _first_appearance_order(well_ids)
    ids_arr = np.asarray(well_ids, dtype=object)
    rows = np.empty((len(order), d * config.n_stats))
    for k, wid in enumerate(order):
        block = Y[np.flatnonzero(ids_arr == wid)]
        rows[k] = _stats_from_sorted(np.sort(block, axis=0), config).ravel()
    labels = tuple(f"{c}.{s}" for c in column_labels for s in config.stats)
    return SummarizedTable(order, labels, rows)


def combine(summarized: SummarizedTable, wells: WellTable | None):
    """Stack summary columns with well-level features, aligned by well id.

    Returns (matrix, column labels) in the summarized table's well order.
    With no well table the summaries pass through unchanged.
    """
    if wells is None:
        return summarized.values.copy(), summarized.column_labels
    diff = set(summarized.well_ids).symmetric_difference(wells.well_ids)
    if diff:
        raise WellIdMismatch(diff, "summaries vs well table")
    aligned = wells.reordered(summarized.well_ids)
    matrix = np.hstack([summarized.values, aligned.values])
    return matrix, summarized.column_labels + aligned.feature_names
