"""Synthetic cell-well studies: generator, pipelines, replication harness.

The generator draws Gaussian wells whose population means sit on a common
line (the bio-rank direction with equal entries), whose per-(well, feature)
variances are uniform draws, and which share one random correlation
structure. Three well-level workflows (wells-alone and the two cell-well
union variants) plus the cells-alone workflow are run against the known
ground truth, reporting the training error rate and the bio-pattern
uncertainty. The study runner replicates everything over disjoint
substreams so serial and parallel execution agree bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import (
    AUTO,
    cells_alone_decide,
    decide_from_score,
    ovo_predict,
    ovo_train,
    well_scores,
)
from .datamodel import (
    BioAssessment,
    CellTable,
    WellTable,
    _freeze,
    format_float,
)
from .errors import (
    CellwellError,
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    InvalidTable,
    NonQuantileStatistic,
    ReplicationFailed,
    SingularGram,
    TooFewWells,
    WellIdMismatch,
)
from .summarize import (
    FIVE_QUANTILES,
    SummaryConfig,
    _descending_eig,
    _fix_signs,
    _quantiles_from_sorted,
    pca_basis,
    pls_basis,
    project,
    standardize_global,
    standardize_within_well,
    summarize_wells,
)
from .uncertainty import TrueDirection, UncertaintyReport, make_report, rotate_direction

GENERATOR_NAME = f"numpy-pcg64 {np.__version__}"

OBJECT_CHOICES = ("cells", "wells", "cwu-pca", "cwu-pls")

_DISPLAY = {
    "cells": "Cells-Alone",
    "wells": "Wells-Alone",
    "cwu-pca": "Cell-Well PCA",
    "cwu-pls": "Cell-Well PLS",
}


@dataclass(frozen=True)
class SimConfig:
    """Generator settings for the synthetic cell-well protocol."""

    n_wells: int = 50
    cells_min: int = 50
    cells_max: int = 300
    dim: int = 10
    var_lo: float = 20.0
    var_hi: float = 500.0
    mean_step: float = 0.005
    class_cuts: tuple[int, int] = (17, 33)
    global_standardize: bool = True
    # The neighbor-mean gap of the protocol is a per-coordinate step by
    # default; flip this to read it as the gap along the direction itself.
    step_along_direction: bool = False

    def __post_init__(self):
        if self.n_wells < 3:
            raise TooFewWells("simulation needs at least three wells")
        if not 2 <= self.cells_min <= self.cells_max:
            raise CellwellError("need 2 <= cells_min <= cells_max")
        if self.dim < 1:
            raise DimensionMismatch("need at least one feature")
        if not 0 < self.var_lo < self.var_hi:
            raise CellwellError("need 0 < var_lo < var_hi")
        if self.mean_step <= 0:
            raise CellwellError("mean_step must be positive")
        cuts = tuple(int(c) for c in self.class_cuts)
        if len(cuts) != 2 or not 1 <= cuts[0] < cuts[1] < self.n_wells:
            raise CellwellError(f"class cuts must satisfy 1 <= a < b < n_wells, got {cuts}")
        object.__setattr__(self, "class_cuts", cuts)


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows: per-well means, direction, assessment.

    Mean rows follow assessment.well_ids; projections of the means on the
    direction must be strictly increasing in bio-rank.
    """

    well_means: np.ndarray = field(repr=False)
    direction: TrueDirection
    assessment: BioAssessment

    def __post_init__(self):
        means = np.asarray(self.well_means, dtype=float)
        if means.shape != (self.assessment.n_wells, self.direction.dim):
            raise DimensionMismatch(
                f"well means have shape {means.shape}, expected "
                f"({self.assessment.n_wells}, {self.direction.dim})"
            )
        proj = means @ self.direction.values
        by_rank = proj[np.argsort(self.assessment.ranks)]
        if not (np.diff(by_rank) > 0).all():
            raise InvalidTable("well means are not ordered along the direction by rank")
        object.__setattr__(self, "well_means", _freeze(means))

    @property
    def well_ids(self) -> tuple[str, ...]:
        return self.assessment.well_ids

    def means_for(self, order) -> np.ndarray:
        pos = {wid: i for i, wid in enumerate(self.assessment.well_ids)}
        return self.well_means[[pos[wid] for wid in order]]


def random_correlation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random correlation matrix D^{-1/2} (A A') D^{-1/2}, A standard normal.

    Degenerate draws (a numerically singular Gram matrix) are retried with
    the next draws from the same stream, at most five times.
    """
    if d < 1:
        raise DimensionMismatch("correlation dimension must be >= 1")
    for _ in range(5):
        a = rng.standard_normal((d, d))
        gram = a @ a.T
        diag = np.diag(gram)
        if (diag <= 0).any():
            continue
        scale = 1.0 / np.sqrt(diag)
        corr = gram * scale[:, None] * scale[None, :]
        if np.linalg.eigvalsh(corr).min() >= -1e-10 and np.isfinite(corr).all():
            return corr
    raise SingularGram("failed to draw a usable correlation matrix in five attempts")


def _corr_factor(corr: np.ndarray) -> np.ndarray:
    """A matrix L with L L' = corr; Cholesky, eigen square root as fallback."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(corr)
        return evecs * np.sqrt(np.clip(evals, 0.0, None))


def _well_label(k: int, n_wells: int) -> str:
    return f"W{k:0{max(2, len(str(n_wells)))}d}"


def generate_dataset(config: SimConfig, seed) -> tuple[CellTable, GroundTruth]:
    """Draw one synthetic dataset and its ground truth.

    Substream layout under the root seed: correlation, cell counts,
    per-(well, feature) variances, then one stream per well, so wells are
    simulated independently and the layout is stable under parallelism.
    Well k (ids W01, W02, ...) has bio-rank k; classes cut the ranks at
    class_cuts. With global_standardize the pooled per-feature affine
    transform is applied to the cells and mapped through the means and the
    direction, keeping the ground truth in the emitted coordinates.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    corr_ss, count_ss, var_ss, *well_ss = root.spawn(3 + config.n_wells)
    corr = random_correlation(config.dim, np.random.Generator(np.random.PCG64(corr_ss)))
    corr_l = _corr_factor(corr)
    counts = np.random.Generator(np.random.PCG64(count_ss)).integers(
        config.cells_min, config.cells_max + 1, size=config.n_wells
    )
    variances = np.random.Generator(np.random.PCG64(var_ss)).uniform(
        config.var_lo, config.var_hi, size=(config.n_wells, config.dim)
    )

    step = config.mean_step
    if config.step_along_direction:
        step = config.mean_step / math.sqrt(config.dim)
    ranks = np.arange(1, config.n_wells + 1)
    means = step * ranks[:, None] * np.ones(config.dim)
    direction = np.full(config.dim, 1.0 / math.sqrt(config.dim))

    well_ids = tuple(_well_label(k, config.n_wells) for k in ranks)
    blocks = []
    row_ids = []
    for w in range(config.n_wells):
        rng = np.random.Generator(np.random.PCG64(well_ss[w]))
        z = rng.standard_normal((int(counts[w]), config.dim))
        cells = means[w] + z @ (np.sqrt(variances[w])[:, None] * corr_l).T
        blocks.append(cells)
        row_ids.extend([well_ids[w]] * int(counts[w]))
    X = np.vstack(blocks)

    if config.global_standardize:
        X, col_means, col_sds = standardize_global(X)
        means = (means - col_means) / col_sds
        direction = direction / col_sds
        direction = direction / np.linalg.norm(direction)

    cut1, cut2 = config.class_cuts
    classes = tuple(
        "Low" if k <= cut1 else ("Medium" if k <= cut2 else "High") for k in ranks
    )
    assessment = BioAssessment(well_ids, tuple(int(k) for k in ranks), classes)
    feature_names = tuple(f"f{i + 1}" for i in range(config.dim))
    table = CellTable(tuple(row_ids), feature_names, X)
    truth = GroundTruth(means, TrueDirection(direction), assessment)
    return table, truth


@dataclass(frozen=True)
class Subsample:
    """Cells-alone training subsample: s wells, k cells each, R repeats.

    Each repeat trains on its subsample and scores every cell; the final
    per-well decision averages the repeat scores. The seed makes the
    subsampling deterministic and independent of the data seed.
    """

    wells: int
    cells: int
    reps: int
    seed: int = 0

    def __post_init__(self):
        if self.wells < 3 or self.cells < 1 or self.reps < 1:
            raise CellwellError("subsample needs wells >= 3, cells >= 1, reps >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    """One workflow: data objects, standardization, summaries, classifier."""

    objects: str
    within_well_std: bool = False
    summary: SummaryConfig = FIVE_QUANTILES
    dwd_c: float | str = AUTO
    subsample: Subsample | None = None

    def __post_init__(self):
        if self.objects not in OBJECT_CHOICES:
            raise CellwellError(
                f"unknown data objects {self.objects!r}; expected one of {OBJECT_CHOICES}"
            )
        if self.subsample is not None and self.objects != "cells":
            raise CellwellError("subsampling applies to the cells-alone workflow only")
        if self.dwd_c != AUTO and not (
            isinstance(self.dwd_c, (int, float)) and float(self.dwd_c) > 0
        ):
            raise CellwellError("dwd_c must be 'auto' or a positive number")

    @property
    def label(self) -> str:
        return self.objects + ("-std" if self.within_well_std else "")

    @property
    def display_name(self) -> str:
        return _DISPLAY[self.objects] + (" (std)" if self.within_well_std else "")


def standard_pipelines() -> tuple[PipelineConfig, ...]:
    """The four benchmark pipelines of the replication study."""
    return (
        PipelineConfig("wells"),
        PipelineConfig("wells", within_well_std=True),
        PipelineConfig("cwu-pca", within_well_std=True),
        PipelineConfig("cwu-pls", within_well_std=True),
    )


class WellFeaturizer:
    """Fits a well-level pipeline's feature map and applies it to cell tables.

    fit() learns everything data-dependent (the basis for the cell-well
    union workflows); features() projects, optionally standardizes within
    wells, summarizes, and appends well-level features. The well table may
    cover a superset of the cells' wells, so one table serves every
    cross-validation fold.
    """

    def __init__(self, pipeline: PipelineConfig):
        if pipeline.objects == "cells":
            raise CellwellError("cells-alone has no well-level feature map")
        self.pipeline = pipeline
        self.basis = None

    def fit(self, cells: CellTable, assessment: BioAssessment | None = None):
        if self.pipeline.objects == "cwu-pca":
            self.basis = pca_basis(cells.values)
        elif self.pipeline.objects == "cwu-pls":
            if assessment is None:
                raise EmptyInput("the rank-supervised basis needs a bio-assessment")
            self.basis = pls_basis(cells.values, cells.well_ids, assessment)
        return self

    def scores(self, cells: CellTable) -> tuple[np.ndarray, tuple[str, ...]]:
        """Cell rows in the pipeline's coordinates, before any standardization."""
        if self.pipeline.objects == "wells":
            return cells.values.copy(), cells.feature_names
        if self.basis is None:
            raise CellwellError("featurizer used before fit()")
        return project(cells.values, self.basis), self.basis.column_labels

    def summarized(self, cells: CellTable):
        scores, labels = self.scores(cells)
        if self.pipeline.within_well_std:
            scores = standardize_within_well(scores, cells.well_ids)
        return summarize_wells(scores, cells.well_ids, self.pipeline.summary, labels)

    def features(self, cells: CellTable, wells: WellTable | None = None) -> np.ndarray:
        table = self.summarized(cells)
        if wells is None:
            return table.values.copy()
        missing = set(table.well_ids) - set(wells.well_ids)
        if missing:
            raise WellIdMismatch(missing, "cells vs well table")
        aligned = wells.reordered(table.well_ids)
        return np.hstack([table.values, aligned.values])


@dataclass(frozen=True)
class PipelineResult:
    """Training error and bio-pattern uncertainty of one workflow run."""

    pipeline: PipelineConfig
    error_rate: float
    eta_closed: float
    eta_empirical: float
    report: UncertaintyReport | None = None


def _quantile_summaries(scores: np.ndarray, well_ids, order, levels) -> np.ndarray:
    """Per-well quantile tensor (wells x columns x levels) from raw scores."""
    ids = np.asarray(well_ids, dtype=object)
    out = np.empty((len(order), scores.shape[1], len(levels)))
    for k, wid in enumerate(order):
        block = np.sort(scores[np.flatnonzero(ids == wid)], axis=0)
        out[k] = _quantiles_from_sorted(block, levels).T
    return out


def _pipeline_uncertainty(
    featurizer: WellFeaturizer,
    cells: CellTable,
    truth: GroundTruth,
    alpha_source: str,
) -> UncertaintyReport | None:
    """Uncertainty of the workflow's summarization, in its own coordinates.

    Computed on the scores before any within-well standardization: the
    within-well step rescales every coordinate to unit sd, which makes the
    closed form identically zero and says nothing about the summaries the
    unstandardized workflow would produce. The quantile statistics of the
    summary menu enter the closed form; a menu without quantiles yields no
    report.
    """
    pipeline = featurizer.pipeline
    quantiles = pipeline.summary.quantile_levels()
    if not quantiles:
        return None
    if alpha_source == "truth":
        alpha = truth.direction
    elif alpha_source == "estimated":
        fitted = pls_basis(cells.values, cells.well_ids, truth.assessment)
        alpha = TrueDirection(fitted.columns[:, 0])
    else:
        raise CellwellError(f"unknown alpha source {alpha_source!r}")
    scores, _ = featurizer.scores(cells)
    if featurizer.basis is not None:
        alpha = rotate_direction(featurizer.basis, alpha)
    order = cells.well_order
    ids = np.asarray(cells.well_ids, dtype=object)
    sd = np.vstack(
        [np.std(scores[np.flatnonzero(ids == wid)], axis=0, ddof=1) for wid in order]
    )
    levels = np.asarray([q for _, q in quantiles])
    summaries = _quantile_summaries(scores, cells.well_ids, order, levels)
    mu = truth.means_for(order)
    if featurizer.basis is not None:
        mu = mu @ featurizer.basis.columns
    qconfig = SummaryConfig(tuple(code for code, _ in quantiles))
    return make_report(sd, order, alpha, qconfig, summaries=summaries, well_means=mu)


def cells_alone_predictions(
    cells: CellTable, assessment: BioAssessment, pipeline: PipelineConfig
) -> dict[str, str]:
    """Per-cell classifiers, wells decided by their mean predicted class.

    With a subsample each repeat trains on its drawn wells and cells
    (redrawing up to 100 times until all three classes are covered),
    scores every cell, and the per-well repeat scores are averaged before
    the final rounding decision.
    """
    X = cells.values
    if pipeline.within_well_std:
        X = standardize_within_well(X, cells.well_ids)
    ids = np.asarray(cells.well_ids, dtype=object)
    cell_classes = np.asarray([assessment.class_of(w) for w in cells.well_ids], dtype=object)
    order = cells.well_order
    sub = pipeline.subsample
    if sub is None:
        model = ovo_train(X, tuple(cell_classes), pipeline.dwd_c)
        return cells_alone_decide(ovo_predict(model, X), cells.well_ids)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(sub.seed)))
    if sub.wells > len(order):
        raise TooFewWells(f"subsample asks for {sub.wells} of {len(order)} wells")
    totals = dict.fromkeys(order, 0.0)
    for _ in range(sub.reps):
        chosen = None
        for _attempt in range(100):
            pick = rng.choice(len(order), size=sub.wells, replace=False)
            pick_ids = [order[i] for i in sorted(pick)]
            if len(set(assessment.classes_for(pick_ids))) == 3:
                chosen = pick_ids
                break
        if chosen is None:
            raise DegenerateData("subsample could not cover all three classes")
        rows = []
        for wid in chosen:
            idx = np.flatnonzero(ids == wid)
            take = min(sub.cells, idx.size)
            rows.extend(rng.choice(idx, size=take, replace=False))
        rows = np.asarray(rows)
        model = ovo_train(X[rows], tuple(cell_classes[rows]), pipeline.dwd_c)
        scores = well_scores(ovo_predict(model, X), cells.well_ids)
        for wid in order:
            totals[wid] += scores[wid]
    return {wid: decide_from_score(totals[wid] / sub.reps) for wid in order}


def pipeline_predictions(
    cells: CellTable,
    assessment: BioAssessment,
    pipeline: PipelineConfig,
    wells: WellTable | None = None,
) -> dict[str, str]:
    """Fit a workflow on the given data and predict its own wells' classes."""
    if pipeline.objects == "cells":
        return cells_alone_predictions(cells, assessment, pipeline)
    featurizer = WellFeaturizer(pipeline).fit(cells, assessment)
    feats = featurizer.features(cells, wells)
    order = cells.well_order
    model = ovo_train(feats, assessment.classes_for(order), pipeline.dwd_c)
    return dict(zip(order, ovo_predict(model, feats)))


def run_pipeline(
    cells: CellTable,
    truth: GroundTruth,
    pipeline: PipelineConfig,
    wells: WellTable | None = None,
    alpha_source: str = "truth",
) -> PipelineResult:
    """Run one workflow against ground truth: training error plus uncertainty.

    The error rate is the fraction of wells whose predicted class differs
    from the true class when the fitted pipeline is applied back to its
    training data. Uncertainty uses the true direction rotated into the
    pipeline's coordinates (or the fitted rank-supervised direction with
    alpha_source="estimated") and sums the closed form over the summary
    menu's quantile statistics.
    """
    predicted = pipeline_predictions(cells, truth.assessment, pipeline, wells)
    order = cells.well_order
    error = sum(predicted[w] != truth.assessment.class_of(w) for w in order) / len(order)
    if pipeline.objects == "cells":
        return PipelineResult(pipeline, error, math.nan, math.nan, None)
    featurizer = WellFeaturizer(pipeline).fit(cells, truth.assessment)
    report = _pipeline_uncertainty(featurizer, cells, truth, alpha_source)
    if report is None:
        return PipelineResult(pipeline, error, math.nan, math.nan, None)
    return PipelineResult(
        pipeline, error, report.uncertainty_closed, report.uncertainty_empirical, report
    )


def uncertainty_from_sim(
    config: SimConfig,
    pipeline: PipelineConfig,
    seed,
    alpha_source: str = "truth",
) -> UncertaintyReport:
    """Generate one dataset and report the workflow's uncertainty only."""
    if pipeline.objects == "cells":
        raise CellwellError("cells-alone performs no summarization to quantify")
    cells, truth = generate_dataset(config, seed)
    featurizer = WellFeaturizer(pipeline).fit(cells, truth.assessment)
    report = _pipeline_uncertainty(featurizer, cells, truth, alpha_source)
    if report is None:
        raise NonQuantileStatistic("the summary menu contains no quantile statistics")
    return report


_METRICS = ("error_rate", "eta_closed", "eta_empirical")


@dataclass(frozen=True)
class PipelineSummary:
    """Replication means and 95% half-widths for one pipeline."""

    pipeline: PipelineConfig
    means: tuple[float, float, float]
    half_widths: tuple[float, float, float]

    def mean(self, metric: str) -> float:
        return self.means[_METRICS.index(metric)]

    def half_width(self, metric: str) -> float:
        return self.half_widths[_METRICS.index(metric)]


@dataclass(frozen=True)
class StudyReport:
    """Aggregate of a replicated simulation study."""

    pipelines: tuple[PipelineSummary, ...]
    n_reps: int
    seed: int
    generator: str = GENERATOR_NAME

    def csv_rows(self) -> list[tuple[str, str, str, str, str, str]]:
        rows = []
        for summary in self.pipelines:
            for j, metric in enumerate(_METRICS):
                rows.append(
                    (
                        summary.pipeline.label,
                        metric,
                        format_float(summary.means[j]),
                        format_float(summary.half_widths[j]),
                        str(self.n_reps),
                        str(self.seed),
                    )
                )
        return rows

    def to_text(self) -> str:
        """Aligned two-row table: uncertainty and error rate per pipeline."""

        def cell(summary: PipelineSummary, metric: str) -> str:
            m = summary.mean(metric)
            if math.isnan(m):
                return "--"
            return f"{m:.3f} +/- {summary.half_width(metric):.3f}"

        headers = ["Data Objects"] + [s.pipeline.display_name for s in self.pipelines]
        rows = [
            ["Uncertainty"] + [cell(s, "eta_closed") for s in self.pipelines],
            ["DWD Error Rate"] + [cell(s, "error_rate") for s in self.pipelines],
        ]
        widths = [
            max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))
        ]
        lines = [
            "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
            "  ".join("-" * w for w in widths),
        ]
        for r in rows:
            lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(r)).rstrip())
        lines.append(f"replications: {self.n_reps}   seed: {self.seed}   generator: {self.generator}")
        return "\n".join(lines) + "\n"


def _replicate(config: SimConfig, pipelines, seed: int, rep: int) -> list[tuple[float, float, float]]:
    """One replication: generate with the rep's substream, run every pipeline."""
    stream = np.random.SeedSequence(entropy=seed, spawn_key=(rep,))
    cells, truth = generate_dataset(config, stream)
    out = []
    for pipeline in pipelines:
        result = run_pipeline(cells, truth, pipeline)
        out.append((result.error_rate, result.eta_closed, result.eta_empirical))
    return out


def run_study(
    config: SimConfig,
    pipelines,
    n_reps: int,
    seed: int,
    threads: int | None = None,
) -> StudyReport:
    """Replicate the pipeline comparison; aggregate means and 95% half-widths.

    Replication r draws from the substream (seed, r), so the report does
    not depend on execution order or on the worker count. A replication
    that raises aborts the study, naming the failing substream.
    """
    pipelines = tuple(pipelines)
    if n_reps < 2:
        raise CellwellError("a study needs at least two replications")
    if not pipelines:
        raise EmptyInput("a study needs at least one pipeline")
    results: list[list[tuple[float, float, float]] | None] = [None] * n_reps
    if threads is not None and threads < 1:
        raise CellwellError("threads must be >= 1")
    if threads == 1:
        for r in range(n_reps):
            try:
                results[r] = _replicate(config, pipelines, seed, r)
            except Exception as exc:
                raise ReplicationFailed(
                    f"replication {r} of seed {seed} failed: {exc}"
                ) from exc
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_replicate, config, pipelines, seed, r) for r in range(n_reps)
            ]
            for r, fut in enumerate(futures):
                try:
                    results[r] = fut.result()
                except Exception as exc:
                    raise ReplicationFailed(
                        f"replication {r} of seed {seed} failed: {exc}"
                    ) from exc
    summaries = []
    for p, pipeline in enumerate(pipelines):
        values = np.asarray([results[r][p] for r in range(n_reps)])
        means = values.mean(axis=0)
        halves = 1.96 * np.std(values, axis=0, ddof=1) / math.sqrt(n_reps)
        summaries.append(
            PipelineSummary(
                pipeline,
                tuple(float(v) for v in means),
                tuple(float(v) for v in halves),
            )
        )
    return StudyReport(tuple(summaries), n_reps, seed)


def kendall_tau(order_a, order_b) -> float:
    """Kendall rank correlation between two orderings of the same items."""
    a = list(order_a)
    b = list(order_b)
    if sorted(a) != sorted(b) or len(a) < 2:
        raise DimensionMismatch("orderings must arrange the same >= 2 items")
    pos = {item: i for i, item in enumerate(b)}
    seq = [pos[item] for item in a]
    n = len(seq)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] < seq[j]:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


@dataclass(frozen=True)
class ToyResult:
    """Orderings and concordances of the two-dimensional maxima example."""

    true_order: tuple[str, ...]
    axis_max_order: tuple[str, ...]
    pc_max_order: tuple[str, ...]
    tau_axis: float
    tau_pc: float
    well_means: np.ndarray = field(repr=False)
    axis_points: np.ndarray = field(repr=False)
    pc_points: np.ndarray = field(repr=False)


def toy_example(
    seed,
    n_wells: int = 5,
    shared_cov: bool = False,
    mean_gap: float = 3.5,
    ellipse_scale: float = 1.0,
) -> ToyResult:
    """Two-dimensional Gaussian wells summarized by population maxima.

    Each well is a 2-D Gaussian whose mean advances along a fixed oblique
    direction; its covariance ellipse (the two-sigma level set) stands in
    for the cell cloud. The axis summary takes the ellipse's extreme
    values along the raw x1/x2 axes; the PC summary takes them along the
    principal axes of the pooled covariance (within-well average plus the
    spread of the means) and maps the point back to raw coordinates.
    With shared_cov every well reuses one ellipse, so both summaries are
    the means plus a constant offset and both recover the true order
    exactly. Heterogeneous ellipses (random aspect/orientation) shift the
    two point sets differently; orderings come from projecting each point
    set on the true direction. ellipse_scale shrinks or inflates every
    ellipse, with 0 giving the noiseless point limit.
    """
    if n_wells < 3:
        raise TooFewWells("toy example needs at least three wells")
    if ellipse_scale < 0.0:
        raise DegenerateData("ellipse_scale must be nonnegative")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(root))
    angle = math.radians(30.0)
    u = np.asarray([math.cos(angle), math.sin(angle)])
    ids = tuple(_well_label(k, n_wells) for k in range(1, n_wells + 1))
    means = mean_gap * np.arange(1, n_wells + 1)[:, None] * u
    covs = []
    for _ in range(n_wells):
        if shared_cov:
            along, across, theta = 2.0, 1.0, angle
        else:
            along = rng.uniform(1.6, 2.4)
            across = rng.uniform(0.2, 4.0)
            theta = angle + rng.uniform(-0.5, 0.5)
        rot = np.asarray(
            [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
        )
        scale = ellipse_scale * np.asarray([along, across])
        covs.append((rot * scale**2) @ rot.T)

    radius = 2.0
    axis_points = means + radius * np.sqrt(
        np.vstack([np.diag(cov) for cov in covs])
    )
    # Principal axes of the pooled population: average within-well
    # covariance plus the covariance of the means.
    pooled = np.mean(covs, axis=0) + np.cov(means, rowvar=False, ddof=1)
    _, basis = _descending_eig(pooled)
    basis = _fix_signs(basis)
    pc_points = (
        means @ basis
        + radius
        * np.sqrt(np.vstack([np.diag(basis.T @ cov @ basis) for cov in covs]))
    ) @ basis.T

    def ordering(points: np.ndarray) -> tuple[str, ...]:
        proj = points @ u
        return tuple(ids[i] for i in np.argsort(proj, kind="stable"))

    true_order = ids
    axis_order = ordering(axis_points)
    pc_order = ordering(pc_points)
    return ToyResult(
        true_order,
        axis_order,
        pc_order,
        kendall_tau(axis_order, true_order),
        kendall_tau(pc_order, true_order),
        means,
        axis_points,
        pc_points,
    )
