"""Analysis of cell-well structured data.

Wells hold cells; biologists rank and classify the wells. This package
summarizes the cell level into well-level features (quantiles of raw or
rotated coordinates), classifies wells with distance weighted
discrimination, quantifies how much the summarization blurs the
well-to-well pattern, and replicates the whole comparison in seeded
simulation studies.
"""

__version__ = "0.1.0"

from .classify import (
    AUTO,
    LinearModel,
    MulticlassModel,
    SolverReport,
    auto_penalty,
    cells_alone_decide,
    decide_from_score,
    dwd_predict,
    dwd_train,
    load_model,
    loocv_error,
    ovo_predict,
    ovo_train,
    save_model,
    slack_variables,
    well_scores,
)
from .datamodel import (
    CLASS_CODE,
    CLASS_ORDER,
    BioAssessment,
    CellTable,
    Dataset,
    WellTable,
    join,
    load_assessment,
    load_cell_table,
    load_well_table,
    write_assessment,
    write_cell_table,
    write_well_table,
)
from .errors import CellwellError
from .simulate import (
    GroundTruth,
    PipelineConfig,
    PipelineResult,
    PipelineSummary,
    SimConfig,
    StudyReport,
    Subsample,
    ToyResult,
    WellFeaturizer,
    generate_dataset,
    kendall_tau,
    pipeline_predictions,
    random_correlation,
    run_pipeline,
    run_study,
    standard_pipelines,
    toy_example,
    uncertainty_from_sim,
)
from .summarize import (
    FIVE_QUANTILES,
    SIX_NUMBER_SUMMARY,
    OrthonormalBasis,
    SummarizedTable,
    SummaryConfig,
    combine,
    parse_summary_spec,
    pca_basis,
    pls_basis,
    project,
    quantile,
    standardize_global,
    standardize_within_well,
    summarize_wells,
    summary_vector,
)
from .uncertainty import (
    GapResult,
    TrueDirection,
    UncertaintyReport,
    WellDistSpec,
    bio_coefficient,
    closed_form_gap,
    make_report,
    normal_quantile,
    rotate_direction,
    uncertainty_closed_multi,
    uncertainty_closed_single,
    uncertainty_empirical,
    unit_direction,
    write_report,
)

__all__ = [
    "AUTO",
    "BioAssessment",
    "CLASS_CODE",
    "CLASS_ORDER",
    "CellTable",
    "CellwellError",
    "Dataset",
    "FIVE_QUANTILES",
    "GapResult",
    "GroundTruth",
    "LinearModel",
    "MulticlassModel",
    "OrthonormalBasis",
    "PipelineConfig",
    "PipelineResult",
    "PipelineSummary",
    "SIX_NUMBER_SUMMARY",
    "SimConfig",
    "SolverReport",
    "StudyReport",
    "Subsample",
    "SummarizedTable",
    "SummaryConfig",
    "ToyResult",
    "TrueDirection",
    "UncertaintyReport",
    "WellDistSpec",
    "WellFeaturizer",
    "WellTable",
    "auto_penalty",
    "bio_coefficient",
    "cells_alone_decide",
    "closed_form_gap",
    "combine",
    "decide_from_score",
    "dwd_predict",
    "dwd_train",
    "generate_dataset",
    "join",
    "kendall_tau",
    "load_assessment",
    "load_cell_table",
    "load_model",
    "load_well_table",
    "loocv_error",
    "make_report",
    "normal_quantile",
    "ovo_predict",
    "ovo_train",
    "parse_summary_spec",
    "pca_basis",
    "pipeline_predictions",
    "pls_basis",
    "project",
    "quantile",
    "random_correlation",
    "rotate_direction",
    "run_pipeline",
    "run_study",
    "save_model",
    "slack_variables",
    "standard_pipelines",
    "standardize_global",
    "standardize_within_well",
    "summarize_wells",
    "summary_vector",
    "toy_example",
    "uncertainty_closed_multi",
    "uncertainty_closed_single",
    "uncertainty_empirical",
    "uncertainty_from_sim",
    "unit_direction",
    "well_scores",
    "write_assessment",
    "write_cell_table",
    "write_report",
    "write_well_table",
]
