"""Command-line front end: simulation studies, CSV analysis, diagnostics.

Four subcommands: ``simulate`` replicates the pipeline-comparison study,
``analyze`` classifies wells from CSV inputs, ``uncertainty`` emits the
bio-pattern uncertainty report (from a simulation or from a supplied sd
matrix), and ``toy`` runs the two-dimensional maxima demonstration.

Every command writes a ``manifest.txt`` of resolved settings; because a
manifest is also a valid ``--config`` file, re-running the same command
with ``--config <old manifest> --out <new dir>`` reproduces the other
output files byte for byte. Flags always take precedence over config
entries. Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .classify import AUTO, loocv_error
from .datamodel import format_float, join, load_assessment, load_cell_table, load_well_table
from .errors import CellwellError, NonQuantileStatistic
from .simulate import (
    GENERATOR_NAME,
    OBJECT_CHOICES,
    PipelineConfig,
    SimConfig,
    Subsample,
    pipeline_predictions,
    run_study,
    toy_example,
    uncertainty_from_sim,
)
from .summarize import SummaryConfig, _parse_stat, parse_summary_spec
from .uncertainty import make_report, unit_direction, write_report


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 2."""


REQUIRED = object()


@dataclass(frozen=True)
class Flag:
    """One command-line option: raw string in, converted value out."""

    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    switch: bool = False
    in_manifest: bool = True


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _cuts(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated integers, got {text!r}")
    return int(parts[0]), int(parts[1])


def _dwd_c(text: str) -> float | str:
    if text.strip().lower() == AUTO:
        return AUTO
    value = float(text)
    if value <= 0:
        raise ValueError("penalty must be positive")
    return value


def _summary(text: str) -> str:
    return ",".join(parse_summary_spec(text).stats)


def _pipeline_list(text: str) -> str:
    slugs = [s.strip() for s in text.split(",") if s.strip()]
    if not slugs:
        raise ValueError("empty pipeline list")
    for slug in slugs:
        _split_slug(slug)
    return ",".join(slugs)


def _split_slug(slug: str) -> tuple[str, bool]:
    base, std = slug, False
    if slug.endswith("-std"):
        base, std = slug[:-4], True
    if base not in OBJECT_CHOICES:
        raise ValueError(f"unknown pipeline {slug!r}")
    return base, std


def _one_pipeline(text: str) -> str:
    _split_slug(text.strip())
    return text.strip()


def _objects(text: str) -> str:
    if text not in OBJECT_CHOICES:
        raise ValueError(f"expected one of {', '.join(OBJECT_CHOICES)}, got {text!r}")
    return text


def _subsample(text: str) -> Subsample:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 3:
        return Subsample(*parts)
    if len(parts) == 4:
        return Subsample(parts[0], parts[1], parts[2], parts[3])
    raise ValueError(f"expected wells,cells,reps[,seed], got {text!r}")


def _alpha_source(text: str) -> str:
    if text not in ("truth", "estimated"):
        raise ValueError(f"expected truth or estimated, got {text!r}")
    return text


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, Subsample):
        return f"{value.wells},{value.cells},{value.reps},{value.seed}"
    return str(value)


_COMMON = [
    Flag("out", str, ".", "output directory (created if missing)", in_manifest=False),
    Flag("config", str, None, "key = value file of flag defaults", in_manifest=False),
]

_SIM_FIELDS = [
    Flag("wells", _int, 50, "number of wells"),
    Flag("cells-min", _int, 50, "minimum cells per well"),
    Flag("cells-max", _int, 300, "maximum cells per well"),
    Flag("dim", _int, 10, "cell features"),
    Flag("var-lo", _float, 20.0, "lower bound of per-well feature variances"),
    Flag("var-hi", _float, 500.0, "upper bound of per-well feature variances"),
    Flag("step", _float, 0.005, "mean gap between rank-adjacent wells"),
    Flag("cuts", _cuts, (17, 33), "rank thresholds a,b for the three classes"),
    Flag("step-along", _bool, False, "read the step as the gap along the direction", switch=True),
    Flag("no-global-std", _bool, False, "skip pooled per-feature standardization", switch=True),
]

_COMMANDS: dict[str, list[Flag]] = {
    "simulate": [
        Flag("reps", _int, 500, "replications"),
        Flag("seed", _int, REQUIRED, "root seed of the study"),
        Flag(
            "pipelines",
            _pipeline_list,
            "wells,wells-std,cwu-pca-std,cwu-pls-std",
            "comma list of pipelines (objects with optional -std suffix)",
        ),
        Flag("summary", _summary, "q1,q25,q50,q75,q99", "statistic menu for every pipeline"),
        Flag("dwd-c", _dwd_c, AUTO, "DWD penalty (auto or a positive number)"),
        Flag("threads", _int, None, "worker processes (default: machine parallelism)"),
        *_SIM_FIELDS,
        *_COMMON,
    ],
    "analyze": [
        Flag("cells", str, REQUIRED, "cell-level CSV (well_id + feature columns)"),
        Flag("assess", str, REQUIRED, "bio-assessment CSV (well_id,rank,class)"),
        Flag("wells", str, None, "optional well-level feature CSV"),
        Flag("objects", _objects, REQUIRED, "data objects: cells|wells|cwu-pca|cwu-pls"),
        Flag("summary", _summary, "q1,q25,q50,q75,q99", "statistic menu"),
        Flag("std-within", _bool, False, "standardize within each well", switch=True),
        Flag("loocv", _bool, False, "append the leave-one-well-out error", switch=True),
        Flag("dwd-c", _dwd_c, AUTO, "DWD penalty (auto or a positive number)"),
        Flag("subsample", _subsample, None, "cells-alone subsample wells,cells,reps[,seed]"),
        *_COMMON,
    ],
    "uncertainty": [
        Flag("from-sim", _bool, False, "generate a dataset and report its uncertainty", switch=True),
        Flag("seed", _int, None, "seed (required with --from-sim)"),
        Flag("pipeline", _one_pipeline, "wells", "pipeline slug for --from-sim"),
        Flag("summary", _summary, "q1,q25,q50,q75,q99", "statistic menu for --from-sim"),
        Flag("alpha-source", _alpha_source, "truth", "direction: truth or estimated"),
        Flag("sd-matrix", str, None, "CSV of within-well sds (well_id + columns)"),
        Flag("alpha", str, None, "direction file, one coordinate per line (normalized)"),
        Flag("q", _summary, None, "quantile statistics, e.g. q25,q75"),
        *_SIM_FIELDS,
        *_COMMON,
    ],
    "toy": [
        Flag("seed", _int, REQUIRED, "seed"),
        Flag("wells", _int, 5, "number of wells"),
        Flag("reps", _int, 1, "independent repetitions to average"),
        Flag("shared-cov", _bool, False, "give every well the same covariance", switch=True),
        *_COMMON,
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellwell",
        description="Cell-well data analysis: simulation, classification, uncertainty.",
    )
    parser.add_argument("--version", action="version", version=f"cellwell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, flags in _COMMANDS.items():
        p = sub.add_parser(command)
        for f in flags:
            if f.switch:
                p.add_argument(f"--{f.name}", action="store_const", const=True, help=f.help)
            else:
                p.add_argument(f"--{f.name}", type=str, default=None, help=f.help)
    return parser


def _parse_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = stripped.split("=", 1)
        entries[key.strip().replace("_", "-")] = value.strip()
    return entries


def _resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    flags = _COMMANDS[command]
    config: dict[str, str] = {}
    if args.config is not None:
        config = _parse_config_file(args.config)
    resolved: dict[str, Any] = {}
    for f in flags:
        raw = getattr(args, f.name.replace("-", "_"))
        from_config = config.pop(f.name, None)
        if raw is None:
            raw = from_config
        if raw is None:
            if f.default is REQUIRED:
                raise UsageError(f"--{f.name} is required")
            resolved[f.name] = f.default
            continue
        if isinstance(raw, str):
            try:
                resolved[f.name] = f.parse(raw)
            except (ValueError, CellwellError) as exc:
                raise UsageError(f"--{f.name}: {exc}") from exc
        else:
            resolved[f.name] = raw
    if config:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(config))}")
    return resolved


def _out_dir(resolved: dict[str, Any]) -> Path:
    out = Path(resolved["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, resolved: dict[str, Any]) -> None:
    lines = [
        f"# command = {command}",
        f"# artifact = cellwell {__version__}",
        f"# generator = {GENERATOR_NAME}",
        f"# written = {datetime.now(timezone.utc).isoformat()}",
    ]
    for f in _COMMANDS[command]:
        if not f.in_manifest or resolved[f.name] is None:
            continue
        lines.append(f"{f.name} = {_fmt(resolved[f.name])}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sim_config(resolved: dict[str, Any]) -> SimConfig:
    try:
        return SimConfig(
            n_wells=resolved["wells"],
            cells_min=resolved["cells-min"],
            cells_max=resolved["cells-max"],
            dim=resolved["dim"],
            var_lo=resolved["var-lo"],
            var_hi=resolved["var-hi"],
            mean_step=resolved["step"],
            class_cuts=resolved["cuts"],
            global_standardize=not resolved["no-global-std"],
            step_along_direction=resolved["step-along"],
        )
    except CellwellError as exc:
        raise UsageError(str(exc)) from exc


def _pipeline(slug: str, summary: SummaryConfig, dwd_c, subsample=None) -> PipelineConfig:
    base, std = _split_slug(slug)
    try:
        return PipelineConfig(base, std, summary, dwd_c, subsample)
    except CellwellError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_simulate(resolved: dict[str, Any]) -> int:
    if resolved["reps"] < 2:
        raise UsageError("--reps must be at least 2")
    threads = resolved["threads"]
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    summary = parse_summary_spec(resolved["summary"])
    pipelines = [
        _pipeline(slug, summary, resolved["dwd-c"])
        for slug in resolved["pipelines"].split(",")
    ]
    report = run_study(_sim_config(resolved), pipelines, resolved["reps"], resolved["seed"], threads)
    out = _out_dir(resolved)
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    with open(out / "report.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pipeline", "metric", "mean", "ci_half", "n_reps", "seed"])
        writer.writerows(report.csv_rows())
    _write_manifest(out, "simulate", resolved)
    sys.stdout.write(report.to_text())
    return 0


def _cmd_analyze(resolved: dict[str, Any]) -> int:
    if resolved["objects"] == "cells" and resolved["loocv"]:
        raise UsageError("leave-one-well-out is defined over well-level pipelines")
    pipeline = _pipeline(
        resolved["objects"] + ("-std" if resolved["std-within"] else ""),
        parse_summary_spec(resolved["summary"]),
        resolved["dwd-c"],
        resolved["subsample"],
    )
    cells = load_cell_table(resolved["cells"])
    assessment = load_assessment(resolved["assess"])
    wells = load_well_table(resolved["wells"]) if resolved["wells"] else None
    dataset = join(cells, assessment, wells)
    predicted = pipeline_predictions(dataset.cells, dataset.assessment, pipeline, dataset.wells)
    order = dataset.well_order
    error = sum(predicted[w] != dataset.assessment.class_of(w) for w in order) / len(order)
    cv = loocv_error(dataset, pipeline) if resolved["loocv"] else None
    out = _out_dir(resolved)
    with open(out / "predictions.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["well_id", "true_class", "predicted_class"])
        for wid in order:
            writer.writerow([wid, dataset.assessment.class_of(wid), predicted[wid]])
        fh.write(f"#error_rate = {format_float(error)}\n")
        if cv is not None:
            fh.write(f"#loocv_error = {format_float(cv)}\n")
    _write_manifest(out, "analyze", resolved)
    sys.stdout.write(f"error_rate = {format_float(error)}\n")
    if cv is not None:
        sys.stdout.write(f"loocv_error = {format_float(cv)}\n")
    return 0


def _load_direction(path: str, dim: int):
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            values.append(float(stripped))
    if len(values) != dim:
        raise CellwellError(
            f"direction file has {len(values)} coordinates, the sd matrix has {dim}"
        )
    return unit_direction(values)


def _cmd_uncertainty(resolved: dict[str, Any]) -> int:
    from_sim = resolved["from-sim"]
    matrix_mode = resolved["sd-matrix"] is not None
    if from_sim == matrix_mode:
        raise UsageError("choose exactly one of --from-sim or --sd-matrix")
    if from_sim:
        if resolved["seed"] is None:
            raise UsageError("--from-sim needs --seed")
        pipeline = _pipeline(
            resolved["pipeline"], parse_summary_spec(resolved["summary"]), AUTO
        )
        report = uncertainty_from_sim(
            _sim_config(resolved), pipeline, resolved["seed"], resolved["alpha-source"]
        )
    else:
        if resolved["alpha"] is None or resolved["q"] is None:
            raise UsageError("--sd-matrix needs --alpha and --q")
        config = parse_summary_spec(resolved["q"])
        bad = [code for code in config.stats if _parse_stat(code)[1] is None]
        if bad:
            raise NonQuantileStatistic(
                f"closed-form uncertainty is defined for quantile statistics only, got {bad}"
            )
        sd_table = load_well_table(resolved["sd-matrix"])
        direction = _load_direction(resolved["alpha"], len(sd_table.feature_names))
        report = make_report(sd_table.values, sd_table.well_ids, direction, config)
    out = _out_dir(resolved)
    write_report(report, out / "uncertainty.csv")
    _write_manifest(out, "uncertainty", resolved)
    sys.stdout.write(f"uncertainty_closed = {format_float(report.uncertainty_closed)}\n")
    if report.uncertainty_empirical is not None:
        sys.stdout.write(
            f"uncertainty_empirical = {format_float(report.uncertainty_empirical)}\n"
        )
    return 0


def _cmd_toy(resolved: dict[str, Any]) -> int:
    if resolved["reps"] < 1:
        raise UsageError("--reps must be at least 1")
    results = [
        toy_example(
            np.random.SeedSequence(entropy=resolved["seed"], spawn_key=(r,)),
            n_wells=resolved["wells"],
            shared_cov=resolved["shared-cov"],
        )
        for r in range(resolved["reps"])
    ]
    first = results[0]
    mean_axis = sum(r.tau_axis for r in results) / len(results)
    mean_pc = sum(r.tau_pc for r in results) / len(results)
    out = _out_dir(resolved)
    lines = [
        "true order:     " + " < ".join(first.true_order),
        "axis-max order: " + " < ".join(first.axis_max_order),
        "pc-max order:   " + " < ".join(first.pc_max_order),
        f"kendall tau, axis maxima: {mean_axis:.4f}",
        f"kendall tau, pc maxima:   {mean_pc:.4f}",
        f"reps: {len(results)}   seed: {resolved['seed']}   wells: {resolved['wells']}",
    ]
    (out / "toy.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(out / "points.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "well_id",
                "mean_x1",
                "mean_x2",
                "axis_max_x1",
                "axis_max_x2",
                "pc_max_x1",
                "pc_max_x2",
            ]
        )
        for i, wid in enumerate(first.true_order):
            writer.writerow(
                [wid]
                + [format_float(v) for v in first.well_means[i]]
                + [format_float(v) for v in first.axis_points[i]]
                + [format_float(v) for v in first.pc_points[i]]
            )
    _write_manifest(out, "toy", resolved)
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "uncertainty": _cmd_uncertainty,
    "toy": _cmd_toy,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        resolved = _resolve(args.command, args)
        return _DISPATCH[args.command](resolved)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CellwellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
