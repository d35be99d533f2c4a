"""Command-line interface: exit codes, outputs, and reproducible re-runs."""

import subprocess
import sys

import numpy as np
import pytest

from cellwell import (
    SimConfig,
    generate_dataset,
    write_assessment,
    write_cell_table,
    write_well_table,
    WellTable,
)
from cellwell.cli import main

SIM_SMALL = [
    "--wells", "12",
    "--cells-min", "20",
    "--cells-max", "30",
    "--dim", "3",
    "--var-lo", "1",
    "--var-hi", "4",
    "--step", "0.5",
    "--cuts", "4,8",
]


def run_simulate(out, extra=()):
    return main(
        ["simulate", "--reps", "2", "--seed", "7", "--pipelines", "wells",
         "--threads", "1", *SIM_SMALL, "--out", str(out), *extra]
    )


@pytest.fixture
def dataset_files(tmp_path):
    config = SimConfig(
        n_wells=12,
        cells_min=20,
        cells_max=30,
        dim=3,
        var_lo=0.5,
        var_hi=1.0,
        mean_step=5.0,
        class_cuts=(4, 8),
    )
    cells, truth = generate_dataset(config, 21)
    cells_path = tmp_path / "cells.csv"
    assess_path = tmp_path / "assess.csv"
    write_cell_table(cells, cells_path)
    write_assessment(truth.assessment, assess_path)
    return cells_path, assess_path


class TestExitCodes:
    def test_no_command(self, capsys):
        assert main([]) == 2

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 2

    def test_missing_required_flag(self, capsys):
        assert main(["simulate"]) == 2
        assert "--seed" in capsys.readouterr().err

    def test_unparseable_value(self, capsys):
        assert main(["simulate", "--seed", "7", "--reps", "many"]) == 2

    def test_too_few_reps(self, tmp_path):
        assert main(
            ["simulate", "--reps", "1", "--seed", "7", "--out", str(tmp_path)]
        ) == 2

    def test_missing_input_file(self, tmp_path, capsys):
        code = main(
            ["analyze", "--cells", str(tmp_path / "nope.csv"),
             "--assess", str(tmp_path / "nope2.csv"), "--objects", "wells",
             "--out", str(tmp_path)]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_uncertainty_mode_is_exclusive(self, tmp_path, capsys):
        base = ["uncertainty", "--out", str(tmp_path)]
        assert main(base) == 2
        assert main(base + ["--from-sim", "--sd-matrix", "x.csv"]) == 2

    def test_from_sim_needs_seed(self, tmp_path):
        assert main(["uncertainty", "--from-sim", "--out", str(tmp_path)]) == 2

    def test_sd_matrix_needs_alpha_and_levels(self, tmp_path):
        sd = tmp_path / "sd.csv"
        write_well_table(
            WellTable(("A", "B"), ("s1",), np.asarray([[1.0], [2.0]])), sd
        )
        assert main(
            ["uncertainty", "--sd-matrix", str(sd), "--out", str(tmp_path)]
        ) == 2

    def test_non_quantile_levels_fail_cleanly(self, tmp_path, capsys):
        sd = tmp_path / "sd.csv"
        write_well_table(
            WellTable(("A", "B"), ("s1",), np.asarray([[1.0], [2.0]])), sd
        )
        alpha = tmp_path / "alpha.txt"
        alpha.write_text("1.0\n")
        code = main(
            ["uncertainty", "--sd-matrix", str(sd), "--alpha", str(alpha),
             "--q", "min,sd", "--out", str(tmp_path)]
        )
        assert code == 1
        assert "quantile" in capsys.readouterr().err

    def test_version_and_help(self, capsys):
        assert main(["--version"]) == 0
        assert "cellwell" in capsys.readouterr().out
        assert main(["--help"]) == 0

    def test_config_file_errors(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("seed 7\n")
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
        unknown = tmp_path / "unknown.cfg"
        unknown.write_text("seed = 7\nreps = 2\nplates = 9\n")
        assert main(["simulate", "--config", str(unknown), "--out", str(tmp_path)]) == 2
        assert main(
            ["simulate", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]
        ) == 2


class TestSimulateCommand:
    def test_outputs_and_stdout(self, tmp_path, capsys):
        assert run_simulate(tmp_path) == 0
        out = capsys.readouterr().out
        assert "DWD Error Rate" in out
        assert (tmp_path / "report.txt").exists()
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "manifest.txt").exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_simulate(a) == 0
        assert run_simulate(b) == 0
        for name in ("report.txt", "report.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_manifest_replays_the_run(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_simulate(a) == 0
        code = main(
            ["simulate", "--config", str(a / "manifest.txt"), "--out", str(b)]
        )
        assert code == 0
        assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()

    def test_flags_override_the_manifest(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_simulate(a) == 0
        code = main(
            ["simulate", "--config", str(a / "manifest.txt"), "--threads", "2",
             "--out", str(b)]
        )
        assert code == 0
        assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()

    def test_console_script_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cellwell", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("cellwell ")


class TestAnalyzeCommand:
    def test_wells_pipeline_end_to_end(self, dataset_files, tmp_path, capsys):
        cells_path, assess_path = dataset_files
        out = tmp_path / "run"
        code = main(
            ["analyze", "--cells", str(cells_path), "--assess", str(assess_path),
             "--objects", "wells", "--loocv", "--out", str(out)]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "error_rate = 0.0" in stdout
        assert "loocv_error" in stdout
        lines = (out / "predictions.csv").read_text().splitlines()
        assert lines[0] == "well_id,true_class,predicted_class"
        assert sum(1 for l in lines if not l.startswith("#")) == 13
        assert any(l.startswith("#error_rate") for l in lines)

    def test_union_pipeline_with_standardization(self, dataset_files, tmp_path):
        cells_path, assess_path = dataset_files
        code = main(
            ["analyze", "--cells", str(cells_path), "--assess", str(assess_path),
             "--objects", "cwu-pca", "--std-within", "--out", str(tmp_path / "r")]
        )
        assert code == 0

    def test_loocv_undefined_for_cells(self, dataset_files, tmp_path):
        cells_path, assess_path = dataset_files
        code = main(
            ["analyze", "--cells", str(cells_path), "--assess", str(assess_path),
             "--objects", "cells", "--loocv", "--out", str(tmp_path / "r")]
        )
        assert code == 2

    def test_subsample_requires_cells_objects(self, dataset_files, tmp_path):
        cells_path, assess_path = dataset_files
        code = main(
            ["analyze", "--cells", str(cells_path), "--assess", str(assess_path),
             "--objects", "wells", "--subsample", "6,10,2", "--out", str(tmp_path / "r")]
        )
        assert code == 2

    def test_rerun_is_byte_identical(self, dataset_files, tmp_path):
        cells_path, assess_path = dataset_files
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main(
                ["analyze", "--cells", str(cells_path), "--assess", str(assess_path),
                 "--objects", "cells", "--subsample", "6,10,2,5", "--out", str(out)]
            )
            assert code == 0
            outs.append((out / "predictions.csv").read_bytes())
        assert outs[0] == outs[1]


class TestUncertaintyCommand:
    def test_from_sim(self, tmp_path, capsys):
        code = main(
            ["uncertainty", "--from-sim", "--seed", "3", *SIM_SMALL,
             "--out", str(tmp_path)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "uncertainty_closed = " in out
        assert "uncertainty_empirical = " in out
        assert (tmp_path / "uncertainty.csv").exists()

    @staticmethod
    def _sd_inputs(tmp_path, rows):
        sd = tmp_path / "sd.csv"
        write_well_table(
            WellTable(tuple(f"W{i}" for i in range(len(rows))), ("s1", "s2"),
                      np.asarray(rows)),
            sd,
        )
        alpha = tmp_path / "alpha.txt"
        alpha.write_text("1.0\n1.0\n")
        return sd, alpha

    def test_median_only_menu_gives_zero(self, tmp_path, capsys):
        sd, alpha = self._sd_inputs(tmp_path, [[1.0, 2.0], [3.0, 1.0]])
        code = main(
            ["uncertainty", "--sd-matrix", str(sd), "--alpha", str(alpha),
             "--q", "q50", "--out", str(tmp_path)]
        )
        assert code == 0
        assert "uncertainty_closed = 0.0" in capsys.readouterr().out

    def test_identical_sd_rows_give_zero(self, tmp_path, capsys):
        sd, alpha = self._sd_inputs(tmp_path, [[1.5, 2.0], [1.5, 2.0], [1.5, 2.0]])
        code = main(
            ["uncertainty", "--sd-matrix", str(sd), "--alpha", str(alpha),
             "--q", "q25,q75", "--out", str(tmp_path)]
        )
        assert code == 0
        assert "uncertainty_closed = 0.0" in capsys.readouterr().out

    def test_varying_sds_give_positive_uncertainty(self, tmp_path, capsys):
        sd, alpha = self._sd_inputs(tmp_path, [[1.0, 2.0], [3.0, 1.0], [2.0, 4.0]])
        code = main(
            ["uncertainty", "--sd-matrix", str(sd), "--alpha", str(alpha),
             "--q", "q25,q75", "--out", str(tmp_path)]
        )
        assert code == 0
        out = capsys.readouterr().out
        value = float(out.split("uncertainty_closed = ")[1].splitlines()[0])
        assert value > 0.0

    def test_direction_length_must_match(self, tmp_path, capsys):
        sd, _ = self._sd_inputs(tmp_path, [[1.0, 2.0], [3.0, 1.0]])
        alpha = tmp_path / "short.txt"
        alpha.write_text("1.0\n")
        code = main(
            ["uncertainty", "--sd-matrix", str(sd), "--alpha", str(alpha),
             "--q", "q75", "--out", str(tmp_path)]
        )
        assert code == 1


class TestToyCommand:
    def test_outputs(self, tmp_path, capsys):
        code = main(["toy", "--seed", "3", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "kendall tau, axis maxima:" in out
        assert (tmp_path / "toy.txt").exists()
        points = (tmp_path / "points.csv").read_text().splitlines()
        assert points[0].startswith("well_id,mean_x1")
        assert len(points) == 6

    def test_shared_covariance_is_exact(self, tmp_path, capsys):
        code = main(
            ["toy", "--seed", "3", "--shared-cov", "--reps", "10",
             "--out", str(tmp_path)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "kendall tau, axis maxima: 1.0000" in out
        assert "kendall tau, pc maxima:   1.0000" in out

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["toy", "--seed", "5", "--reps", "3", "--out", str(out)]) == 0
        assert (a / "toy.txt").read_bytes() == (b / "toy.txt").read_bytes()
        assert (a / "points.csv").read_bytes() == (b / "points.csv").read_bytes()

    def test_rep_count_validated(self, tmp_path):
        assert main(["toy", "--seed", "3", "--reps", "0", "--out", str(tmp_path)]) == 2
