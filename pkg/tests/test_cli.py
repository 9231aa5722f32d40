"""CLI: exit codes, CSV/JSON schemas, byte-identical reruns, figures."""

import json
import math
import os

import numpy as np
import pytest

from agglab import harness
from agglab.cli import CSV_COLUMNS, emit_report, main, render_csv


def _small_report():
    spec = harness.make_fixed_spec(20, 3, 1.0, seed=1)
    return [harness.check_thm_fixed_ew(spec, 20)]


class TestEmitReport:
    def test_csv_schema(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_report(_small_report(), "csv", str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 2
        row = lines[1].split(",")
        assert len(row) == len(CSV_COLUMNS)
        assert row[-1] in ("true", "false")

    def test_json_round_trip_twelve_digits(self, tmp_path):
        reports = _small_report()
        path = tmp_path / "out.json"
        emit_report(reports, "json", str(path))
        parsed = json.loads(path.read_text())
        assert len(parsed) == 1
        row = parsed[0]
        assert set(row) == set(CSV_COLUMNS)
        for key, reference in (
            ("bound", reports[0].bound),
            ("empirical", reports[0].empirical),
            ("stderr", reports[0].stderr),
            ("margin", reports[0].margin),
        ):
            assert float(row[key]) == pytest.approx(reference, rel=1e-11)
        assert math.isnan(row["delta"])
        assert row["pass"] is True

    def test_empty_reports_rejected(self):
        with pytest.raises(ValueError):
            emit_report([], "csv", None)

    def test_twelve_significant_digits(self):
        text = render_csv(_small_report())
        bound_field = text.splitlines()[1].split(",")[9]
        assert len(bound_field.replace(".", "").replace("-", "").lstrip("0")) <= 13


class TestExitCodes:
    def test_check_success(self, tmp_path, capsys):
        code = main(
            ["check", "--thm", "fixed-ew", "--n", "30", "--M", "4", "--sigma", "1",
             "--reps", "30", "--seed", "7", "--output", str(tmp_path / "r.csv")]
        )
        assert code == 0

    def test_missing_subcommand(self, capsys):
        assert main([]) == 1

    def test_unknown_flag(self, capsys):
        assert main(["check", "--thm", "fixed-ew", "--bogus", "1"]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_unwritable_output_is_numerical_failure(self, capsys):
        code = main(
            ["check", "--thm", "fixed-ew", "--n", "20", "--M", "3", "--reps", "20",
             "--output", "/nonexistent-dir/x.csv"]
        )
        assert code == 3

    def test_vc_command(self, capsys):
        assert main(["vc", "--class", "thresholds", "--m", "8"]) == 0
        out = capsys.readouterr().out
        assert "vc=1" in out and "star=2" in out

    def test_vc_singletons(self, capsys):
        assert main(["vc", "--class", "singletons", "--m", "5"]) == 0
        assert "star=5" in capsys.readouterr().out

    def test_failed_bound_check_exits_two(self, tmp_path, capsys):
        # a ceiling below any finite implied constant cannot be met
        code = main(
            ["check", "--thm", "random-q", "--n", "60", "--M", "4", "--b", "1",
             "--reps", "60", "--seed", "3", "--c2-ceiling=-1e12",
             "--output", str(tmp_path / "r.csv")]
        )
        assert code == 2
        assert "false" in (tmp_path / "r.csv").read_text()

    def test_help_documents_defaults(self, capsys):
        assert main(["check", "--help"]) == 0
        out = capsys.readouterr().out
        assert "(default: 2000)" in out and "(default: 0.05)" in out

    def test_invalid_values_are_usage_errors(self, capsys):
        assert main(["check", "--thm", "fixed-ew", "--reps", "1"]) == 1
        assert main(["check", "--thm", "fixed-ew", "--reps", "20", "--seed=-4"]) == 1
        assert main(["vc", "--class", "singletons", "--m", "0"]) == 1


class TestDeterminism:
    def test_byte_identical_rerun_and_thread_invariance(self, tmp_path, monkeypatch):
        args = ["check", "--thm", "fixed-q", "--n", "40", "--M", "5", "--sigma", "1",
                "--reps", "40", "--seed", "11", "--delta", "0.1"]
        monkeypatch.setenv("AGGLAB_THREADS", "1")
        a = tmp_path / "a.csv"
        assert main(args + ["--output", str(a)]) == 0
        monkeypatch.setenv("AGGLAB_THREADS", "3")
        b = tmp_path / "b.csv"
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_random_design_thread_invariance(self, tmp_path, monkeypatch):
        args = ["check", "--thm", "ridge", "--n", "30", "--d", "2", "--b", "1",
                "--lam", "0.1", "--reps", "40", "--seed", "3"]
        monkeypatch.setenv("AGGLAB_THREADS", "1")
        a = tmp_path / "a.csv"
        assert main(args + ["--output", str(a)]) == 0
        monkeypatch.setenv("AGGLAB_THREADS", "2")
        b = tmp_path / "b.csv"
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestOtherCommands:
    def test_complexity_profile_csv(self, tmp_path):
        out = tmp_path / "prof.csv"
        assert main(["complexity", "--M", "5", "--seed", "2", "--beta-points", "4",
                     "--beta-max", "3", "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "beta,global,local"
        assert len(lines) == 5
        for line in lines[1:]:
            beta, g, l = map(float, line.split(","))
            assert l <= g + 1e-12

    def test_estimate_command(self, tmp_path):
        out = tmp_path / "est.csv"
        assert main(["estimate", "--estimator", "ew", "--n", "20", "--M", "4",
                     "--seed", "2", "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "atom,weight,empirical_risk"
        weights = [float(line.split(",")[1]) for line in lines[1:-1]]
        assert abs(sum(weights) - 1.0) < 1e-9

    def test_experiment_config(self, tmp_path):
        config = {"check": "pm", "n": 30, "M": 3, "b": 1.0, "replications": 30, "seed": 5}
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(config))
        out = tmp_path / "out.csv"
        assert main(["experiment", "--config", str(cfg_path), "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1].startswith("progressive-mixture")

    def test_experiment_flag_overrides_config(self, tmp_path):
        config = {"check": "fixed-ew", "n": 20, "M": 3, "replications": 25, "seed": 5}
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(config))
        out = tmp_path / "out.csv"
        assert main(["experiment", "--config", str(cfg_path), "--seed", "9",
                     "--output", str(out)]) == 0
        assert ",9," in out.read_text().splitlines()[1]

    def test_figures_rendered(self, tmp_path):
        figdir = tmp_path / "figs"
        assert main(["check", "--thm", "fixed-ew", "--n", "20", "--M", "3", "--reps", "20",
                     "--output", str(tmp_path / "r.csv"), "--figures", str(figdir)]) == 0
        assert (figdir / "bounds.png").exists()
        assert main(["complexity", "--M", "4", "--beta-points", "5", "--beta-max", "2",
                     "--output", str(tmp_path / "p.csv"), "--figures", str(figdir)]) == 0
        assert (figdir / "profile.png").exists()
