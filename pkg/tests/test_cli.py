"""Command-line surface: subcommands, output formats and exit codes."""

import json

import pandas as pd
import pytest

from betapress import __version__
from betapress.cli import build_parser, main
from betapress.errors import ExitCode


def _model_args(path, *extra):
    return ["--data", str(path), "--response", "y", "--mean", "x1", *extra]


@pytest.mark.integration
class TestFitCommand:
    def test_text_report(self, csv_dataset, capsys):
        code = main(["fit", *_model_args(csv_dataset, "--precision", "z1")])
        out = capsys.readouterr().out
        assert code == ExitCode.OK
        assert "logit(mu) ~ 1 + x1 | log(phi) ~ 1 + z1" in out
        for label in ("R2_LR", "P2 ", "P2_bg", "lambda"):
            assert label in out

    def test_json_output_and_artifact(self, csv_dataset, tmp_path, capsys):
        artifact = tmp_path / "fit.json"
        code = main(["fit", *_model_args(csv_dataset, "--precision", "z1", "--format", "json", "--out", str(artifact))])
        assert code == ExitCode.OK
        printed = json.loads(capsys.readouterr().out)
        saved = json.loads(artifact.read_text(encoding="utf-8"))
        assert printed["prediction"]["p2"] == saved["prediction"]["p2"]
        assert saved["fit"]["q"] == 2
        assert saved["formula"].startswith("logit(mu)")

    def test_json_is_byte_identical_across_runs(self, csv_dataset, tmp_path, capsys):
        outputs = []
        for name in ("first.json", "second.json"):
            args = _model_args(csv_dataset, "--precision", "z1", "--format", "json", "--out", str(tmp_path / name))
            assert main(["fit", *args]) == ExitCode.OK
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]
        assert (tmp_path / "first.json").read_bytes() == (tmp_path / "second.json").read_bytes()

    def test_csv_output(self, csv_dataset, capsys):
        code = main(["fit", *_model_args(csv_dataset, "--format", "csv", "--mean-link", "loglog")])
        out = capsys.readouterr().out
        assert code == ExitCode.OK
        assert out.splitlines()[0] == "parameter,estimate,std_error,z_value"
        assert len(out.splitlines()) == 1 + 3

    def test_boundary_response_is_user_error(self, tmp_path, capsys):
        path = tmp_path / "boundary.csv"
        pd.DataFrame({"y": [0.2, 0.4, 1.0, 0.3, 0.5], "x1": [1.0, 2.0, 3.0, 4.0, 5.0]}).to_csv(path, index=False)
        code = main(["fit", *_model_args(path)])
        err = capsys.readouterr().err
        assert code == ExitCode.USER_ERROR
        assert "row 3" in err
        assert "hint:" in err and "--shrink-boundary" in err

    def test_shrink_boundary_flag(self, tmp_path, csv_dataset, capsys):
        frame = pd.read_csv(csv_dataset)
        frame.loc[0, "y"] = 1.0
        path = tmp_path / "edge.csv"
        frame.to_csv(path, index=False)
        assert main(["fit", *_model_args(path, "--shrink-boundary")]) == ExitCode.OK

    def test_missing_dataset(self, tmp_path, capsys):
        code = main(["fit", *_model_args(tmp_path / "absent.csv")])
        assert code == ExitCode.USER_ERROR
        assert "not found" in capsys.readouterr().err

    def test_non_convergence_is_numerical_failure(self, csv_dataset, capsys):
        code = main(["fit", *_model_args(csv_dataset, "--precision", "z1", "--max-iterations", "1")])
        assert code == ExitCode.NUMERICAL_FAILURE
        assert "did not converge" in capsys.readouterr().err


@pytest.mark.integration
class TestSelectCommand:
    def test_four_way(self, csv_dataset, tmp_path, capsys):
        out_csv = tmp_path / "ranked.csv"
        code = main(["select", *_model_args(csv_dataset, "--four-way", "--out", str(out_csv))])
        out = capsys.readouterr().out
        assert code == ExitCode.OK
        assert "logit+log" in out and "loglog+fixed" in out
        table = pd.read_csv(out_csv)
        assert table["rank"].tolist() == [1, 2, 3, 4]
        assert table["selected"].sum() == 1

    def test_explicit_candidates_as_json(self, csv_dataset, capsys):
        code = main([
            "select", *_model_args(csv_dataset),
            "--candidate", "name=small;mean=",
            "--candidate", "name=full;mean=x1;precision=z1",
            "--format", "json",
        ])
        rows = json.loads(capsys.readouterr().out)["candidates"]
        assert code == ExitCode.OK
        assert {r["name"] for r in rows} == {"small", "full"}
        assert rows[0]["selected"] is True

    def test_unknown_candidate_field(self, csv_dataset, capsys):
        code = main(["select", *_model_args(csv_dataset, "--candidate", "name=a;weights=w")])
        assert code == ExitCode.USER_ERROR


@pytest.mark.integration
class TestPressPlotCommand:
    def test_writes_svg_and_components(self, csv_dataset, tmp_path, capsys):
        svg = tmp_path / "press.svg"
        code = main(["press-plot", *_model_args(csv_dataset, "--precision", "z1", "--out", str(svg))])
        out = capsys.readouterr().out
        assert code == ExitCode.OK
        assert svg.read_text(encoding="utf-8").lstrip().startswith("<?xml")
        components = pd.read_csv(svg.with_suffix(".csv"))
        assert list(components.columns) == ["index", "press_component", "press_bg_component"]
        assert components["index"].iloc[0] == 1
        assert "flagged (PRESS):" in out

    def test_deterministic_bytes(self, csv_dataset, tmp_path, capsys):
        paths = [tmp_path / "a.svg", tmp_path / "b.svg"]
        for path in paths:
            main(["press-plot", *_model_args(csv_dataset, "--out", str(path), "--csv", str(path) + ".csv")])
        assert paths[0].read_bytes() == paths[1].read_bytes()


SMALL_PLAN = """
layout = table1
scenario = 3, 4
n = 30
phi = 50, 400
replications = 3
"""


@pytest.mark.integration
@pytest.mark.monte_carlo
class TestSimulateCommand:
    def test_writes_table(self, tmp_path, capsys):
        config = tmp_path / "plan.cfg"
        config.write_text(SMALL_PLAN, encoding="utf-8")
        code = main(["simulate", "--config", str(config), "--out", str(tmp_path / "out"), "--seed", "5"])
        assert code == ExitCode.OK
        table = pd.read_csv(tmp_path / "out" / "table1.csv")
        assert "scenario3_phi50" in table.columns and "scenario4_phi400_se" in table.columns
        assert table["statistic"].tolist() == ["P2", "P2_bg", "R2_LR"]
        assert "4 cells" in capsys.readouterr().out

    @pytest.mark.slow
    def test_byte_identical_serial_and_parallel(self, tmp_path):
        config = tmp_path / "plan.cfg"
        config.write_text(SMALL_PLAN, encoding="utf-8")
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "serial"), "--seed", "5"])
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "again"), "--seed", "5"])
        main([
            "simulate", "--config", str(config), "--out", str(tmp_path / "parallel"),
            "--seed", "5", "--workers", "2",
        ])
        serial = (tmp_path / "serial" / "table1.csv").read_bytes()
        assert serial == (tmp_path / "again" / "table1.csv").read_bytes()
        assert serial == (tmp_path / "parallel" / "table1.csv").read_bytes()

    def test_unknown_key(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("layout = table1\nnn = 40\n", encoding="utf-8")
        code = main(["simulate", "--config", str(config), "--out", str(tmp_path)])
        assert code == ExitCode.USER_ERROR
        assert "'nn'" in capsys.readouterr().err

    def test_replications_override(self, tmp_path):
        config = tmp_path / "plan.cfg"
        config.write_text("layout = table1\nscenario = 4\nphi = 50\nn = 30\n", encoding="utf-8")
        code = main([
            "simulate", "--config", str(config), "--out", str(tmp_path / "out"), "--replications", "2",
        ])
        assert code == ExitCode.OK

    def test_progress_on_stderr_by_default(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("BETAPRESS_LOG_LEVEL", raising=False)
        config = tmp_path / "plan.cfg"
        config.write_text("layout = table1\nscenario = 4\nphi = 50, 150\nn = 30\n", encoding="utf-8")
        code = main([
            "simulate", "--config", str(config), "--out", str(tmp_path / "out"), "--replications", "2",
        ])
        assert code == ExitCode.OK
        err = capsys.readouterr().err
        assert "cell 1/2" in err and "cell 2/2" in err


@pytest.mark.unit
class TestParser:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_mean_link_choices(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["fit", "--data", "d.csv", "--response", "y", "--mean-link", "log"])

    def test_bad_log_level(self, csv_dataset, capsys):
        code = main(["--log-level", "chatty", "fit", *_model_args(csv_dataset)])
        assert code == ExitCode.USER_ERROR
