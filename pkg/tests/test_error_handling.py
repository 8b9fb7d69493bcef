"""Tests for cross-cutting error handling scenarios."""

from unittest.mock import patch

import pytest


def run_command(name, tmp_path, **params):
    from riesz_tomo import RunConfig, registry
    grid = tmp_path / "in.rgf"
    if not grid.exists():
        grid.write_bytes(b"")
    cfg = RunConfig(command=name, params={k: str(v) for k, v in params.items()},
                    inputs=[grid], out=tmp_path / "out.rgf")
    return registry.run(cfg)


class TestCommandErrors:
    def test_unexpected_error(self, tmp_path):
        with patch("riesz_tomo.commands.fields.read_grid", side_effect=RuntimeError("disk on fire")):
            result = run_command("riesz", tmp_path)
        assert result["success"] is False
        assert result["exit_code"] == 1
        assert "unexpected error" in result["error"].lower()

    def test_numerical_failure(self, tmp_path):
        from riesz_tomo import NumericalFailureError
        with patch("riesz_tomo.commands.fields.read_grid", side_effect=NumericalFailureError("non-finite output")):
            result = run_command("normal", tmp_path)
        assert result["exit_code"] == 3
        assert "numerical failure" in result["error"].lower()

    def test_parameter_error(self, tmp_path):
        from riesz_tomo import ParameterError
        with patch("riesz_tomo.commands.fields.read_grid", side_effect=ParameterError("bad grid")):
            result = run_command("xray", tmp_path)
        assert result["exit_code"] == 2
        assert "invalid input" in result["error"].lower()

    def test_corrupt_input_file(self, tmp_path):
        result = run_command("riesz", tmp_path)
        assert result["success"] is False
        assert result["exit_code"] == 2

    def test_bad_parameter_value(self, tmp_path):
        result = run_command("phantom", tmp_path, n="many")
        assert result["exit_code"] == 2
        assert "integer" in result["error"]

    def test_unknown_parameter(self, tmp_path):
        result = run_command("phantom", tmp_path, colour="red")
        assert result["exit_code"] == 2
        assert "colour" in result["error"]

    def test_lemma_unexpected_error(self, tmp_path):
        with patch("riesz_tomo.commands.lemma.expand_polynomial_times_kernel", side_effect=RuntimeError("boom")):
            result = run_command("lemma-verify", tmp_path, degree=1)
        assert result["exit_code"] == 1

    def test_experiment_numerical_failure(self):
        from riesz_tomo import NumericalFailureError, RunConfig, registry
        cfg = RunConfig(command="roi-recon", params={"mode": "half_local", "n": "8"})
        with patch("riesz_tomo.commands.experiments.cgls_solve", side_effect=NumericalFailureError("diverged")):
            result = registry.run(cfg)
        assert result["exit_code"] == 3


class TestCliErrors:
    def test_missing_input_file(self, tmp_path, run_cli):
        code, _, err = run_cli("xray", tmp_path / "nope.rgf", "--out", tmp_path / "x.rsg")
        assert code == 2
        assert "does not exist" in err

    def test_missing_config(self, tmp_path, run_cli):
        code, _, err = run_cli("phantom", "--config", tmp_path / "missing.cfg")
        assert code == 2
        assert "missing.cfg" in err

    def test_malformed_config(self, tmp_path, run_cli):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("preset disc\n")
        code, _, err = run_cli("phantom", "--config", cfg)
        assert code == 2
        assert "expected key=value" in err

    def test_malformed_param(self, tmp_path, run_cli):
        code, _, err = run_cli("phantom", "--param", "n", "--out", tmp_path / "f.rgf")
        assert code == 2
        assert "KEY=VALUE" in err

    def test_negative_seed(self, tmp_path, run_cli):
        code, _, err = run_cli("phantom", "--seed", "-1", "--out", tmp_path / "f.rgf")
        assert code == 2
        assert "invalid configuration" in err

    def test_output_directory_missing(self, tmp_path, run_cli):
        code, _, _ = run_cli("phantom", "--out", tmp_path / "no" / "f.rgf")
        assert code == 2

    def test_unknown_command(self, run_cli):
        with pytest.raises(SystemExit) as exc:
            run_cli("tomography")
        assert exc.value.code == 2

    def test_unexpected_error_exit_code(self, tmp_path, run_cli):
        with patch("riesz_tomo.commands.fields.rasterize", side_effect=RuntimeError("boom")):
            code, _, err = run_cli("phantom", "--out", tmp_path / "f.rgf")
        assert code == 1
        assert "Unexpected error: boom" in err
