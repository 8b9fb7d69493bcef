"""End-to-end tests for the riesz-tomo command line."""

import pytest


@pytest.fixture
def bump_file(tmp_path, run_cli, fixtures_dir):
    path = tmp_path / "bump.rgf"
    code, _, err = run_cli("phantom", "--config", fixtures_dir / "phantom.cfg", "--out", path)
    assert code == 0, err
    return path


class TestFieldCommands:
    def test_phantom(self, tmp_path, run_cli, parse_output, fixtures_dir):
        from riesz_tomo import read_grid
        out, csv = tmp_path / "f.rgf", tmp_path / "f.csv"
        code, stdout, _ = run_cli("phantom", "--config", fixtures_dir / "phantom.cfg", "--out", out, "--csv", csv)
        assert code == 0
        result = parse_output(stdout)
        assert result["path"] == str(out)
        assert float(result["integral"]) > 0
        field = read_grid(out)
        assert field.n == 32 and field.dim == 2
        rows = csv.read_text().splitlines()
        assert len(rows) == 32 and len(rows[0].split(",")) == 32

    def test_phantom_needs_out(self, run_cli, fixtures_dir):
        code, _, err = run_cli("phantom", "--config", fixtures_dir / "phantom.cfg")
        assert code == 2
        assert "--out" in err

    def test_phantom_3d(self, tmp_path, run_cli):
        from riesz_tomo import read_grid
        out = tmp_path / "ball.rgf"
        code, _, _ = run_cli("phantom", "--param", "preset=disc", "--param", "n=8", "--param", "dim=3",
                             "--param", "radius=0.5", "--out", out)
        assert code == 0
        assert read_grid(out).dim == 3

    def test_xray(self, tmp_path, run_cli, parse_output, fixtures_dir, bump_file):
        from riesz_tomo import read_sinogram
        out = tmp_path / "bump.rsg"
        code, stdout, _ = run_cli("xray", bump_file, "--config", fixtures_dir / "xray.cfg", "--out", out)
        assert code == 0
        result = parse_output(stdout)
        assert result["n_theta"] == "64"
        sino = read_sinogram(out, 32)
        assert sino.values.shape == (64, int(result["n_s"]))
        assert sino.values.max() > 0

    def test_adjoint(self, tmp_path, run_cli, fixtures_dir, bump_file):
        from riesz_tomo import read_grid
        sino = tmp_path / "bump.rsg"
        assert run_cli("xray", bump_file, "--out", sino)[0] == 0
        out = tmp_path / "back.rgf"
        code, _, _ = run_cli("adjoint", sino, "--config", fixtures_dir / "adjoint.cfg", "--out", out)
        assert code == 0
        assert read_grid(out).n == 32

    def test_adjoint_needs_grid_size(self, tmp_path, run_cli, bump_file):
        sino = tmp_path / "bump.rsg"
        run_cli("xray", bump_file, "--out", sino)
        code, _, err = run_cli("adjoint", sino, "--out", tmp_path / "back.rgf")
        assert code == 2
        assert "'n' is required" in err

    def test_normal_and_invert(self, tmp_path, run_cli, parse_output, fixtures_dir, bump_file):
        from riesz_tomo import read_grid
        nf = tmp_path / "nf.rgf"
        code, _, _ = run_cli("normal", bump_file, "--config", fixtures_dir / "normal.cfg", "--out", nf)
        assert code == 0
        assert read_grid(nf).values.max() > read_grid(bump_file).values.max()

        out = tmp_path / "f.rgf"
        code, stdout, _ = run_cli("invert", nf, "--config", fixtures_dir / "invert.cfg",
                                  "--param", f"truth={bump_file}", "--out", out)
        assert code == 0
        assert float(parse_output(stdout)["relative_error"]) < 0.5

    def test_adjoint_of_xray_is_normal(self, tmp_path, run_cli):
        disc = tmp_path / "disc.rgf"
        run_cli("phantom", "--param", "preset=disc", "--param", "n=16", "--param", "radius=0.6", "--out", disc)
        run_cli("xray", disc, "--out", tmp_path / "disc.rsg")
        run_cli("adjoint", tmp_path / "disc.rsg", "--param", "n=16", "--out", tmp_path / "back.rgf")
        code, _, _ = run_cli("normal", disc, "--threads", "1", "--out", tmp_path / "nf.rgf")
        assert code == 0
        assert (tmp_path / "back.rgf").read_bytes() == (tmp_path / "nf.rgf").read_bytes()

    def test_riesz(self, tmp_path, run_cli, parse_output, fixtures_dir, bump_file):
        out = tmp_path / "i1.rgf"
        code, stdout, _ = run_cli("riesz", bump_file, "--config", fixtures_dir / "riesz.cfg", "--out", out)
        assert code == 0
        assert parse_output(stdout)["alpha"] == "1.0"

    def test_riesz_order_out_of_range(self, tmp_path, run_cli, bump_file):
        code, _, err = run_cli("riesz", bump_file, "--param", "alpha=2", "--out", tmp_path / "x.rgf")
        assert code == 2
        assert "error:" in err

    def test_config_relative_paths(self, tmp_path, run_cli, bump_file):
        (tmp_path / "run.cfg").write_text("inputs=bump.rgf\nout=bump.rsg\nthreads=1\n")
        code, _, _ = run_cli("xray", "--config", tmp_path / "run.cfg")
        assert code == 0
        assert (tmp_path / "bump.rsg").is_file()


class TestLemmaCommands:
    def test_lemma_verify(self, tmp_path, run_cli, parse_output, fixtures_dir):
        out = tmp_path / "expansions.txt"
        code, stdout, _ = run_cli("lemma-verify", "--config", fixtures_dir / "lemma_verify.cfg", "--out", out)
        assert code == 0
        result = parse_output(stdout)
        assert result["monomials"] == "6"
        assert result["alpha"] == "1"
        checks = [line for line in stdout.splitlines() if line.startswith(("PASS", "FAIL"))]
        assert len(checks) == 6
        assert all(line.startswith("PASS") for line in checks)
        assert "coeff=" in out.read_text()

    def test_lemma_verify_rejects_alpha(self, run_cli, fixtures_dir):
        code, stdout, err = run_cli("lemma-verify", "--config", fixtures_dir / "lemma_verify_rejected.cfg")
        assert code == 2
        assert "alpha=1 violates the lemma hypothesis" in err
        assert "PASS" not in stdout

    def test_abel_tables(self, tmp_path, run_cli, parse_output, fixtures_dir):
        out = tmp_path / "abel.txt"
        code, stdout, _ = run_cli("abel-tables", "--config", fixtures_dir / "abel_tables.cfg", "--out", out)
        assert code == 0
        assert parse_output(stdout)["oracle_checked"] == str(5 * 21)
        lines = stdout.splitlines()
        assert "N 0 0" in lines and "N 1 1" in lines and "N 2 2" in lines
        assert out.read_text().strip()


class TestExperimentCommands:
    def test_roi_recon(self, tmp_path, run_cli, parse_output, fixtures_dir):
        from riesz_tomo import read_key_values
        report = tmp_path / "report.txt"
        code, stdout, _ = run_cli("roi-recon", "--config", fixtures_dir / "roi_recon.cfg",
                                  "--param", "trials=2", "--param", f"report={report}",
                                  "--out", tmp_path / "est.rgf")
        assert code == 0
        result = parse_output(stdout)
        assert result["mode"] == "roi"
        assert 0 < int(result["measured_lines"]) < 64 * 65
        assert int(result["iterations"]) <= 200
        assert float(result["uniqueness_distance"]) >= 0
        saved = read_key_values(report)
        assert saved["iterations"] == result["iterations"]
        assert "uniqueness_distance" in saved

    def test_roi_recon_full_data(self, run_cli, parse_output, fixtures_dir):
        code, stdout, _ = run_cli("roi-recon", "--config", fixtures_dir / "roi_recon.cfg",
                                  "--param", "mode=full", "--param", "max_iter=2000")
        assert code == 0
        result = parse_output(stdout)
        assert int(result["measured_lines"]) == 64 * 65
        assert float(result["relative_error"]) <= 0.01

    def test_half_local(self, run_cli, parse_output, fixtures_dir):
        code, stdout, _ = run_cli("roi-recon", "--config", fixtures_dir / "half_local.cfg")
        assert code == 0
        result = parse_output(stdout)
        assert result["mode"] == "half_local"
        assert int(result["measured_lines"]) > 0
        assert float(result["relative_error"]) >= 0

    def test_roi_recon_annulus_support(self, run_cli, parse_output, fixtures_dir):
        code, stdout, err = run_cli("roi-recon", "--config", fixtures_dir / "roi_annulus.cfg")
        assert code == 0, err
        result = parse_output(stdout)
        assert result["method"] == "direct"
        assert float(result["relative_error"]) <= 0.05
        assert float(result["uniqueness_distance"]) <= 1e-3
        assert float(result["sigma_min"]) > 0

    def test_roi_recon_bad_annulus_support(self, run_cli, fixtures_dir):
        code, _, _ = run_cli("roi-recon", "--config", fixtures_dir / "roi_recon.cfg",
                             "--param", "support_r_inner=0.9", "--param", "support_r_outer=0.5")
        assert code == 2

    def test_half_local_accuracy(self, run_cli, parse_output, fixtures_dir):
        code, stdout, _ = run_cli("roi-recon", "--config", fixtures_dir / "half_local.cfg", "--param", "n=64")
        assert code == 0
        assert float(parse_output(stdout)["relative_error"]) <= 0.08

    def test_half_local_rejects_input_file(self, run_cli, fixtures_dir, bump_file):
        code, _, err = run_cli("roi-recon", bump_file, "--config", fixtures_dir / "half_local.cfg")
        assert code == 2
        assert "half_local" in err

    def test_unknown_mode(self, run_cli):
        code, _, err = run_cli("roi-recon", "--param", "mode=sparse", "--param", "n=8")
        assert code == 2
        assert "unknown mode" in err

    def test_seismo(self, tmp_path, run_cli, parse_output, fixtures_dir):
        from riesz_tomo import read_mask, read_sinogram
        data = tmp_path / "dt.rsg"
        code, stdout, _ = run_cli("seismo", "--config", fixtures_dir / "seismo.cfg",
                                  "--param", f"data_out={data}", "--out", tmp_path / "dc.rgf")
        assert code == 0
        result = parse_output(stdout)
        assert result["linearization_ok"] == "True"
        assert float(result["relative_error"]) <= 0.05
        mask = read_mask(data.with_suffix(".rmk"), 16)
        assert mask.count == int(result["measured_lines"])
        assert read_sinogram(data, 16).values.shape == mask.values.shape

    def test_seismo_linearization(self, run_cli, parse_output, fixtures_dir):
        code, stdout, _ = run_cli("seismo", "--config", fixtures_dir / "seismo_linearization.cfg")
        assert code == 0
        result = parse_output(stdout)
        assert 3.5 <= float(result["ratio"]) <= 4.5

    def test_seismo_direction_dependent(self, run_cli, fixtures_dir):
        code, _, err = run_cli("seismo", "--config", fixtures_dir / "seismo.cfg",
                               "--param", "direction_dependent=true")
        assert code == 2
        assert "direction-dependent" in err

    def test_spectrum(self, tmp_path, run_cli, parse_output, fixtures_dir):
        from riesz_tomo import read_key_values
        out = tmp_path / "spectrum.txt"
        code, stdout, _ = run_cli("spectrum", "--config", fixtures_dir / "spectrum.cfg", "--out", out)
        assert code == 0
        result = parse_output(stdout)
        assert float(result["roi_sigma_min"]) <= float(result["full_sigma_min"])
        assert float(result["roi_condition"]) > float(result["full_condition"])
        assert sum(line.startswith("full sigma[") for line in stdout.splitlines()) == 3
        assert "roi_sigma_max" in read_key_values(out)

    def test_same_seed_same_output(self, tmp_path, run_cli, fixtures_dir):
        outputs = []
        for threads in ("1", "3"):
            out = tmp_path / f"est{threads}.rgf"
            code, _, _ = run_cli("roi-recon", "--config", fixtures_dir / "roi_recon.cfg", "--param", "noise=0.01",
                                 "--seed", "5", "--threads", threads, "--out", out)
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_spectrum_size_limit(self, run_cli):
        code, _, err = run_cli("spectrum", "--param", "n=64")
        assert code == 2
        assert "n <=" in err
