"""CLI contract tests: files, formats, exit codes, determinism."""

import json
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from delaystab.cli import main

runner = CliRunner()


def write_config(path: Path, **overrides) -> Path:
    config = {
        "schema_version": 1,
        "mode": {"n": 1, "ell": 1.0},
        "control": {"tau": 1.5, "alpha": 3.0},
        "discretization": {"dx": 0.05, "dt": 0.005, "t_final": 6.0},
        "outputs": {"directory": str(path.parent / "out"),
                    "snapshot_times": [0.0, 3.0, 6.0], "energy_stride": 20},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            config.setdefault(key, {}).update(value)
        else:
            config[key] = value
    path.write_text(json.dumps(config))
    return path


class TestAnalyze:
    def test_writes_spectrum_and_abscissa(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "5"])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "re,im,residual"
        assert len(lines) > 1
        for line in lines[1:]:
            assert float(line.split(",")[0]) < 0  # closed-loop case 1: stable
        abscissa = json.loads((tmp_path / "abscissa.json").read_text())["abscissa"]
        assert abscissa < 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "analyze"
        rows = {o["file"]: o["rows"] for o in manifest["outputs"]}
        assert rows["spectrum.csv"] == len(lines) - 1

    def test_resonant_has_unstable_root(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                      "--n", "1", "--ell", "1", "--tau", "1.0",
                                      "--alpha", "5"])
        assert result.exit_code == 0
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()[1:]
        assert any(float(line.split(",")[0]) >= 0 for line in lines)

    def test_undelayed_baseline(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                      "--n", "1", "--ell", "1", "--tau", "0"])
        assert result.exit_code == 0
        abscissa = json.loads((tmp_path / "abscissa.json").read_text())["abscissa"]
        assert abs(abscissa) <= 1e-6

    def test_invalid_parameters_exit_2(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                      "--n", "0", "--ell", "1", "--tau", "1.5"])
        assert result.exit_code == 2

    def test_deterministic_bytes(self, tmp_path):
        for sub in ("a", "b"):
            result = runner.invoke(main, ["--out", str(tmp_path / sub), "analyze",
                                          "--n", "1", "--ell", "1", "--tau", "1.5",
                                          "--alpha", "5"])
            assert result.exit_code == 0
        assert (tmp_path / "a" / "spectrum.csv").read_bytes() == \
            (tmp_path / "b" / "spectrum.csv").read_bytes()


class TestDesign:
    def test_single_tau_prints_certificate(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "design",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "5"])
        assert result.exit_code == 0
        assert "satisfied=true" in result.output
        lines = (tmp_path / "design.csv").read_text().splitlines()
        assert lines[0] == "tau,k,alpha_lo,alpha_hi,is_empty"

    def test_sweep_resonances_empty(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "design",
                                      "--n", "1", "--ell", "1",
                                      "--tau-start", "0.1", "--tau-stop", "3.0",
                                      "--tau-step", "0.01"])
        assert result.exit_code == 0
        rows = (tmp_path / "design.csv").read_text().splitlines()[1:]
        empties = {row.split(",")[0] for row in rows
                   if row.split(",")[4] == "true"}
        for tau in ("1", "2", "3"):
            assert any(abs(float(t) - float(tau)) < 1e-9 for t in empties)

    def test_case3_interval(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "design",
                                      "--n", "1", "--ell", "1", "--tau", "2.5"])
        assert result.exit_code == 0
        row = (tmp_path / "design.csv").read_text().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(-3.5531, abs=1e-4)
        assert float(row[3]) == 0.0


class TestRegion:
    def test_smoke_resolution_8(self, tmp_path):
        start = time.monotonic()
        result = runner.invoke(main, ["--out", str(tmp_path), "region",
                                      "--resolution", "8"])
        elapsed = time.monotonic() - start
        assert result.exit_code == 0, result.output
        assert elapsed < 5.0
        lines = (tmp_path / "region.csv").read_text().splitlines()
        assert lines[0] == "beta_tilde,alpha_tilde,count,analytic_stable"
        assert len(lines) == 1 + 64
        boundaries = (tmp_path / "region_boundaries.csv").read_text().splitlines()
        assert boundaries[0] == "family,k,sign,beta_tilde,alpha_tilde"
        assert len(boundaries) > 10

    def test_case1_lobe_cell(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "region",
                                      "--beta-min", "21.9", "--beta-max", "22.5",
                                      "--alpha-min", "11.1", "--alpha-max", "11.4",
                                      "--resolution", "8"])
        assert result.exit_code == 0
        rows = (tmp_path / "region.csv").read_text().splitlines()[1:]
        # the scaled case-1 point (2.25 pi^2, 11.25) lies in the k=1 lobe
        assert all(r.split(",")[2] == "0" and r.split(",")[3] == "true"
                   for r in rows)


class TestSimulate:
    def test_run_writes_all_outputs(self, tmp_path):
        config = write_config(tmp_path / "run.json")
        result = runner.invoke(main, ["simulate", str(config)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        energy = (out / "energy.csv").read_text().splitlines()
        assert energy[0] == "t,field_energy,weighted_energy"
        snapshots = (out / "snapshots.csv").read_text().splitlines()
        assert snapshots[0] == "t,x,u"
        assert len(snapshots) == 1 + 3 * 21  # 3 snapshot times, nx+1 = 21 points
        fit = json.loads((out / "decay_fit.json").read_text())
        assert set(fit) == {"rate", "r_squared", "window_start", "window_end",
                            "n_peaks"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["details"]["delay_steps"] == 300

    def test_out_flag_overrides_config_directory(self, tmp_path):
        config = write_config(tmp_path / "run.json")
        result = runner.invoke(main, ["--out", str(tmp_path / "forced"),
                                      "simulate", str(config)])
        assert result.exit_code == 0
        assert (tmp_path / "forced" / "energy.csv").exists()

    def test_env_var_default_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DELAYSTAB_OUT", str(tmp_path / "envdir"))
        result = runner.invoke(main, ["analyze", "--n", "1", "--ell", "1",
                                      "--tau", "1.5", "--alpha", "5"])
        assert result.exit_code == 0
        assert (tmp_path / "envdir" / "spectrum.csv").exists()

    def test_cfl_violation_exit_2(self, tmp_path):
        config = write_config(tmp_path / "run.json",
                              discretization={"dx": 0.05, "dt": 0.0505,
                                              "t_final": 1.0})
        result = runner.invoke(main, ["simulate", str(config)])
        assert result.exit_code == 2
        assert "Courant" in result.output

    def test_unknown_key_exit_2(self, tmp_path):
        config = write_config(tmp_path / "run.json", typo_section={"a": 1})
        result = runner.invoke(main, ["simulate", str(config)])
        assert result.exit_code == 2

    def test_nan_in_config_exit_2(self, tmp_path):
        path = tmp_path / "run.json"
        write_config(path)
        path.write_text(path.read_text().replace('"alpha": 3.0', '"alpha": NaN'))
        result = runner.invoke(main, ["simulate", str(path)])
        assert result.exit_code == 2

    def test_failed_run_leaves_no_manifest(self, tmp_path):
        config = write_config(tmp_path / "run.json",
                              discretization={"dx": 0.05, "dt": 0.0505,
                                              "t_final": 1.0})
        result = runner.invoke(main, ["--out", str(tmp_path / "fail"),
                                      "simulate", str(config)])
        assert result.exit_code == 2
        assert not (tmp_path / "fail" / "manifest.json").exists()

    def test_blowup_exit_3(self, tmp_path):
        config = write_config(tmp_path / "run.json",
                              control={"tau": 0.5, "alpha": -30.0},
                              discretization={"dx": 0.05, "dt": 0.005,
                                              "t_final": 12.0})
        result = runner.invoke(main, ["simulate", str(config)])
        assert result.exit_code == 3

    def test_uncontrolled_rate_negligible(self, tmp_path):
        config = write_config(tmp_path / "run.json",
                              control={"tau": 1.5, "alpha": 0.0},
                              discretization={"dx": 0.05, "dt": 0.005,
                                              "t_final": 40.0})
        result = runner.invoke(main, ["simulate", str(config)])
        assert result.exit_code == 0
        fit = json.loads((tmp_path / "out" / "decay_fit.json").read_text())
        assert abs(fit["rate"]) <= 1e-4


class TestOracle:
    def test_writes_modal_csv(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "oracle",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "0", "--dt", "0.005",
                                      "--t-final", "30"])
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "modal.csv").read_text().splitlines()
        assert lines[0] == "t,y,ydot,energy"
        energies = [float(l.split(",")[3]) for l in lines[1:]]
        assert max(energies) - min(energies) <= 1e-6 * energies[0]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "dt_snapped" in manifest["details"]

    def test_invalid_exit_2(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "oracle",
                                      "--n", "1", "--ell", "1", "--tau", "-1",
                                      "--alpha", "0", "--dt", "0.005",
                                      "--t-final", "30"])
        assert result.exit_code == 2

    def test_rate_matches_analyze_abscissa(self, tmp_path):
        # cross-command closure: oracle trace rate vs analyze abscissa, 10%
        result = runner.invoke(main, ["--out", str(tmp_path / "o"), "oracle",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "3", "--dt", "0.006",
                                      "--t-final", "80"])
        assert result.exit_code == 0, result.output
        fit = json.loads((tmp_path / "o" / "manifest.json").read_text())
        rate = fit["details"]["decay_fit"]["rate"]
        result = runner.invoke(main, ["--out", str(tmp_path / "a"), "analyze",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "3"])
        assert result.exit_code == 0
        abscissa = json.loads((tmp_path / "a" / "abscissa.json").read_text())["abscissa"]
        assert abs(rate - abscissa) <= 0.10 * abs(abscissa)

    def test_resonant_envelope_not_decaying(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "oracle",
                                      "--n", "1", "--ell", "1", "--tau", "1.0",
                                      "--alpha", "5", "--dt", "0.005",
                                      "--t-final", "60"])
        assert result.exit_code == 0
        fit = json.loads((tmp_path / "manifest.json").read_text())
        assert fit["details"]["decay_fit"]["rate"] >= -1e-3


class TestCsvFormat:
    def test_crlf_and_17_digits(self, tmp_path):
        result = runner.invoke(main, ["--out", str(tmp_path), "analyze",
                                      "--n", "1", "--ell", "1", "--tau", "1.5",
                                      "--alpha", "5"])
        assert result.exit_code == 0
        raw = (tmp_path / "spectrum.csv").read_bytes()
        assert b"\r\n" in raw
        first_value = raw.decode().splitlines()[1].split(",")[0]
        assert len(first_value.replace("-", "").replace(".", "")) >= 15
