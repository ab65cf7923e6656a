import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from swesat import __version__, cli
from swesat.errors import DivergenceError


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestParsing:
    def test_negative_alpha_rejected_at_parse(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["simulate", "--alpha", "-0.1"])
        assert info.value.code == cli.EXIT_USAGE
        assert "alpha" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "flag, value, field",
        [("--cr", "1.5", "cr"), ("--n", "1", "n"), ("--regime", "hyper", "regime"), ("--g", "0", "g"),
         ("--snapshots", "0.1,-1", "snapshots"), ("--scenario", "dam-break", "scenario")],
    )
    def test_bad_flag_names_field(self, capsys, flag, value, field):
        with pytest.raises(SystemExit) as info:
            cli.main(["simulate", flag, value])
        assert info.value.code == cli.EXIT_USAGE
        assert f"{field}:" in capsys.readouterr().err

    def test_config_file_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("g = 9.8\nalpha = -2\n")
        assert run_cli("verify", "--config", bad) == cli.EXIT_USAGE
        assert "alpha:" in capsys.readouterr().err
        bad.write_text("nonsense\n")
        assert run_cli("verify", "--config", bad) == cli.EXIT_USAGE
        bad.write_text("colour = blue\n")
        assert run_cli("verify", "--config", bad) == cli.EXIT_USAGE
        assert "colour: unknown" in capsys.readouterr().err
        assert run_cli("verify", "--config", tmp_path / "missing.cfg") == cli.EXIT_USAGE

    def test_config_file_and_override_layers(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\ng = 4.0\nu-multiple = 2  # super-critical\nn = 10\nalpha_scaled = 0.5\n")
        cfg = cli.resolve("simulate", cli.read_config_file(path), {"n": 12})
        flow = cli.flow_config(cfg)
        assert flow.g == 4.0 and flow.U == pytest.approx(4.0)
        assert cfg["n"] == 12
        assert cli._alpha(cfg, flow) == pytest.approx(0.5 * 6.0)

    def test_flag_layers_replace_file_velocity_and_alpha(self):
        cfg = cli.resolve("simulate", {"U": 1.0, "alpha": 0.2}, {"regime": "super", "alpha_scaled": 0.1})
        flow = cli.flow_config(cfg)
        assert flow.U == pytest.approx(2 * math.sqrt(9.8))
        assert cli._alpha(cfg, flow) == pytest.approx(0.1 * 3 * math.sqrt(9.8))

    def test_alpha_conflict(self):
        with pytest.raises(cli.UsageError, match="alpha"):
            cli.resolve("simulate", {}, {"alpha": 0.1, "alpha_scaled": 0.1})

    def test_regime_contradiction(self, capsys):
        assert run_cli("verify", "--regime", "critical", "--u-multiple", "0.5") == cli.EXIT_USAGE
        assert "regime:" in capsys.readouterr().err

    def test_gamma_outside_subcritical(self, capsys):
        assert run_cli("verify", "--regime", "super", "--gamma0", "0.1") == cli.EXIT_USAGE

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out


class TestVerify:
    def test_default_passes(self, tmp_path, capsys):
        assert run_cli("verify", "--out-dir", tmp_path) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "6/6 checks passed" in out
        doc = json.loads((tmp_path / "verify.json").read_text())
        assert doc["passed"] is True and doc["failed"] == []
        assert (tmp_path / "manifest.json").exists()

    @pytest.mark.parametrize("regime", ["critical", "super"])
    def test_other_regimes_pass(self, tmp_path, regime):
        assert run_cli("verify", "--regime", regime, "--alpha-scaled", "0.15", "--out-dir", tmp_path) == 0

    def test_gamma_beyond_bound_fails(self, tmp_path, capsys):
        assert run_cli("verify", "--gamma0", "1.5", "--out-dir", tmp_path) == cli.EXIT_CHECK_FAILED
        out = capsys.readouterr().out
        assert "FAIL  penalty_admissibility" in out
        assert "FAIL  energy_rate" in out
        doc = json.loads((tmp_path / "verify.json").read_text())
        assert set(doc["failed"]) == {"penalty_admissibility", "energy_rate"}

    def test_tau_below_bound_fails(self, tmp_path):
        assert run_cli("verify", "--regime", "super", "--tau01", "0.0", "--out-dir", tmp_path) == 1


class TestSimulate:
    def test_outputs(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli("simulate", "--n", 32, "--t-final", 0.5, "--snapshots", "0.25,0.5", "--out-dir", out)
        assert code == cli.EXIT_OK
        assert {p.name for p in out.iterdir()} == {
            "solution.csv", "energy.csv", "manifest.json", "solution.png", "energy.png"}
        rows = read_rows(out / "solution.csv")
        assert list(rows[0]) == ["t", "x", "x_scaled", "h", "u", "h_exact", "u_exact"]
        assert len(rows) == 2 * 33
        assert {r["t"] for r in rows} == {"0.25", "0.5"}
        speed = 1.5 * math.sqrt(9.8)
        last = rows[-1]
        assert float(last["x_scaled"]) == pytest.approx(float(last["x"]) / speed, rel=1e-15)
        energy = read_rows(out / "energy.csv")
        assert float(energy[0]["t"]) == 0.0 and float(energy[-1]["t"]) == 0.5

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["version"] == __version__
        assert manifest["config"]["U"] == pytest.approx(0.5 * math.sqrt(9.8))
        report = manifest["report"]
        for key in ("lambda1", "lambda2", "gamma0", "gamma1", "tau01", "tau02", "tauN1", "tauN2"):
            assert isinstance(report[key], float)
        assert manifest["wall_time_s"] >= 0

    def test_seventeen_digit_floats(self, tmp_path):
        run_cli("simulate", "--n", 8, "--out-dir", tmp_path, "--no-figures")
        rows = read_rows(tmp_path / "solution.csv")
        h = [r["h"] for r in rows if r["h"] not in ("0", "-0")]
        assert all(float("%.17g" % float(v)) == float(v) and v == "%.17g" % float(v) for v in h)

    def test_deterministic_and_manifest_rerun(self, tmp_path):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        args = ["--regime", "critical", "--alpha-scaled", "0.15", "--n", 40, "--t-final", 0.3, "--no-figures"]
        assert run_cli("simulate", *args, "--out-dir", a) == 0
        assert run_cli("simulate", *args, "--out-dir", b) == 0
        assert run_cli("simulate", "--config", a / "manifest.json", "--out-dir", c, "--no-figures") == 0
        for name in ("solution.csv", "energy.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()

    def test_zero_scenario_energy_all_zero(self, tmp_path):
        code = run_cli("simulate", "--scenario", "zero-random", "--amplitude", 0, "--regime", "super",
                       "--n", 16, "--out-dir", tmp_path, "--no-figures")
        assert code == 0
        energy = read_rows(tmp_path / "energy.csv")
        assert len(energy) > 2
        assert all(float(r["energy"]) == 0.0 for r in energy)
        rows = read_rows(tmp_path / "solution.csv")
        assert all(r["h_exact"] == "" for r in rows)

    def test_random_energy_decays(self, tmp_path):
        run_cli("simulate", "--scenario", "zero-random", "--regime", "sub", "--u-multiple", "-0.5",
                "--n", 32, "--out-dir", tmp_path, "--no-figures")
        e = np.array([float(r["energy"]) for r in read_rows(tmp_path / "energy.csv")])
        assert np.all(np.diff(e) <= 1e-10 * e[:-1])

    def test_divergence_exit_code(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise DivergenceError("non-finite values at step 7 (t = 0.01)", step=7, time=0.01)

        monkeypatch.setattr(cli, "integrate", boom)
        assert run_cli("simulate", "--n", 8, "--out-dir", tmp_path) == cli.EXIT_DIVERGED
        assert "step 7" in capsys.readouterr().err

    def test_pulse_needs_positive_flow(self, tmp_path, capsys):
        assert run_cli("simulate", "--u-multiple", "-2", "--out-dir", tmp_path) == cli.EXIT_USAGE
        assert "U > 0" in capsys.readouterr().err


class TestConverge:
    def test_single_resolution_leaves_rates_empty(self, tmp_path):
        code = run_cli("converge", "--regime", "sub", "--alpha", 0, "--resolutions", 16, "--out-dir", tmp_path,
                       "--no-figures")
        assert code == 0
        rows = read_rows(tmp_path / "convergence.csv")
        assert list(rows[0]) == ["N", "h_error", "h_rate", "u_error", "u_rate", "alpha", "regime"]
        assert len(rows) == 1
        assert rows[0]["h_rate"] == "" and rows[0]["u_rate"] == ""
        assert rows[0]["regime"] == "sub+"

    def test_default_sweep_covers_regimes_and_alphas(self, tmp_path):
        code = run_cli("converge", "--resolutions", "16,32", "--out-dir", tmp_path)
        assert code == 0
        rows = read_rows(tmp_path / "convergence.csv")
        assert {(r["regime"], float(r["alpha"])) for r in rows} == {
            (reg, a) for reg in ("sub+", "critical+", "super+") for a in (0.0, 0.05)}
        assert all(r["h_rate"] != "" for r in rows if r["N"] == "32")
        assert (tmp_path / "convergence.png").stat().st_size > 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["report"]) == 6

    def test_deterministic(self, tmp_path):
        args = ["converge", "--regime", "super", "--resolutions", "16,32", "--no-figures"]
        run_cli(*args, "--out-dir", tmp_path / "a")
        run_cli(*args, "--out-dir", tmp_path / "b")
        assert (tmp_path / "a" / "convergence.csv").read_bytes() == (tmp_path / "b" / "convergence.csv").read_bytes()

    def test_bad_resolutions(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            cli.main(["converge", "--resolutions", "16,x"])
        assert "resolutions:" in capsys.readouterr().err
        assert run_cli("converge", "--resolutions", "32,16", "--no-figures", "--out-dir", tmp_path) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "swesat", "verify", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "6/6 checks passed" in proc.stdout
