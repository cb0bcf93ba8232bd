import subprocess
import sys

import numpy as np
import pytest

from sblimp.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, EXIT_VERIFY, main
from sblimp.config import ConfigError, load_config, parse_config


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def summary(out):
    return dict(line.split(": ", 1) for line in (out / "summary.txt").read_text().splitlines())


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.params.m == 0.06 and cfg.trajectory.kind == "circle"
        assert cfg.sim.initial_state is None and not cfg.spatial

    def test_unknown_key_has_line(self, tmp_path):
        path = write(tmp_path, "c.ini", "[params]\nm = 0.07\n\n[sim]\ndt = 1e-3\ndtt = 2\n")
        with pytest.raises(ConfigError, match=r"c.ini:6: \[sim\] dtt: unknown key"):
            load_config(path)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config("[plant]\nm = 1\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match=r"\[sim\] integrator"):
            parse_config("[sim]\nintegrator = rk45\n")

    def test_keys_are_case_sensitive(self):
        assert parse_config("[params]\nJ_theta = 0.02\n")["params"]["J_theta"] == 0.02

    def test_invalid_physics_is_value_error(self):
        with pytest.raises(ValueError):
            load_config(overrides={("params", "d_x"): -1.0})

    def test_helix_needs_spatial(self):
        with pytest.raises(ValueError):
            load_config(overrides={("trajectory", "kind"): "helix"})

    def test_roundtrip(self):
        values = parse_config("[params]\nm = 0.0712345678901\n[trajectory]\nkind = hover\n"
                              "[initial]\nx = 0.1\n[model]\nz_share = 0.3\n")
        from sblimp.config import build_config
        cfg = build_config(values)
        again = build_config(parse_config(cfg.to_ini()))
        assert again.to_ini() == cfg.to_ini()
        assert again.params == cfg.params and again.trajectory == cfg.trajectory
        np.testing.assert_array_equal(again.sim.initial_state.as_array(),
                                      cfg.sim.initial_state.as_array())

    def test_spatial_initial_state(self):
        cfg = load_config(overrides={("model", "kind"): "spatial"})
        assert cfg.spatial


class TestSimulate:
    def test_hover(self, tmp_path):
        cfg = write(tmp_path, "h.ini", "[trajectory]\nkind = hover\n[initial]\nx = 0.3\nz = -0.1\n"
                    "[sim]\nduration = 60\ndecimate = 10\n")
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        s = summary(out)
        assert s["class"] == "stable" and float(s["avg_perr"]) < 0.01
        for name in ("log.csv", "summary.txt", "resolved_config.ini", "trace.dat", "trace.gp"):
            assert (out / name).exists()

    def test_fast_circle_diverges(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.ini", "[trajectory]\nspeed = 2.0\n")
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out), "--decimate", "10"]) \
            == EXIT_DIVERGED
        assert summary(out)["class"] == "diverged"
        assert "DIVERGED" in (out / "summary.txt").read_text()
        assert "diverged" in capsys.readouterr().err

    def test_malformed_key_writes_nothing(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.ini", "[trajectory]\nsped = 0.1\n")
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG
        assert not out.exists()
        assert "bad.ini:2" in capsys.readouterr().err

    def test_invalid_physics_is_config_error(self, tmp_path):
        cfg = write(tmp_path, "bad.ini", "[params]\nf_max = -1\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert not (tmp_path / "o").exists()

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG

    def test_resolved_config_reproduces_run(self, tmp_path):
        cfg = write(tmp_path, "c.ini", "[trajectory]\nspeed = 0.4321\n[sim]\nduration = 12.5\n"
                    "controller_rate_hz = 500\n[initial]\nx = 1.01\ntheta = 0.03\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out", str(a), "--integrator", "euler"]) == 0
        assert main(["simulate", "--config", str(a / "resolved_config.ini"), "--out", str(b)]) == 0
        assert (a / "log.csv").read_bytes() == (b / "log.csv").read_bytes()
        assert "integrator = euler" in (a / "resolved_config.ini").read_text()

    def test_spatial_helix(self, tmp_path):
        cfg = write(tmp_path, "h.ini", "[model]\nkind = spatial\n[trajectory]\nkind = helix\n"
                    "radius = 1\nspeed = 0.06\nramp = 0.000537\nclimb = 0.002\ncenter_z = 0.35\n"
                    "[sim]\nduration = 30\ndecimate = 100\n")
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        header = (out / "log.csv").read_text().splitlines()[0]
        assert header.startswith("t,x,y,z,theta,phi,")

    def test_env_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SBLIMP_OUT", str(tmp_path / "root"))
        cfg = write(tmp_path, "c.ini", "[sim]\nduration = 1\n")
        assert main(["simulate", "--config", cfg]) == EXIT_OK
        assert (tmp_path / "root" / "simulate" / "log.csv").exists()


class TestSweep:
    def test_speed_sweep_artifacts(self, tmp_path):
        cfg = write(tmp_path, "s.ini", "[sweep]\nparameter = speed\nstart = 0.1\nstop = 0.5\n"
                    "step = 0.1\n[sim]\nduration = 40\n")
        out = tmp_path / "o"
        assert main(["sweep", "--config", cfg, "--out", str(out), "--decimate", "10",
                     "--parallel", "2"]) == EXIT_OK
        rows = (out / "sweep.csv").read_text().splitlines()
        assert rows[0] == "param_value,max_verr,avg_verr,max_aerr,avg_aerr,max_perr,avg_perr,sat_frac,class"
        assert len(rows) == 6
        assert (out / "speed_avg_verr.dat").exists() and (out / "speed_errors.gp").exists()
        s = summary(out)
        assert s["saturation_onset"] == "0.4" and s["divergence_onset"] == "none"
        assert "parallel = 2" in (out / "resolved_config.ini").read_text()

    def test_spatial_sweep_rejected(self, tmp_path):
        cfg = write(tmp_path, "s.ini", "[model]\nkind = spatial\n")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


class TestVerify:
    def test_defaults_pass(self, capsys):
        assert main(["verify"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 3 and all(l.startswith("PASS") for l in lines)

    def test_zero_tilt_fails(self, tmp_path, capsys):
        cfg = write(tmp_path, "e.ini", "[params]\neta = 0\n")
        assert main(["verify", "--config", cfg]) == EXIT_VERIFY
        assert "FAIL allocation identity" in capsys.readouterr().out

    def test_negative_drag_fails(self, tmp_path, capsys):
        cfg = write(tmp_path, "d.ini", "[params]\nd_x = -0.05\n")
        assert main(["verify", "--config", cfg]) == EXIT_VERIFY
        assert "FAIL design invariants" in capsys.readouterr().out

    def test_malformed_is_config_error(self, tmp_path):
        cfg = write(tmp_path, "d.ini", "[params]\ndrag = 1\n")
        assert main(["verify", "--config", cfg]) == EXIT_CONFIG


def test_no_command():
    assert main([]) == EXIT_CONFIG


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sblimp.cli", "--print-defaults"],
                          capture_output=True, text=True, check=True)
    assert "[params]" in proc.stdout and "k_vx = 0.5" in proc.stdout
