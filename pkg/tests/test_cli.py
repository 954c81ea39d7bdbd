"""CLI contract: outputs, determinism, exit codes, external formats."""

import csv
import io
import json
import os
import subprocess
import sys

import pytest

from hierspec.cli import main

RUN = [sys.executable, "-m", "hierspec.cli"]


def run_cli(args, tmp_path=None, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(RUN + args, capture_output=True, text=True, env=env)


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(lines))


class TestSpectrumCommand:
    def test_closed_form_rows(self):
        out = run_cli(["spectrum", "--nu", "2", "--p", "0.5", "--depth", "3",
                       "--method", "closed"])
        assert out.returncode == 0
        rows = parse_csv(out.stdout)
        assert rows[0] == ["eigenvalue", "multiplicity"]
        values = [(float(a), int(b)) for a, b in rows[1:]]
        assert values == [(1.0, 4), (0.5, 2), (0.25, 1),
                          (pytest.approx(1 / 12), 1)]

    def test_dense_agrees_with_closed(self):
        closed = run_cli(["spectrum", "--nu", "2", "--p", "0.5", "--depth", "3",
                          "--method", "closed"]).stdout
        dense = run_cli(["spectrum", "--nu", "2", "--p", "0.5", "--depth", "3",
                         "--method", "dense"]).stdout
        for (a1, m1), (a2, m2) in zip(parse_csv(closed)[1:],
                                      parse_csv(dense)[1:]):
            assert float(a1) == pytest.approx(float(a2), abs=1e-10)
            assert m1 == m2


class TestHeatCommand:
    def test_trivial_value(self):
        out = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "0", "--r", "0"])
        assert out.returncode == 0
        assert parse_csv(out.stdout)[1] == ["0", "0", "1"]

    def test_profile_columns(self):
        out = run_cli(["heat", "--nu", "4", "--p", "0.5", "--profile",
                       "--t", "100:10000:5"])
        rows = parse_csv(out.stdout)
        assert rows[0] == ["t", "log_phase", "profile"]
        assert len(rows) == 6
        phases = [float(r[1]) for r in rows[1:]]
        assert all(0.0 <= ph < 1.0 for ph in phases)


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            out = run_cli(["walk", "--nu", "2", "--p", "0.5", "--horizon", "9",
                           "--seed", "5", "--output", str(path)])
            assert out.returncode == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_round_trip_exact(self, tmp_path):
        path = tmp_path / "r.json"
        assert run_cli(["resolvent", "--nu", "2", "--p", "0.5", "--r", "1",
                        "--lam", "0.1:10:7", "--format", "json",
                        "--output", str(path)]).returncode == 0
        payload = json.loads(path.read_text())
        from hierspec import resolvent
        from hierspec.lattice import LatticeParams
        for lam, r, value in payload["rows"]:
            exact = resolvent(LatticeParams(2, 0.5), lam, int(r)).real
            assert value == exact  # shortest round-trip repr is lossless

    def test_csv_line_endings(self, tmp_path):
        path = tmp_path / "s.csv"
        run_cli(["spectrum", "--nu", "2", "--p", "0.5", "--depth", "2",
                 "--output", str(path)])
        raw = path.read_bytes()
        assert raw.count(b"\r\n") == raw.count(b"\n")


class TestExitCodes:
    def test_unknown_flag(self):
        assert run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1",
                        "--bogus"]).returncode == 1

    def test_domain_violation_reports_precondition(self):
        out = run_cli(["ids", "--nu", "2", "--p", "0.5", "--lam", "-1"])
        assert out.returncode == 1
        assert "lam" in out.stderr

    def test_bad_parameter_range(self):
        assert run_cli(["heat", "--nu", "1", "--p", "0.5", "--t", "1"]).returncode == 1
        assert run_cli(["heat", "--nu", "2", "--p", "1.5", "--t", "1"]).returncode == 1

    def test_tolerance_override_clamped(self):
        ok = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1",
                      "--tol", "1e-12"])
        assert ok.returncode == 0
        assert "tol=" in ok.stdout
        loose = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1",
                         "--tol", "1e-6"])
        assert loose.returncode == 1
        assert "1e-10" in loose.stderr

    def test_selftest_passes(self):
        out = run_cli(["selftest"])
        assert out.returncode == 0
        assert "PASS" in out.stdout


class TestSchrodingerCommand:
    def test_potential_file(self, tmp_path):
        pot = tmp_path / "v.json"
        pot.write_text('{"sites": [[0, "5.0"]], "origin": 0}')
        out = run_cli(["schrodinger", "--nu", "2", "--p", "0.5", "--depth", "8",
                       "--potential", str(pot), "--gammas", "1.0"])
        assert out.returncode == 0
        rows = dict((r[0], float(r[1])) for r in parse_csv(out.stdout)[1:])
        assert rows["N0"] == 1.0
        assert rows["S_1"] == pytest.approx(rows["lambda_0"])

    def test_delta_shortcut(self):
        out = run_cli(["schrodinger", "--nu", "4", "--p", "0.5", "--depth", "4",
                       "--delta", "0.5@0"])
        rows = dict((r[0], float(r[1])) for r in parse_csv(out.stdout)[1:])
        assert rows["N0"] == 0.0  # below the 2/3 coupling threshold

    def test_requires_one_potential_source(self):
        out = run_cli(["schrodinger", "--nu", "2", "--p", "0.5", "--depth", "4"])
        assert out.returncode == 1


class TestBoundsCommand:
    def test_report_columns_and_flags(self, tmp_path):
        path = tmp_path / "b.csv"
        out = run_cli(["bounds", "--nu", "2", "--p", "0.25", "--depth", "6",
                       "--thetas", "0.2,0.8", "--radius", "4", "--sigma", "0",
                       "--theorems", "clr,bargmann,bargmann-refined",
                       "--output", str(path)])
        assert out.returncode == 0
        rows = parse_csv(path.read_text())
        assert rows[0] == ["theorem", "a", "sigma", "gamma", "theta", "beta",
                           "functional", "actual", "fitted_constant", "flags"]
        by_theorem = {}
        for row in rows[1:]:
            by_theorem.setdefault(row[0], []).append(row)
        assert set(by_theorem) == {"clr", "bargmann", "bargmann-refined"}
        for row in by_theorem["clr"]:
            assert "divergent" in row[9]
        for row in by_theorem["bargmann"]:
            assert float(row[6]) >= 1.0


class TestThreadPool:
    def test_env_cap_respected(self):
        out = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1:100:6"],
                      env_extra={"HIERSPEC_THREADS": "2"})
        assert out.returncode == 0
        base = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1:100:6"],
                       env_extra={"HIERSPEC_THREADS": "1"})
        assert out.stdout == base.stdout

    def test_invalid_env_value(self):
        out = run_cli(["heat", "--nu", "2", "--p", "0.5", "--t", "1,2"],
                      env_extra={"HIERSPEC_THREADS": "many"})
        assert out.returncode == 1


class TestInProcessMain:
    def test_main_returns_exit_codes(self, capsys):
        assert main(["heat", "--nu", "2", "--p", "0.5", "--t", "0"]) == 0
        capsys.readouterr()
        assert main(["ids", "--nu", "2", "--p", "0.5", "--lam", "0"]) == 1
        capsys.readouterr()
