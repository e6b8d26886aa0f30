import re
import subprocess
import sys

import numpy as np
import pytest

from sprayflow.cli import (
    CSV_HEADER,
    ConfigError,
    load_config_file,
    main,
    read_trajectory_csv,
    resolve_config,
    write_trajectory_csv,
)
from sprayflow.fuzzy import DEFAULT_RULE_TABLE, RuleTable

ROW_PATTERN = re.compile(r"^-?\d+\.\d{9}(,-?\d+\.\d{9}){7}$")


def run_cli(args):
    return main(list(args))


class TestSimulate:
    def test_csv_structure(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = run_cli(["simulate", "--duration", "0.01", "--output", str(out)])
        assert code == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        lines = raw.decode("ascii").splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) - 1 == 101  # floor(0.01/1e-4) + 1 data rows
        for line in lines[1:]:
            assert ROW_PATTERN.match(line)
        stdout = capsys.readouterr().out
        assert "overshoot %" in stdout

    def test_zero_duration_rejected_without_output(self, tmp_path, capsys):
        out = tmp_path / "never.csv"
        code = run_cli(["simulate", "--duration", "0", "--output", str(out)])
        assert code == 1
        assert not out.exists()
        assert "error:" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["simulate", "--controller", "fuzzy-pid", "--duration", "0.05"]
        assert run_cli(args + ["--output", str(a)]) == 0
        assert run_cli(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_blow_up_exit_code(self, tmp_path, capsys):
        out = tmp_path / "partial.csv"
        with np.errstate(over="ignore", invalid="ignore"):
            code = run_cli([
                "simulate", "--kp", "100", "--ki", "0", "--kd", "0",
                "--dt", "0.05", "--duration", "10", "--output", str(out),
            ])
        assert code == 2
        assert out.exists()
        assert "blow-up" in capsys.readouterr().err

    def test_unknown_flag_is_config_error(self, capsys):
        assert run_cli(["simulate", "--warp-speed", "9"]) == 1


class TestCompare:
    def test_zero_scaling_gives_identical_columns(self, capsys):
        code = run_cli([
            "compare", "--duration", "0.05",
            "--kup", "0", "--kui", "0", "--kud", "0",
        ])
        assert code == 0
        for line in capsys.readouterr().out.splitlines()[1:]:
            label, cells = line[:16], line[16:].split()
            assert len(cells) == 2
            assert cells[0] == cells[1], label

    def test_default_scenario_fuzzy_overshoots_less(self, capsys):
        assert run_cli(["compare"]) == 0
        out = capsys.readouterr().out
        row = next(line for line in out.splitlines() if line.startswith("overshoot %"))
        pid_value, fuzzy_value = (float(v) for v in row[16:].split())
        assert fuzzy_value < pid_value

    def test_disturbance_adds_peak_deviation_row(self, capsys):
        code = run_cli([
            "compare", "--duration", "0.2",
            "--disturbance-time", "0.1", "--disturbance-magnitude", "0.001",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert any(line.startswith("peak deviation") for line in out.splitlines())

    def test_no_disturbance_no_peak_row(self, capsys):
        assert run_cli(["compare", "--duration", "0.05"]) == 0
        out = capsys.readouterr().out
        assert not any(line.startswith("peak deviation") for line in out.splitlines())


class TestRules:
    def test_default_dump(self, capsys):
        assert run_cli(["rules"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 7
        assert lines[0].split(",")[0] == "PB/NB/PS"
        # Suspect cells are marked: (E=NM, EC=NS) and (E=NS, EC=PM).
        assert lines[2].split(",")[1] == "PM/NM/NB?"
        assert lines[5].split(",")[2] == "PS/PS/NS?"

    def test_dump_save_load_round_trip(self, tmp_path, capsys):
        assert run_cli(["rules"]) == 0
        text = capsys.readouterr().out
        path = tmp_path / "rules.txt"
        path.write_text(text, encoding="ascii")
        assert RuleTable.load(path) == DEFAULT_RULE_TABLE
        assert run_cli(["rules", "--rules-file", str(path)]) == 0
        assert capsys.readouterr().out == text

    def test_missing_rules_file(self, tmp_path, capsys):
        assert run_cli(["rules", "--rules-file", str(tmp_path / "nope.txt")]) == 1


class TestMetricsCommand:
    def test_recomputes_from_csv(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        assert run_cli(["simulate", "--duration", "0.2", "--output", str(out)]) == 0
        simulate_out = capsys.readouterr().out
        assert run_cli(["metrics", str(out)]) == 0
        metrics_out = capsys.readouterr().out

        def grab(text, label):
            row = next(line for line in text.splitlines() if line.startswith(label))
            return float(row[16:])

        # CSV rounding keeps the recomputed figures within 1e-7.
        for label in ("maximum output", "overshoot %", "final value"):
            assert grab(metrics_out, label) == pytest.approx(
                grab(simulate_out, label), abs=1e-6
            )

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli(["metrics", str(tmp_path / "gone.csv")]) == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,out\n1,2\n", encoding="ascii")
        assert run_cli(["metrics", str(path)]) == 1


class TestConfigFile:
    def test_file_values_and_flag_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text(
            "# demo scenario\n"
            "setpoint = 2.0\n"
            "duration = 0.02\n"
            "dt = 1e-4\n"
            "controller = pid\n"
            "kp = 0.004\n",
            encoding="ascii",
        )
        out = tmp_path / "run.csv"
        code = run_cli(["simulate", "--config", str(cfg), "--setpoint", "3.0",
                        "--output", str(out)])
        assert code == 0
        traj = read_trajectory_csv(str(out))
        assert traj.r[0] == 3.0  # flag beats file
        assert len(traj.t) == 201

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("velocity = 9\n", encoding="ascii")
        with pytest.raises(ConfigError):
            load_config_file(str(cfg))

    def test_bad_number(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("kp = fast\n", encoding="ascii")
        assert run_cli(["simulate", "--config", str(cfg)]) == 1

    def test_non_finite_number(self, capsys):
        assert run_cli(["simulate", "--setpoint", "inf"]) == 1

    def test_missing_config_file(self, tmp_path):
        assert run_cli(["simulate", "--config", str(tmp_path / "none.cfg")]) == 1

    def test_disturbance_needs_both_fields(self, capsys):
        assert run_cli(["compare", "--disturbance-time", "0.5"]) == 1

    def test_rules_file_override(self, tmp_path, capsys):
        # Rewrite the (E=PB, EC=ZO) cell, which fires on the first step of a
        # setpoint step, so the override must change the fuzzy run.
        text = DEFAULT_RULE_TABLE.dump().splitlines()
        entries = text[3].split(",")
        entries[6] = "PB/PB/PB"
        text[3] = ",".join(entries)
        path = tmp_path / "rules.txt"
        path.write_text("\n".join(text) + "\n", encoding="ascii")
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        base = ["simulate", "--controller", "fuzzy-pid", "--duration", "0.02"]
        assert run_cli(base + ["--output", str(out_a)]) == 0
        assert run_cli(base + ["--rules-file", str(path), "--output", str(out_b)]) == 0
        assert out_a.read_bytes() != out_b.read_bytes()

    def test_resolve_defaults(self):
        config = resolve_config({}, {})
        assert config.controller == "pid"
        assert config.setpoint == 5.0
        assert config.plant.num == (43956.0,)
        assert config.plant.den == (0.0037, 1.0, 0.0)


class TestTrajectoryCsvIO:
    def test_round_trip(self, tmp_path):
        from sprayflow.harness import PidConfig, SimScenario, run_closed_loop
        from sprayflow.pid import PidGains

        scenario = SimScenario(
            setpoint=5.0, duration=0.01, dt=1e-4,
            controller=PidConfig(gains=PidGains(0.0045, 0.05, 5e-6)),
        )
        traj = run_closed_loop(scenario)
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, str(path))
        again = read_trajectory_csv(str(path))
        assert np.allclose(again.y, traj.y, atol=5e-10)
        assert np.allclose(again.t, traj.t, atol=5e-10)
        assert again.dt == pytest.approx(traj.dt, abs=1e-9)


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "sprayflow.cli", "rules"],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 0
    assert result.stdout.splitlines()[0].startswith("PB/NB/PS")
