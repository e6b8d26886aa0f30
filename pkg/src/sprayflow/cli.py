"""Command-line front end.

Subcommands: simulate (run one closed loop, write the trajectory CSV and
print its metrics), compare (PID versus fuzzy-PID on the same scenario),
rules (dump the rule table in the override-file format) and metrics
(recompute step-response figures from an existing trajectory CSV).

Configuration is a flat key = value text file with '#' comments;
command-line flags with the same names override file values. All CSV
output is byte-reproducible: fixed-point with nine fractional digits,
comma separated, LF terminated.

Exit codes: 0 success, 1 configuration error, 2 numerical blow-up.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import presets
from .adaptive import FuzzyPidController
from .fuzzy import DEFAULT_RULE_TABLE, RuleTable, ScalingFactors
from .harness import (
    PidConfig,
    SimScenario,
    StepMetrics,
    Trajectory,
    compute_metrics,
    peak_deviation,
    run_closed_loop,
)
from .pid import PidGains
from .plant import PLANT_INPUT, PLANT_OUTPUT, Disturbance, TransferFunction

CSV_HEADER = "t,r,e,u,y,kp,ki,kd"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2

_SCALAR_KEYS = (
    "setpoint",
    "duration",
    "dt",
    "kp",
    "ki",
    "kd",
    "ke",
    "kec",
    "kup",
    "kui",
    "kud",
    "disturbance_time",
    "disturbance_magnitude",
)
_STRING_KEYS = ("controller", "plant_num", "plant_den", "disturbance_port", "rules_file", "output")
CONFIG_KEYS = frozenset(_SCALAR_KEYS + _STRING_KEYS)


class ConfigError(ValueError):
    """Bad configuration file, key or value."""


def _fmt9(value: float) -> str:
    # Adding positive zero folds -0.0 into 0.0 before formatting.
    return f"{value + 0.0:.9f}"


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """Write a trajectory in the canonical byte-reproducible CSV format."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in zip(traj.t, traj.r, traj.e, traj.u, traj.y, traj.kp, traj.ki, traj.kd):
            fh.write(",".join(_fmt9(v) for v in row) + "\n")


def read_trajectory_csv(path: str) -> Trajectory:
    """Read a trajectory CSV produced by write_trajectory_csv."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read trajectory file: {exc}") from exc
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"trajectory file must start with header {CSV_HEADER!r}")
    if len(lines) < 2:
        raise ConfigError("trajectory file has no data rows")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise ConfigError(f"malformed trajectory row: {exc}") from exc
    if data.shape[1] != 8:
        raise ConfigError("trajectory rows must have 8 fields")
    t = data[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    return Trajectory(
        t=t,
        r=data[:, 1],
        e=data[:, 2],
        u=data[:, 3],
        y=data[:, 4],
        kp=data[:, 5],
        ki=data[:, 6],
        kd=data[:, 7],
        dt=dt,
    )


def load_config_file(path: str) -> dict[str, str]:
    """Parse a flat key = value config file with '#' comments."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _parse_float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return value


def _parse_coefficients(key: str, text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ConfigError(f"{key}: empty coefficient list")
    return tuple(_parse_float(key, p) for p in parts)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved configuration for the simulate and compare commands."""

    setpoint: float
    duration: float
    dt: float
    controller: str
    gains: PidGains
    factors: ScalingFactors
    table: RuleTable
    plant: TransferFunction
    disturbances: tuple[Disturbance, ...]
    output: str


_DEFAULTS: dict[str, str] = {
    "setpoint": repr(presets.DEFAULT_SETPOINT),
    "duration": repr(presets.DEFAULT_DURATION),
    "dt": repr(presets.DEFAULT_DT),
    "controller": "pid",
    "kp": repr(presets.DEFAULT_BASE_GAINS.kp),
    "ki": repr(presets.DEFAULT_BASE_GAINS.ki),
    "kd": repr(presets.DEFAULT_BASE_GAINS.kd),
    "ke": repr(presets.DEFAULT_FACTORS.ke),
    "kec": repr(presets.DEFAULT_FACTORS.kec),
    "kup": repr(presets.DEFAULT_FACTORS.kup),
    "kui": repr(presets.DEFAULT_FACTORS.kui),
    "kud": repr(presets.DEFAULT_FACTORS.kud),
    "plant_num": "43956",
    "plant_den": "0.0037 1 0",
    "output": "trajectory.csv",
}


def resolve_config(file_values: dict[str, str], overrides: dict[str, str]) -> ScenarioConfig:
    """Merge defaults, config-file values and flag overrides into one config."""
    merged = dict(_DEFAULTS)
    merged.update(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    controller = merged["controller"]
    if controller not in ("pid", "fuzzy-pid"):
        raise ConfigError(f"controller must be 'pid' or 'fuzzy-pid', got {controller!r}")

    try:
        gains = PidGains(
            kp=_parse_float("kp", merged["kp"]),
            ki=_parse_float("ki", merged["ki"]),
            kd=_parse_float("kd", merged["kd"]),
        )
        factors = ScalingFactors(
            ke=_parse_float("ke", merged["ke"]),
            kec=_parse_float("kec", merged["kec"]),
            kup=_parse_float("kup", merged["kup"]),
            kui=_parse_float("kui", merged["kui"]),
            kud=_parse_float("kud", merged["kud"]),
        )
        plant = TransferFunction(
            num=_parse_coefficients("plant_num", merged["plant_num"]),
            den=_parse_coefficients("plant_den", merged["plant_den"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    disturbances: tuple[Disturbance, ...] = ()
    if "disturbance_time" in merged or "disturbance_magnitude" in merged:
        if not ("disturbance_time" in merged and "disturbance_magnitude" in merged):
            raise ConfigError("disturbance_time and disturbance_magnitude must be given together")
        port = merged.get("disturbance_port", PLANT_INPUT)
        if port not in (PLANT_INPUT, PLANT_OUTPUT):
            raise ConfigError(f"disturbance_port must be {PLANT_INPUT!r} or {PLANT_OUTPUT!r}")
        try:
            disturbances = (
                Disturbance(
                    time=_parse_float("disturbance_time", merged["disturbance_time"]),
                    magnitude=_parse_float(
                        "disturbance_magnitude", merged["disturbance_magnitude"]
                    ),
                    port=port,
                ),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    elif "disturbance_port" in merged:
        raise ConfigError("disturbance_port given without disturbance_time/magnitude")

    table = DEFAULT_RULE_TABLE
    if "rules_file" in merged:
        try:
            table = RuleTable.load(merged["rules_file"])
        except OSError as exc:
            raise ConfigError(f"cannot read rules file: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad rules file: {exc}") from None

    return ScenarioConfig(
        setpoint=_parse_float("setpoint", merged["setpoint"]),
        duration=_parse_float("duration", merged["duration"]),
        dt=_parse_float("dt", merged["dt"]),
        controller=controller,
        gains=gains,
        factors=factors,
        table=table,
        plant=plant,
        disturbances=disturbances,
        output=merged["output"],
    )


def _scenario(config: ScenarioConfig, controller) -> SimScenario:
    try:
        return SimScenario(
            setpoint=config.setpoint,
            duration=config.duration,
            dt=config.dt,
            controller=controller,
            plant=config.plant,
            disturbances=config.disturbances,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _pid_config(config: ScenarioConfig) -> PidConfig:
    return PidConfig(gains=config.gains)


def _fuzzy_config(config: ScenarioConfig) -> FuzzyPidController:
    return FuzzyPidController(base=config.gains, factors=config.factors, table=config.table)


_METRIC_ROWS = (
    ("maximum output", "y_max"),
    ("peak time", "peak_time"),
    ("settling time", "settling_time"),
    ("rise time", "rise_time"),
    ("final value", "y_final"),
    ("overshoot %", "overshoot_pct"),
)


def _metric_cell(metrics: StepMetrics, attr: str) -> str:
    value = getattr(metrics, attr)
    return "undefined" if value is None else _fmt9(value)


def print_metrics(metrics: StepMetrics, out=None) -> None:
    out = sys.stdout if out is None else out
    for label, attr in _METRIC_ROWS:
        out.write(f"{label:<16}{_metric_cell(metrics, attr)}\n")
    out.write(f"{'settled':<16}{'yes' if metrics.settled else 'no'}\n")


def cmd_simulate(config: ScenarioConfig) -> int:
    controller = _pid_config(config) if config.controller == "pid" else _fuzzy_config(config)
    traj = run_closed_loop(_scenario(config, controller))
    try:
        write_trajectory_csv(traj, config.output)
    except OSError as exc:
        raise ConfigError(f"cannot write output file: {exc}") from exc
    if traj.blown_up:
        print("numerical blow-up: partial trajectory written", file=sys.stderr)
        return EXIT_BLOWUP
    print_metrics(compute_metrics(traj))
    return EXIT_OK


def cmd_compare(config: ScenarioConfig) -> int:
    scenario = _scenario(config, _pid_config(config))
    trajectories = {}
    for name, controller in (("pid", _pid_config(config)), ("fuzzy-pid", _fuzzy_config(config))):
        traj = run_closed_loop(_scenario(config, controller))
        if traj.blown_up:
            print(f"numerical blow-up in {name} run", file=sys.stderr)
            return EXIT_BLOWUP
        trajectories[name] = traj
    metrics = {name: compute_metrics(traj) for name, traj in trajectories.items()}

    out = sys.stdout
    out.write(f"{'metric':<16}{'pid':<20}{'fuzzy-pid':<20}\n")
    for label, attr in _METRIC_ROWS:
        cells = [_metric_cell(metrics[name], attr) for name in ("pid", "fuzzy-pid")]
        out.write(f"{label:<16}{cells[0]:<20}{cells[1]:<20}\n")
    flags = ["yes" if metrics[name].settled else "no" for name in ("pid", "fuzzy-pid")]
    out.write(f"{'settled':<16}{flags[0]:<20}{flags[1]:<20}\n")
    if scenario.disturbances:
        t0 = min(d.time for d in scenario.disturbances)
        cells = [_fmt9(peak_deviation(trajectories[name], t0)) for name in ("pid", "fuzzy-pid")]
        out.write(f"{'peak deviation':<16}{cells[0]:<20}{cells[1]:<20}\n")
    return EXIT_OK


def cmd_rules(rules_file: str | None) -> int:
    table = DEFAULT_RULE_TABLE
    if rules_file is not None:
        try:
            table = RuleTable.load(rules_file)
        except OSError as exc:
            raise ConfigError(f"cannot read rules file: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad rules file: {exc}") from None
    sys.stdout.write(table.dump())
    return EXIT_OK


def cmd_metrics(csv_path: str) -> int:
    traj = read_trajectory_csv(csv_path)
    print_metrics(compute_metrics(traj))
    return EXIT_OK


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="path to a key = value config file")
    for key in _SCALAR_KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        parser.add_argument(*flags, dest=key, default=None, help=f"override {key}")
    for key in ("controller", "plant_num", "plant_den", "disturbance_port", "rules_file", "output"):
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        parser.add_argument(*flags, dest=key, default=None, help=f"override {key}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sprayflow",
        description="Closed-loop flow-control simulation: PID and adaptive fuzzy-PID.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="run one closed loop and export its trajectory CSV")
    _add_override_flags(sim)
    cmp_parser = sub.add_parser("compare", help="run PID and fuzzy-PID on the same scenario")
    _add_override_flags(cmp_parser)
    rules = sub.add_parser("rules", help="print the rule table in the override-file format")
    rules.add_argument("--rules-file", "--rules_file", dest="rules_file", default=None)
    metrics = sub.add_parser("metrics", help="recompute metrics from a trajectory CSV")
    metrics.add_argument("csv_path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        if args.command == "rules":
            return cmd_rules(args.rules_file)
        if args.command == "metrics":
            return cmd_metrics(args.csv_path)
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {key: getattr(args, key) for key in CONFIG_KEYS}
        config = resolve_config(file_values, overrides)
        if args.command == "simulate":
            return cmd_simulate(config)
        return cmd_compare(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
