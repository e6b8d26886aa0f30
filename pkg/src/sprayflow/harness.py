"""Closed-loop scenario runner and step-response metrics.

A scenario pairs one plant with one controller and a constant setpoint.
Each step the controller acts on the measurement logged at the previous
sample (no extra computational delay is modeled), disturbances are added
at their ports, and the plant advances by one RK4 step. The logged u
column is the effective plant input and the y column the measured output,
both including any active disturbances, so e = r - y holds row-wise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .adaptive import FuzzyPidController, fuzzy_pid_step
from .adaptive import reset as reset_fuzzy
from .pid import NO_LIMITS, PidGains, PidLimits, PidState, pid_step
from .plant import (
    PIPELINE_TF,
    Disturbance,
    NumericalBlowUp,
    TransferFunction,
    apply_disturbances,
    initial_state,
    plant_step,
    tf_to_ss,
)

MAX_STEPS = 10**8


@dataclass(frozen=True)
class PidConfig:
    """Plain fixed-gain PID controller choice for a scenario."""

    gains: PidGains
    limits: PidLimits = NO_LIMITS


@dataclass(frozen=True)
class SimScenario:
    """Everything a closed-loop run needs."""

    setpoint: float
    duration: float
    dt: float
    controller: PidConfig | FuzzyPidController
    plant: TransferFunction = PIPELINE_TF
    disturbances: tuple[Disturbance, ...] = ()
    initial: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.setpoint):
            raise ValueError(f"setpoint must be finite, got {self.setpoint!r}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.duration / self.dt > MAX_STEPS:
            raise ValueError("duration/dt exceeds the sanity bound of 1e8 steps")
        if not isinstance(self.controller, (PidConfig, FuzzyPidController)):
            raise ValueError(f"unsupported controller {self.controller!r}")
        object.__setattr__(self, "disturbances", tuple(self.disturbances))

    @property
    def steps(self) -> int:
        # Tiny epsilon so an exact multiple is not floored away by roundoff.
        return int(math.floor(self.duration / self.dt + 1e-9))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled closed-loop record, one row per sample."""

    t: np.ndarray
    r: np.ndarray
    e: np.ndarray
    u: np.ndarray
    y: np.ndarray
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray
    dt: float
    blown_up: bool = False

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("r", "e", "u", "y", "kp", "ki", "kd"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has mismatched length")
        for name in ("t", "r", "e", "u", "y", "kp", "ki", "kd"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class StepMetrics:
    """Step-response figures of one trajectory.

    y_final is the last sample; the settled flag reports whether the final
    5% of samples stayed within 1% of it. Percentage-based figures are None
    when y_final is zero.
    """

    y_max: float
    peak_time: float
    settling_time: float
    rise_time: float | None
    y_final: float
    overshoot_pct: float | None
    settled: bool


def _resting_gains(controller: PidConfig | FuzzyPidController) -> PidGains:
    if isinstance(controller, PidConfig):
        return controller.gains
    return controller.base


def run_closed_loop(scenario: SimScenario) -> Trajectory:
    """Simulate one scenario and return its trajectory.

    Row 0 logs the initial condition before any control action (u = 0,
    resting gains). If the plant state blows up, the partial trajectory is
    returned with blown_up set.
    """
    model = tf_to_ss(scenario.plant)
    n_steps = scenario.steps
    n_rows = n_steps + 1
    dt = scenario.dt
    r = scenario.setpoint
    dists = scenario.disturbances

    t = np.arange(n_rows) * dt
    u_log = np.zeros(n_rows)
    y_log = np.zeros(n_rows)
    kp_log = np.zeros(n_rows)
    ki_log = np.zeros(n_rows)
    kd_log = np.zeros(n_rows)

    state = initial_state(model, scenario.initial)
    _, y_meas = apply_disturbances(0.0, state.y, dists, 0.0)
    y_log[0] = y_meas
    rest = _resting_gains(scenario.controller)
    kp_log[0], ki_log[0], kd_log[0] = rest.kp, rest.ki, rest.kd

    controller = scenario.controller
    if isinstance(controller, PidConfig):
        gains, limits = controller.gains, controller.limits
        pid_state = PidState()

        def control(y: float) -> tuple[float, PidGains]:
            nonlocal pid_state
            u, pid_state = pid_step(pid_state, gains, r - y, dt, limits)
            return u, gains

    else:
        # Runs always start from a fresh controller state.
        fuzzy_ctrl = reset_fuzzy(controller)

        def control(y: float) -> tuple[float, PidGains]:
            nonlocal fuzzy_ctrl
            u, effective, fuzzy_ctrl = fuzzy_pid_step(fuzzy_ctrl, r, y, dt)
            return u, effective

    blown_up = False
    rows = n_rows
    for k in range(1, n_rows):
        t_prev = t[k - 1]
        u, effective = control(y_meas)
        u_eff, _ = apply_disturbances(u, 0.0, dists, t_prev)
        try:
            state = plant_step(model, state, u_eff, dt)
        except NumericalBlowUp:
            blown_up = True
            rows = k
            break
        _, y_meas = apply_disturbances(0.0, state.y, dists, t[k])
        u_log[k] = u_eff
        y_log[k] = y_meas
        kp_log[k], ki_log[k], kd_log[k] = effective.kp, effective.ki, effective.kd

    sl = slice(0, rows)
    y_out = y_log[sl]
    return Trajectory(
        t=t[sl].copy(),
        r=np.full(rows, float(r)),
        e=float(r) - y_out,
        u=u_log[sl],
        y=y_out,
        kp=kp_log[sl],
        ki=ki_log[sl],
        kd=kd_log[sl],
        dt=dt,
        blown_up=blown_up,
    )


def compute_metrics(traj: Trajectory) -> StepMetrics:
    """Step-response metrics of a non-empty trajectory.

    The steady value is the last sample; overshoot is the first global
    maximum's excess over it, the settling time the earliest time after
    which every sample stays inside a 2% band, and the rise time the gap
    between the first 10% and 90% crossings.
    """
    y = traj.y
    t = traj.t
    if len(y) == 0:
        raise ValueError("trajectory is empty")
    y_final = float(y[-1])
    peak_idx = int(np.argmax(y))
    y_max = float(y[peak_idx])
    peak_time = float(t[peak_idx])

    tail_start = (19 * len(y)) // 20
    settled = bool(np.all(np.abs(y[tail_start:] - y_final) <= 0.01 * abs(y_final)))

    band = 0.02 * abs(y_final)
    outside = np.flatnonzero(np.abs(y - y_final) > band)
    settling_time = float(t[outside[-1] + 1]) if outside.size else float(t[0])

    if y_final == 0.0:
        overshoot_pct = None
        rise_time = None
    else:
        overshoot_pct = (y_max - y_final) / abs(y_final) * 100.0
        rise_time = _rise_time(t, y, y_final)
    return StepMetrics(
        y_max=y_max,
        peak_time=peak_time,
        settling_time=settling_time,
        rise_time=rise_time,
        y_final=y_final,
        overshoot_pct=overshoot_pct,
        settled=settled,
    )


def _rise_time(t: np.ndarray, y: np.ndarray, y_final: float) -> float | None:
    sign = 1.0 if y_final > 0 else -1.0
    crossings = []
    for fraction in (0.1, 0.9):
        hits = np.flatnonzero(sign * y >= sign * fraction * y_final)
        if hits.size == 0:
            return None
        crossings.append(float(t[hits[0]]))
    return crossings[1] - crossings[0]


def peak_deviation(traj: Trajectory, after_time: float) -> float:
    """Largest |y - r| at or after a given time; gauges disturbance rejection."""
    mask = traj.t >= after_time
    if not np.any(mask):
        raise ValueError(f"no samples at or after t={after_time!r}")
    return float(np.max(np.abs(traj.y[mask] - traj.r[mask])))


@dataclass(frozen=True)
class ComparisonResult:
    """Metrics (and the trajectories behind them) for a PID/fuzzy-PID pair.

    Iterating yields the two metric sets, PID first.
    """

    pid_metrics: StepMetrics
    fuzzy_metrics: StepMetrics
    pid_trajectory: Trajectory
    fuzzy_trajectory: Trajectory

    def __iter__(self):
        return iter((self.pid_metrics, self.fuzzy_metrics))


def compare_controllers(
    scenario: SimScenario,
    pid_config: PidConfig,
    fuzzy_config: FuzzyPidController,
) -> ComparisonResult:
    """Run both controllers on the same scenario from identical initial conditions."""
    pid_traj = run_closed_loop(replace(scenario, controller=pid_config))
    fuzzy_traj = run_closed_loop(replace(scenario, controller=fuzzy_config))
    return ComparisonResult(
        pid_metrics=compute_metrics(pid_traj),
        fuzzy_metrics=compute_metrics(fuzzy_traj),
        pid_trajectory=pid_traj,
        fuzzy_trajectory=fuzzy_traj,
    )
