"""LTI plant realization and fixed-step integration.

A strictly proper SISO transfer function is realized in controllable
canonical form and time-marched with classical RK4 under a zero-order
hold on the input. The shipped pipeline model has a pure integrator and
a 3.7 ms lag, so the default step of 1e-4 s resolves its fast pole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PLANT_INPUT = "plant-input"
PLANT_OUTPUT = "plant-output"


class NumericalBlowUp(RuntimeError):
    """The plant state left the finite range during integration."""


@dataclass(frozen=True)
class TransferFunction:
    """SISO transfer function, coefficients highest degree first."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self) -> None:
        num = tuple(float(c) for c in self.num)
        den = tuple(float(c) for c in self.den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if not num or not den:
            raise ValueError("numerator and denominator must be non-empty")
        if not all(math.isfinite(c) for c in num + den):
            raise ValueError("coefficients must be finite")
        if den[0] == 0:
            raise ValueError("leading denominator coefficient must be nonzero")
        # Strictly proper: numerator degree below denominator degree.
        trimmed = _trim_leading_zeros(num)
        if len(trimmed) >= len(den):
            raise ValueError("transfer function must be strictly proper")


def _trim_leading_zeros(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    idx = 0
    while idx < len(coeffs) - 1 and coeffs[idx] == 0:
        idx += 1
    return coeffs[idx:]


# Flow-pipeline model of the spray line: integrator plus a 3.7 ms lag.
PIPELINE_TF = TransferFunction(num=(43956.0,), den=(0.0037, 1.0, 0.0))


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """State-space realization x' = Ax + Bu, y = Cx + Du (D is 0 here)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self) -> None:
        n = self.a.shape[0]
        if self.a.shape != (n, n) or self.b.shape != (n,) or self.c.shape != (n,):
            raise ValueError("inconsistent state-space dimensions")
        for arr in (self.a, self.b, self.c):
            arr.setflags(write=False)

    @property
    def order(self) -> int:
        return self.a.shape[0]


def tf_to_ss(tf: TransferFunction) -> StateSpaceModel:
    """Controllable canonical realization of a strictly proper function.

    The denominator is normalized to a monic polynomial first; the last
    state-matrix row carries its negated coefficients.
    """
    lead = tf.den[0]
    den = np.asarray(tf.den, dtype=float) / lead
    num = np.asarray(_trim_leading_zeros(tf.num), dtype=float) / lead
    n = len(den) - 1
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = 1.0
    # den = [1, a_{n-1}, ..., a_0] highest degree first.
    a[n - 1, :] = -den[1:][::-1]
    b = np.zeros(n)
    b[n - 1] = 1.0
    c = np.zeros(n)
    # c[j] is the numerator coefficient of s^j.
    for j, coeff in enumerate(num[::-1]):
        c[j] = coeff
    return StateSpaceModel(a=a, b=b, c=c, d=0.0)


@dataclass(frozen=True, eq=False)
class PlantState:
    """State vector and the output that goes with it."""

    x: np.ndarray
    y: float

    def __post_init__(self) -> None:
        self.x.setflags(write=False)


def initial_state(model: StateSpaceModel, x0=None) -> PlantState:
    """Plant state for a given initial vector (zero by default)."""
    if x0 is None:
        x = np.zeros(model.order)
    else:
        x = np.asarray(x0, dtype=float).copy()
        if x.shape != (model.order,):
            raise ValueError(f"initial state must have length {model.order}")
    return PlantState(x=x, y=float(model.c @ x))


def plant_step(model: StateSpaceModel, state: PlantState, u: float, dt: float) -> PlantState:
    """One classical RK4 step with the input held constant (zero-order hold)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    a = model.a
    bu = model.b * u
    x = state.x
    k1 = a @ x + bu
    k2 = a @ (x + (0.5 * dt) * k1) + bu
    k3 = a @ (x + (0.5 * dt) * k2) + bu
    k4 = a @ (x + dt * k3) + bu
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NumericalBlowUp(f"non-finite plant state after step with u={u!r}, dt={dt!r}")
    y = float(model.c @ x_next)
    # The output can overflow before the state does when C carries a large gain.
    if not math.isfinite(y):
        raise NumericalBlowUp(f"non-finite plant output after step with u={u!r}, dt={dt!r}")
    return PlantState(x=x_next, y=y)


@dataclass(frozen=True)
class Disturbance:
    """Additive step disturbance on the plant input or output."""

    time: float
    magnitude: float
    port: str = PLANT_INPUT
    shape: str = "step"

    def __post_init__(self) -> None:
        if not math.isfinite(self.time) or self.time < 0:
            raise ValueError(f"activation time must be non-negative, got {self.time!r}")
        if not math.isfinite(self.magnitude):
            raise ValueError(f"magnitude must be finite, got {self.magnitude!r}")
        if self.port not in (PLANT_INPUT, PLANT_OUTPUT):
            raise ValueError(f"unknown disturbance port {self.port!r}")
        if self.shape != "step":
            raise ValueError(f"unsupported disturbance shape {self.shape!r}")


def apply_disturbances(
    u_nominal: float,
    y_nominal: float,
    disturbances: tuple[Disturbance, ...],
    t: float,
) -> tuple[float, float]:
    """Add every active disturbance to its port; activation is inclusive."""
    u_eff = u_nominal
    y_eff = y_nominal
    for dist in disturbances:
        if t >= dist.time:
            if dist.port == PLANT_INPUT:
                u_eff += dist.magnitude
            else:
                y_eff += dist.magnitude
    return u_eff, y_eff
