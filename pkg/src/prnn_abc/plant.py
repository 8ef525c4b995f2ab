"""Nonlinear inverted-pendulum angle dynamics and fixed-step RK4 integration.

The plant is the angle subsystem of a pendulum on a cart: state (x1, x2) =
(angle from upright, angular velocity), one force input u, an additive
disturbance d on the acceleration channel, and output y = x1.  The angular
acceleration splits into a control-free drift A(x) and an input gain B(x),
so that dx2/dt = A(x) + B(x) * u + d.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """A dynamics evaluation received a non-finite input."""


class IntegrationBlowupError(RuntimeError):
    """A plant step produced a non-finite state."""


@dataclass(frozen=True)
class PendulumParams:
    """Physical constants of the pendulum on a cart.

    g: gravitational acceleration (m/s^2), m_c: cart mass (kg),
    m: pendulum mass (kg), l: length to the pendulum center of mass (m).
    """

    g: float = 9.8
    m_c: float = 1.0
    m: float = 0.1
    l: float = 0.5

    def __post_init__(self):
        for name in ("g", "m_c", "m", "l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"PendulumParams.{name} must be strictly positive")


@dataclass(frozen=True)
class PlantState:
    x1: float  # pendulum angle from upright (rad)
    x2: float  # angular velocity (rad/s)

    def controllable(self) -> bool:
        """True while |x1| < pi/2, where the input gain B keeps its sign."""
        return abs(self.x1) < math.pi / 2


_DISTURBANCE_KINDS = ("none", "constant", "sinusoid", "bounded-uniform-random")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Acceleration disturbance d, in rad/s^2 equivalent units."""

    kind: str = "none"
    amplitude: float = 0.0
    frequency: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("disturbance amplitude must be >= 0")
        if self.kind == "sinusoid" and not self.frequency > 0:
            raise ValueError("sinusoid disturbance needs frequency > 0")


def disturbance_value(spec: DisturbanceSpec, t: float) -> float:
    """Sample the disturbance at time t; a pure function of (spec, t)."""
    if spec.kind == "none":
        return 0.0
    if spec.kind == "constant":
        return spec.amplitude
    if spec.kind == "sinusoid":
        return spec.amplitude * math.sin(2.0 * math.pi * spec.frequency * t)
    # bounded-uniform-random: keyed by (seed, bit pattern of t) so that RK4
    # sub-stage sampling is reproducible and independent of call order
    bits = struct.unpack("<Q", struct.pack("<d", float(t)))[0]
    rng = np.random.default_rng((spec.seed, bits))
    return float(rng.uniform(-spec.amplitude, spec.amplitude))


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"non-finite {name}: {v!r}")


def _denominator(params: PendulumParams, x1: float) -> float:
    # bounded away from 0 for any physical parameters with m < 3(m_c+m)/4
    m_sum = params.m_c + params.m
    return params.l * (4.0 / 3.0 - params.m * math.cos(x1) ** 2 / m_sum)


def drift_term(params: PendulumParams, state: PlantState) -> float:
    """Control-free part A(x) of the angular acceleration."""
    _check_finite(x1=state.x1, x2=state.x2)
    m_sum = params.m_c + params.m
    num = (
        params.g * math.sin(state.x1)
        - params.m * params.l * state.x2**2 * math.cos(state.x1) * math.sin(state.x1) / m_sum
    )
    return num / _denominator(params, state.x1)


def gain_term(params: PendulumParams, state: PlantState) -> float:
    """Input gain B(x) multiplying the force u in the acceleration."""
    _check_finite(x1=state.x1, x2=state.x2)
    m_sum = params.m_c + params.m
    return (math.cos(state.x1) / m_sum) / _denominator(params, state.x1)


def derivatives(
    params: PendulumParams, state: PlantState, u: float, d: float = 0.0
) -> tuple[float, float]:
    """State derivative (dx1, dx2) = (x2, A + B*u + d)."""
    _check_finite(u=u, d=d)
    a = drift_term(params, state)
    b = gain_term(params, state)
    return state.x2, a + b * u + d


def step(
    params: PendulumParams,
    state: PlantState,
    u: float,
    disturbance: DisturbanceSpec,
    t: float,
    dt: float,
) -> PlantState:
    """Advance the plant by one classic RK4 step of size dt.

    u is held constant over the step (zero-order hold); the disturbance is
    sampled at each RK4 stage time.  Raises IntegrationBlowupError if the
    update leaves the finite range.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    _check_finite(u=u)

    def f(x1: float, x2: float, ts: float) -> tuple[float, float]:
        s = PlantState(x1, x2)
        return x2, drift_term(params, s) + gain_term(params, s) * u + disturbance_value(
            disturbance, ts
        )

    x1, x2 = state.x1, state.x2
    try:
        k1 = f(x1, x2, t)
        k2 = f(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1], t + 0.5 * dt)
        k3 = f(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1], t + 0.5 * dt)
        k4 = f(x1 + dt * k3[0], x2 + dt * k3[1], t + dt)
    except (OverflowError, DomainError) as err:
        # stage values left the representable range (e.g. x2^2 overflow)
        raise IntegrationBlowupError(
            f"plant state became non-finite at t={t:.6f}"
        ) from err
    nx1 = x1 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    nx2 = x2 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    if not (math.isfinite(nx1) and math.isfinite(nx2)):
        raise IntegrationBlowupError(f"plant state became non-finite at t={t + dt:.6f}")
    return PlantState(nx1, nx2)


def mechanical_energy(params: PendulumParams, state: PlantState) -> float:
    """Energy-like invariant of the unforced angle dynamics.

    E = 1/2 * [(4/3) l (m_c+m) - m l cos^2 x1] * x2^2 + g (m_c+m) cos x1
    is exactly conserved by the continuous model when u = d = 0, which makes
    its drift a direct measure of integration error.
    """
    m_sum = params.m_c + params.m
    inertia = (4.0 / 3.0) * params.l * m_sum - params.m * params.l * math.cos(state.x1) ** 2
    return 0.5 * inertia * state.x2**2 + params.g * m_sum * math.cos(state.x1)
