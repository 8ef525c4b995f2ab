"""Backstepping error coordinates, virtual control law, and Lyapunov functions.

The tracking error S1 = x1 - x1d is stabilized through the virtual control
gamma1 = -c1*S1; the velocity-level error S2 = x2 - dx1d - gamma1 measures
how far the real velocity is from that virtual law.  V2 = (S1^2 + S2^2)/2
certifies the design: under the exact feedback its derivative is
-c1*S1^2 - c2*S2^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .plant import PlantState


@dataclass(frozen=True)
class Gains:
    """Virtual-control gains; both must be strictly positive."""

    c1: float = 2.0
    c2: float = 2.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError("c1 > 0 required")
        if not self.c2 > 0:
            raise ValueError("c2 > 0 required")


_REFERENCE_KINDS = ("constant", "sinusoid", "smoothstep")


@dataclass(frozen=True)
class ReferenceSignal:
    """Analytic reference trajectory with exact first and second derivatives.

    constant:   x1d = setpoint
    sinusoid:   x1d = amplitude * sin(2*pi*frequency*t)
    smoothstep: quintic C^2 blend from `start` to `setpoint` over `ramp_time`
                seconds, then held.
    """

    kind: str = "constant"
    setpoint: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    ramp_time: float = 0.0
    start: float = 0.0

    def __post_init__(self):
        if self.kind not in _REFERENCE_KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "sinusoid" and not self.frequency > 0:
            raise ValueError("sinusoid reference needs frequency > 0")
        if self.kind == "smoothstep" and not self.ramp_time > 0:
            raise ValueError("smoothstep reference needs ramp_time > 0")


def reference_at(ref: ReferenceSignal, t: float) -> tuple[float, float, float]:
    """Reference triple (x1d, dx1d, ddx1d) at time t >= 0."""
    if ref.kind == "constant":
        return ref.setpoint, 0.0, 0.0
    if ref.kind == "sinusoid":
        w = 2.0 * math.pi * ref.frequency
        return (
            ref.amplitude * math.sin(w * t),
            ref.amplitude * w * math.cos(w * t),
            -ref.amplitude * w * w * math.sin(w * t),
        )
    # smoothstep
    if t >= ref.ramp_time:
        return ref.setpoint, 0.0, 0.0
    s = t / ref.ramp_time
    span = ref.setpoint - ref.start
    h = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    dh = 30.0 * s**2 * (1.0 - s) ** 2
    ddh = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return (
        ref.start + span * h,
        span * dh / ref.ramp_time,
        span * ddh / ref.ramp_time**2,
    )


@dataclass(frozen=True)
class ErrorCoords:
    s1: float      # tracking error x1 - x1d (rad)
    s2: float      # velocity-level error x2 - dx1d - gamma1 (rad/s)
    gamma1: float  # first virtual control -c1*s1 (rad/s)


def error_coords(
    state: PlantState, refs: tuple[float, float, float], gains: Gains
) -> ErrorCoords:
    """Backstepping error coordinates of a plant state against a reference triple."""
    x1d, dx1d, _ = refs
    s1 = state.x1 - x1d
    gamma1 = -gains.c1 * s1
    s2 = state.x2 - dx1d - gamma1
    return ErrorCoords(s1=s1, s2=s2, gamma1=gamma1)


def lyapunov_v1(e: ErrorCoords) -> float:
    return 0.5 * e.s1**2


def lyapunov_v2(e: ErrorCoords) -> float:
    """Composite Lyapunov function V2 = (S1^2 + S2^2) / 2."""
    return 0.5 * e.s1**2 + 0.5 * e.s2**2


def ideal_v2_dot(e: ErrorCoords, gains: Gains) -> float:
    """Closed-loop dV2/dt under the exact unconstrained feedback; always <= 0."""
    return -gains.c1 * e.s1**2 - gains.c2 * e.s2**2


def gamma1_rate(e: ErrorCoords, gains: Gains) -> float:
    """Closed-form d(gamma1)/dt = -c1*S2 + c1^2*S1 (never differenced numerically)."""
    return -gains.c1 * e.s2 + gains.c1**2 * e.s1


def s2_rate(
    a: float, b: float, u: float, ddx1d: float, e: ErrorCoords, gains: Gains
) -> float:
    """Closed-form dS2/dt = A + B*u - ddx1d + c1*S2 - c1^2*S1."""
    return a + b * u - ddx1d + gains.c1 * e.s2 - gains.c1**2 * e.s1


def exact_feedback(
    a: float, b: float, ddx1d: float, e: ErrorCoords, gains: Gains
) -> float:
    """Force solving A + B*u - ddx1d + (c1+c2)*S2 + (1-c1^2)*S1 = 0.

    This is the exact stabilizing law that yields dV2/dt = -c1*S1^2 - c2*S2^2;
    it requires B != 0 and ignores actuator bounds.
    """
    target = a - ddx1d + (gains.c1 + gains.c2) * e.s2 + (1.0 - gains.c1**2) * e.s1
    return -target / b
