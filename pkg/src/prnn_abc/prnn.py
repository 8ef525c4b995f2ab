"""Projection recurrent network that solves the box-constrained QP online.

The optimizer is a scalar ODE in the dual state phi,

    dphi/dt = vartheta * (PR(u - phi) - u),      u = (phi - P) / Q,

where PR is the nearest-point projection onto [u_min, u_max].  Its
equilibria are exactly the QP minimizers: at rest PR(u - phi) = u, which is
the fixed-point form of the variational-inequality optimality condition.
The control output u is algebraically coupled to phi at every instant, so
the network doubles as a real-time controller state.

Rate-constant placement: with `rate_convention="multiply"` (default) a larger
vartheta speeds convergence, matching the interior closed form
phi(t) = phi0 * exp(-vartheta*t).  `"divide"` keeps the alternative reading
vartheta * dphi/dt = PR(u - phi) - u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .qp import QpCoefficients, solve_oracle

_RATE_CONVENTIONS = ("multiply", "divide")


class IntegrationDivergedError(RuntimeError):
    """Network integration left the finite range."""


@dataclass(frozen=True)
class PrnnConfig:
    """Integration settings for the network ODE.

    vartheta: convergence-rate constant (1/s), > 0.
    inner_dt: RK4 sub-step (s); inner_dt * inner_steps spans one control period.
    tol: optional residual threshold for early termination inside relax().
    """

    vartheta: float = 50.0
    inner_dt: float = 0.0005
    inner_steps: int = 20
    tol: float | None = None
    rate_convention: str = "multiply"

    def __post_init__(self):
        if not self.vartheta > 0:
            raise ValueError("vartheta > 0 required")
        if not self.inner_dt > 0:
            raise ValueError("inner_dt > 0 required")
        if self.inner_steps < 1:
            raise ValueError("inner_steps >= 1 required")
        if self.rate_convention not in _RATE_CONVENTIONS:
            raise ValueError(f"unknown rate_convention {self.rate_convention!r}")

    @staticmethod
    def for_period(
        period: float,
        vartheta: float = 50.0,
        inner_steps: int = 20,
        tol: float | None = None,
        rate_convention: str = "multiply",
    ) -> "PrnnConfig":
        """Config whose sub-steps exactly tile one control period."""
        return PrnnConfig(
            vartheta=vartheta,
            inner_dt=period / inner_steps,
            inner_steps=inner_steps,
            tol=tol,
            rate_convention=rate_convention,
        )


@dataclass(frozen=True)
class PrnnState:
    """Network state phi and the algebraically coupled control output u."""

    phi: float
    u: float

    @staticmethod
    def from_phi(phi: float, q: QpCoefficients) -> "PrnnState":
        return PrnnState(phi=phi, u=control_output(phi, q))


@dataclass(frozen=True)
class RelaxResult:
    state: PrnnState
    residual: float
    substeps: int


def project(u: float, bounds: tuple[float, float]) -> float:
    """Nearest point of the interval [u_min, u_max]; coordinate clamp."""
    lo, hi = bounds
    if u < lo:
        return lo
    if u > hi:
        return hi
    return u


def control_output(phi: float, q: QpCoefficients) -> float:
    """u = Q^-1 (phi - P), the algebraic output equation of the network."""
    return (phi - q.P) / q.Q


def equilibrium_phi(q: QpCoefficients) -> float:
    """phi* = Q*u* + P at the QP minimizer u*; the network's rest point."""
    return q.Q * solve_oracle(q) + q.P


def equilibrium_residual(phi: float, q: QpCoefficients) -> float:
    """|PR(u - phi) - u|; zero exactly at an equilibrium."""
    u = control_output(phi, q)
    return abs(project(u - phi, (q.u_min, q.u_max)) - u)


def _phi_rate(phi: float, q: QpCoefficients, cfg: PrnnConfig) -> float:
    u = control_output(phi, q)
    raw = project(u - phi, (q.u_min, q.u_max)) - u
    if cfg.rate_convention == "multiply":
        return cfg.vartheta * raw
    return raw / cfg.vartheta


def phi_derivative(s: PrnnState, q: QpCoefficients, cfg: PrnnConfig) -> float:
    """Right-hand side of the network ODE evaluated at the current state."""
    return _phi_rate(s.phi, q, cfg)


def _rk4_substep(phi: float, q: QpCoefficients, cfg: PrnnConfig, h: float) -> float:
    k1 = _phi_rate(phi, q, cfg)
    k2 = _phi_rate(phi + 0.5 * h * k1, q, cfg)
    k3 = _phi_rate(phi + 0.5 * h * k2, q, cfg)
    k4 = _phi_rate(phi + h * k3, q, cfg)
    return phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def relax(s: PrnnState, q: QpCoefficients, cfg: PrnnConfig) -> RelaxResult:
    """Integrate the network over one control period with frozen P, Q.

    Runs cfg.inner_steps RK4 sub-steps of cfg.inner_dt, recomputing
    u = Q^-1 (phi - P) after each.  If cfg.tol is set, stops as soon as the
    equilibrium residual falls below it.
    """
    phi = s.phi
    taken = 0
    for _ in range(cfg.inner_steps):
        if cfg.tol is not None and equilibrium_residual(phi, q) <= cfg.tol:
            break
        phi = _rk4_substep(phi, q, cfg, cfg.inner_dt)
        taken += 1
        if not math.isfinite(phi):
            raise IntegrationDivergedError(
                f"network state became non-finite after {taken} sub-steps"
            )
    return RelaxResult(
        state=PrnnState.from_phi(phi, q),
        residual=equilibrium_residual(phi, q),
        substeps=taken,
    )


def relax_until(
    s: PrnnState,
    q: QpCoefficients,
    cfg: PrnnConfig,
    tol: float,
    max_steps: int = 2_000_000,
) -> RelaxResult:
    """Integrate with frozen coefficients until the residual reaches tol.

    Verification-oriented variant of relax(): ignores cfg.inner_steps and
    keeps sub-stepping (cfg.inner_dt) until |PR(u - phi) - u| <= tol or
    max_steps is exhausted.
    """
    phi = s.phi
    for taken in range(max_steps + 1):
        res = equilibrium_residual(phi, q)
        if res <= tol:
            return RelaxResult(PrnnState.from_phi(phi, q), res, taken)
        phi = _rk4_substep(phi, q, cfg, cfg.inner_dt)
        if not math.isfinite(phi):
            raise IntegrationDivergedError(
                f"network state became non-finite after {taken + 1} sub-steps"
            )
    return RelaxResult(
        PrnnState.from_phi(phi, q), equilibrium_residual(phi, q), max_steps
    )


def stationarity_residual(s: PrnnState, q: QpCoefficients) -> float:
    """Q*u + P - phi; identically zero when u came from the output equation."""
    return q.Q * s.u + q.P - s.phi


def stable_inner_dt(q: QpCoefficients, vartheta: float, safety: float = 0.5) -> float:
    """Sub-step keeping RK4 stable for both regimes of the piecewise dynamics.

    The interior regime decays at rate vartheta, the clamped regime at
    vartheta/Q; the stiffer of the two sets the step bound.
    """
    return safety * min(1.0, q.Q) / vartheta
