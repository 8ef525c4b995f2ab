"""Closed-loop simulation: plant, QP assembly, network optimizer, estimator.

Each control period the loop (1) reads the state and forms backstepping
errors, (2) updates the recursive estimator and assembles the QP
coefficients (nominal or adaptive), (3) relaxes the projection network over
the period with frozen coefficients, and (4) applies the projected control
to the plant through a train of RK4 sub-steps.  Traces carry everything the
Lyapunov monitors need, so stability claims are checked on logged data.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import plant, prnn, qp, rls
from .backstepping import (
    ErrorCoords,
    Gains,
    ReferenceSignal,
    error_coords,
    exact_feedback,
    ideal_v2_dot,
    lyapunov_v2,
    reference_at,
)
from .plant import DisturbanceSpec, IntegrationBlowupError, PendulumParams, PlantState
from .prnn import PrnnConfig, PrnnState
from .qp import Weights

PRNN_RESIDUAL_SETTLED = 1e-6  # threshold for the time-to-residual summary column


@dataclass(frozen=True)
class Timing:
    """Loop timing; the control period must tile into whole plant steps."""

    plant_dt: float = 0.001
    control_period: float = 0.01
    duration: float = 5.0

    def __post_init__(self):
        if not 0 < self.plant_dt <= self.control_period:
            raise ValueError("need 0 < plant_dt <= control_period")
        if not self.duration > 0:
            raise ValueError("duration > 0 required")
        ratio = self.control_period / self.plant_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("control_period must be an integer multiple of plant_dt")

    @property
    def substeps(self) -> int:
        return round(self.control_period / self.plant_dt)

    @property
    def control_steps(self) -> int:
        return round(self.duration / self.control_period)


@dataclass(frozen=True)
class RlsOptions:
    """Estimator initialization and gating knobs."""

    theta0_perturbation: float = 0.3
    m0_scale: float = 100.0
    warmup_steps: int = 50
    excitation_gate: float = 1e-8
    theta0: tuple[float, float, float] | None = None  # explicit initial estimate

    def __post_init__(self):
        if self.theta0_perturbation < 0:
            raise ValueError("theta0_perturbation must be >= 0")
        if not self.m0_scale > 0:
            raise ValueError("m0_scale > 0 required")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """Complete description of one closed-loop experiment."""

    params: PendulumParams = field(default_factory=PendulumParams)
    initial: PlantState = field(default_factory=lambda: PlantState(0.1, 0.0))
    reference: ReferenceSignal = field(default_factory=ReferenceSignal)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    gains: Gains = field(default_factory=Gains)
    weights: Weights = field(default_factory=Weights)
    bounds: tuple[float, float] = (-30.0, 30.0)
    prnn: PrnnConfig = field(default_factory=PrnnConfig)
    timing: Timing = field(default_factory=Timing)
    adaptive: bool = False
    rls: RlsOptions = field(default_factory=RlsOptions)
    seed: int = 0
    settle_tol: float = 0.01

    def __post_init__(self):
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError("bounds must satisfy u_min < u_max")
        tiled = self.prnn.inner_dt * self.prnn.inner_steps
        if abs(tiled - self.timing.control_period) > 1e-9 * self.timing.control_period:
            raise ValueError(
                "prnn.inner_dt * prnn.inner_steps must equal the control period"
            )
        if not self.settle_tol > 0:
            raise ValueError("settle_tol > 0 required")


def default_scenario() -> Scenario:
    """Bundled stabilization scenario: blend the angle from 0.1 rad to upright."""
    return Scenario(
        reference=ReferenceSignal(kind="smoothstep", start=0.1, setpoint=0.0, ramp_time=2.0)
    )


def sinusoid_scenario(amplitude: float = 0.5, frequency: float = 0.5) -> Scenario:
    """Tracking scenario rich enough to excite the estimator."""
    return Scenario(
        initial=PlantState(0.0, 0.0),
        reference=ReferenceSignal(kind="sinusoid", amplitude=amplitude, frequency=frequency),
    )


@dataclass(frozen=True)
class TraceRecord:
    """One logged control step."""

    t: float
    x1: float
    x2: float
    x1d: float
    S1: float
    S2: float
    u: float
    phi: float
    A: float
    B: float
    P: float
    Q: float
    V2: float
    V2_dot_ideal: float
    prnn_residual: float
    theta_hat: tuple[float, float, float]
    condition_residual: float


@dataclass(frozen=True)
class RunSummary:
    """Scalar metrics of a completed (or aborted) run."""

    settling_time: float        # first t after which |S1| stays < settle_tol; nan if never
    max_abs_s1: float
    control_effort: float       # integral of u^2 dt
    tracking_cost: float        # integral of S1^2 dt
    saturation_fraction: float  # fraction of control steps with u on a bound
    final_theta_error: float    # ||theta_hat - theta_true|| / ||theta_true||; nan if not adaptive
    time_to_prnn_residual: float  # first t after which the residual stays < 1e-6; nan if never
    mean_condition_residual: float
    final_v2: float
    aborted: bool
    abort_reason: str
    nonphysical_estimate: bool


_NO_THETA = (math.nan, math.nan, math.nan)


def initial_theta(scenario: Scenario) -> np.ndarray:
    """Initial estimate: explicit override or nominal perturbed by the seed."""
    if scenario.rls.theta0 is not None:
        return np.asarray(scenario.rls.theta0, dtype=float)
    rng = np.random.default_rng(scenario.seed)
    truth = rls.true_theta(scenario.params)
    return truth * (1.0 + scenario.rls.theta0_perturbation * rng.uniform(-1.0, 1.0, 3))


def _integrate_period(scenario: Scenario, state: PlantState, u: float, t: float) -> PlantState:
    for i in range(scenario.timing.substeps):
        state = plant.step(
            scenario.params,
            state,
            u,
            scenario.disturbance,
            t + i * scenario.timing.plant_dt,
            scenario.timing.plant_dt,
        )
    return state


def _abort_reason_for(state: PlantState, t: float) -> str | None:
    if not (math.isfinite(state.x1) and math.isfinite(state.x2)):
        return f"non-finite plant state at t={t:.6f}"
    if not state.controllable():
        return f"|x1| >= pi/2 at t={t:.6f} (x1={state.x1:.4f} rad)"
    return None


def run(scenario: Scenario) -> tuple[list[TraceRecord], RunSummary]:
    """Simulate the projection-network controller over the full duration.

    Returns the per-control-step trace and a summary.  Aborts (angle leaving
    the controllable half-plane, integrator blowup) terminate the loop early
    and are reported through the summary flags rather than raised.
    """
    sc = scenario
    period = sc.timing.control_period
    state = sc.initial
    phi = 0.0  # warm-started network state, carried across periods
    records: list[TraceRecord] = []
    aborted = False
    reason = ""
    nonphysical = False

    rls_state = None
    est: rls.EstimatedPhysical | None = None
    prev: tuple[PlantState, float] | None = None  # state and applied u, one period ago
    if sc.adaptive:
        rls_state = rls.initial_state(initial_theta(sc), sc.rls.m0_scale)

    for k in range(sc.timing.control_steps):
        t = k * period
        bad = _abort_reason_for(state, t)
        if bad is not None:
            aborted, reason = True, bad
            break

        refs = reference_at(sc.reference, t)
        e = error_coords(state, refs, sc.gains)
        a = plant.drift_term(sc.params, state)
        b = plant.gain_term(sc.params, state)

        if sc.adaptive and prev is not None:
            prev_state, prev_u = prev
            x2dot = (state.x2 - prev_state.x2) / period
            # the backward difference approximates the mid-interval derivative,
            # so the regressor is sampled at the mid-interval state as well
            mid = PlantState(
                0.5 * (state.x1 + prev_state.x1), 0.5 * (state.x2 + prev_state.x2)
            )
            pi = rls.regressor(mid, x2dot, prev_u, sc.params.g)
            if float(np.linalg.norm(pi)) >= sc.rls.excitation_gate:
                rls_state = rls.update(rls_state, pi, x2dot)

        if sc.adaptive and k >= sc.rls.warmup_steps:
            try:
                est = rls.extract_physical(rls_state.theta_hat)
            except rls.NotYetIdentifiableError:
                pass  # keep the last valid estimate, nominal if none yet
            if est is not None and not est.physical():
                nonphysical = True
            if est is not None:
                coeffs = rls.adaptive_coefficients(
                    est, state, e, refs[2], sc.gains, sc.weights, sc.bounds, sc.params
                )
            else:
                coeffs = qp.assemble(a, b, e, refs[2], sc.gains, sc.weights, sc.bounds)
        else:
            coeffs = qp.assemble(a, b, e, refs[2], sc.gains, sc.weights, sc.bounds)

        relaxed = prnn.relax(PrnnState.from_phi(phi, coeffs), coeffs, sc.prnn)
        phi = relaxed.state.phi
        # final safety clamp: the actuator constraint holds even mid-transient
        u = prnn.project(relaxed.state.u, sc.bounds)

        theta_logged = tuple(float(v) for v in rls_state.theta_hat) if sc.adaptive else _NO_THETA
        records.append(
            TraceRecord(
                t=t,
                x1=state.x1,
                x2=state.x2,
                x1d=refs[0],
                S1=e.s1,
                S2=e.s2,
                u=u,
                phi=phi,
                A=a,
                B=b,
                P=coeffs.P,
                Q=coeffs.Q,
                V2=lyapunov_v2(e),
                V2_dot_ideal=ideal_v2_dot(e, sc.gains),
                prnn_residual=relaxed.residual,
                theta_hat=theta_logged,
                condition_residual=sc.weights.R / coeffs.Q,
            )
        )

        prev = (state, u)
        try:
            state = _integrate_period(sc, state, u, t)
        except IntegrationBlowupError as err:
            aborted, reason = True, str(err)
            break

    theta_final = rls_state.theta_hat if sc.adaptive and rls_state is not None else None
    summary = _summarize(records, sc, aborted, reason, nonphysical, theta_final)
    return records, summary


def run_exact_baseline(scenario: Scenario) -> tuple[list[TraceRecord], RunSummary]:
    """Simulate the exact unconstrained backstepping feedback.

    Reference trajectory for the optimizer-based controller: u solves the
    stabilizing condition directly, without bounds or optimization, so the
    logged V2 must decay at the ideal rate.  Aborts when B(x) degenerates.
    """
    sc = scenario
    period = sc.timing.control_period
    state = sc.initial
    records: list[TraceRecord] = []
    aborted = False
    reason = ""

    for k in range(sc.timing.control_steps):
        t = k * period
        bad = _abort_reason_for(state, t)
        if bad is not None:
            aborted, reason = True, bad
            break

        refs = reference_at(sc.reference, t)
        e = error_coords(state, refs, sc.gains)
        a = plant.drift_term(sc.params, state)
        b = plant.gain_term(sc.params, state)
        if abs(b) < 1e-9:
            aborted, reason = True, f"input gain B ~ 0 at t={t:.6f}; exact feedback undefined"
            break
        u = exact_feedback(a, b, refs[2], e, sc.gains)
        coeffs = qp.assemble(a, b, e, refs[2], sc.gains, sc.weights, sc.bounds)

        records.append(
            TraceRecord(
                t=t,
                x1=state.x1,
                x2=state.x2,
                x1d=refs[0],
                S1=e.s1,
                S2=e.s2,
                u=u,
                phi=0.0,
                A=a,
                B=b,
                P=coeffs.P,
                Q=coeffs.Q,
                V2=lyapunov_v2(e),
                V2_dot_ideal=ideal_v2_dot(e, sc.gains),
                prnn_residual=0.0,
                theta_hat=_NO_THETA,
                condition_residual=sc.weights.R / coeffs.Q,
            )
        )

        try:
            state = _integrate_period(sc, state, u, t)
        except IntegrationBlowupError as err:
            aborted, reason = True, str(err)
            break

    summary = _summarize(records, sc, aborted, reason, False, None)
    return records, summary


def holds_below_from(values: np.ndarray, threshold: float, times: np.ndarray) -> float:
    """First time after which |values| stays below threshold; nan if never."""
    below = np.abs(values) < threshold
    if not below[-1]:
        return math.nan
    above = np.flatnonzero(~below)
    if above.size == 0:
        return float(times[0])
    return float(times[above[-1] + 1])


def _summarize(
    records: list[TraceRecord],
    scenario: Scenario,
    aborted: bool,
    reason: str,
    nonphysical: bool,
    theta_final: np.ndarray | None,
) -> RunSummary:
    if not records:
        return RunSummary(
            settling_time=math.nan,
            max_abs_s1=math.nan,
            control_effort=math.nan,
            tracking_cost=math.nan,
            saturation_fraction=math.nan,
            final_theta_error=math.nan,
            time_to_prnn_residual=math.nan,
            mean_condition_residual=math.nan,
            final_v2=math.nan,
            aborted=aborted,
            abort_reason=reason,
            nonphysical_estimate=nonphysical,
        )
    period = scenario.timing.control_period
    t = np.array([r.t for r in records])
    s1 = np.array([r.S1 for r in records])
    u = np.array([r.u for r in records])
    res = np.array([r.prnn_residual for r in records])
    cond = np.array([r.condition_residual for r in records])
    lo, hi = scenario.bounds
    on_bound = (u <= lo + 1e-12 * (1.0 + abs(lo))) | (u >= hi - 1e-12 * (1.0 + abs(hi)))

    if theta_final is not None:
        truth = rls.true_theta(scenario.params)
        theta_err = float(np.linalg.norm(theta_final - truth) / np.linalg.norm(truth))
    else:
        theta_err = math.nan

    return RunSummary(
        settling_time=holds_below_from(s1, scenario.settle_tol, t),
        max_abs_s1=float(np.max(np.abs(s1))),
        control_effort=float(np.sum(u**2) * period),
        tracking_cost=float(np.sum(s1**2) * period),
        saturation_fraction=float(np.mean(on_bound)),
        final_theta_error=theta_err,
        time_to_prnn_residual=holds_below_from(res, PRNN_RESIDUAL_SETTLED, t),
        mean_condition_residual=float(np.mean(cond)),
        final_v2=records[-1].V2,
        aborted=aborted,
        abort_reason=reason,
        nonphysical_estimate=nonphysical,
    )


@dataclass(frozen=True)
class Violation:
    """A control step whose V2 growth exceeds what the network state allows."""

    index: int
    t: float
    v2_rate: float  # finite-difference dV2/dt over the step
    allowed: float  # predicted rate plus tolerance


def lyapunov_monitor(trace: list[TraceRecord], tol: float | None = None) -> list[Violation]:
    """Check logged V2 decay against the closed-loop prediction.

    The predicted rate at step k is the ideal -c1*S1^2 - c2*S2^2 plus the
    network correction S2*B*phi/Q; a violation is a step whose finite-
    difference V2 rate exceeds prediction + tol.  Default tol is
    10*dt + 1e-6 with dt the record spacing.
    """
    if len(trace) < 2:
        return []
    dt = trace[1].t - trace[0].t
    if tol is None:
        tol = 10.0 * dt + 1e-6
    out = []
    for k in range(len(trace) - 1):
        r = trace[k]
        fd = (trace[k + 1].V2 - r.V2) / dt
        predicted = r.V2_dot_ideal + r.S2 * r.B * r.phi / r.Q
        if fd > predicted + tol:
            out.append(Violation(index=k, t=r.t, v2_rate=fd, allowed=predicted + tol))
    return out


def _set_c1(s: Scenario, v: float) -> Scenario:
    return replace(s, gains=Gains(c1=v, c2=s.gains.c2))


def _set_c2(s: Scenario, v: float) -> Scenario:
    return replace(s, gains=Gains(c1=s.gains.c1, c2=v))


def _set_t(s: Scenario, v: float) -> Scenario:
    return replace(s, weights=Weights(T=v, R=s.weights.R))


def _set_r(s: Scenario, v: float) -> Scenario:
    return replace(s, weights=Weights(T=s.weights.T, R=v))


def _set_vartheta(s: Scenario, v: float) -> Scenario:
    return replace(s, prnn=replace(s.prnn, vartheta=v))


GRID_SETTERS = {
    "c1": _set_c1,
    "c2": _set_c2,
    "T": _set_t,
    "R": _set_r,
    "vartheta": _set_vartheta,
    "u_min": lambda s, v: replace(s, bounds=(v, s.bounds[1])),
    "u_max": lambda s, v: replace(s, bounds=(s.bounds[0], v)),
    "bound": lambda s, v: replace(s, bounds=(-abs(v), abs(v))),
    "duration": lambda s, v: replace(s, timing=replace(s.timing, duration=v)),
    "seed": lambda s, v: replace(s, seed=int(v)),
}


def apply_grid_point(base: Scenario, coords: dict[str, float]) -> Scenario:
    scenario = base
    for key, value in coords.items():
        try:
            setter = GRID_SETTERS[key]
        except KeyError:
            raise ValueError(
                f"unknown sweep parameter {key!r}; supported: {sorted(GRID_SETTERS)}"
            ) from None
        scenario = setter(scenario, value)
    return scenario


@dataclass(frozen=True)
class SweepResult:
    coords: dict[str, float]
    summary: RunSummary | None
    error: str = ""


def _run_cell(scenario: Scenario) -> tuple[RunSummary | None, str]:
    try:
        _, summary = run(scenario)
        return summary, ""
    except Exception as err:  # per-cell failures must not kill the sweep
        return None, f"{type(err).__name__}: {err}"


def sweep(
    base: Scenario, grid: dict[str, list[float]], max_workers: int = 1
) -> list[SweepResult]:
    """Run one simulation per grid cell; results come back in grid order.

    Cells are independent and may run in parallel (max_workers > 1); a
    failing cell is recorded with its error string and the sweep continues.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid must name at least one parameter with values")
    keys = list(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*grid.values())]

    prepared: list[tuple[dict, Scenario | None, str]] = []
    for coords in cells:
        try:
            prepared.append((coords, apply_grid_point(base, coords), ""))
        except Exception as err:
            prepared.append((coords, None, f"{type(err).__name__}: {err}"))

    runnable = [(i, sc) for i, (_, sc, _) in enumerate(prepared) if sc is not None]
    outcomes: dict[int, tuple[RunSummary | None, str]] = {}
    if max_workers > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            for (i, _), result in zip(runnable, pool.map(_run_cell, [sc for _, sc in runnable])):
                outcomes[i] = result
    else:
        for i, sc in runnable:
            outcomes[i] = _run_cell(sc)

    results = []
    for i, (coords, sc, err) in enumerate(prepared):
        if sc is None:
            results.append(SweepResult(coords=coords, summary=None, error=err))
        else:
            summary, run_err = outcomes[i]
            results.append(SweepResult(coords=coords, summary=summary, error=run_err))
    return results
