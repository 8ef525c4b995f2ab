"""Desk-scale verification suites with fixed seeds and pinned tolerances.

Each suite checks one family of claims about the controller against an
independent oracle: the closed-form clamp solution for the network, central
finite differences for the QP gradient, a direct batch solve for the
recursive estimator, step-halving for the integrator order, and logged-trace
Lyapunov monitors for the closed loop.  The CLI `verify` command and the
acceptance test module both run these functions, so there is one source of
truth for pass/fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import plant, prnn, qp, sim
from .backstepping import Gains, ReferenceSignal
from .plant import DisturbanceSpec, PendulumParams, PlantState
from .prnn import PrnnConfig, PrnnState
from .qp import QpCoefficients
from .rls import regressor, true_theta
from .sim import Scenario, Timing, lyapunov_monitor


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict[str, float] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v:.3e}" for k, v in self.details.items())
        return f"[{status}] {self.name}" + (f" ({extras})" if extras else "")


def _random_qp(rng: np.random.Generator) -> QpCoefficients:
    q = 10.0 ** rng.uniform(-2.0, 2.0)
    p = rng.uniform(-100.0, 100.0)
    lo, hi = np.sort(rng.uniform(-10.0, 10.0, 2))
    if hi - lo < 1e-3:
        hi = lo + 1e-3
    return QpCoefficients(P=p, Q=q, u_min=float(lo), u_max=float(hi))


def suite_prnn_oracle(seed: int = 0, n: int = 1000) -> SuiteResult:
    """Network equilibrium equals the closed-form QP solution.

    Random frozen coefficients, relaxation to residual 1e-9, comparison
    against clamp(-P/Q) within 1e-6.
    """
    rng = np.random.default_rng(seed)
    vartheta = 50.0
    worst = 0.0
    unconverged = 0
    for _ in range(n):
        coeffs = _random_qp(rng)
        phi0 = rng.uniform(-50.0, 50.0)
        cfg = PrnnConfig(
            vartheta=vartheta,
            inner_dt=prnn.stable_inner_dt(coeffs, vartheta),
            inner_steps=1,
        )
        result = prnn.relax_until(PrnnState.from_phi(phi0, coeffs), coeffs, cfg, tol=1e-9)
        if result.residual > 1e-9:
            unconverged += 1
            continue
        worst = max(worst, abs(result.state.u - qp.solve_oracle(coeffs)))
    passed = unconverged == 0 and worst < 1e-6
    return SuiteResult(
        name="prnn-oracle",
        passed=passed,
        details={"worst_u_error": worst, "unconverged": float(unconverged)},
        lines=[f"{n} random QPs, worst |u - u*| = {worst:.3e} (tolerance 1e-6)"],
    )


def suite_prnn_decay(seed: int = 0) -> SuiteResult:
    """Interior regime: phi decays exponentially at exactly rate vartheta."""
    del seed  # deterministic suite
    coeffs = QpCoefficients(P=0.0, Q=1.0, u_min=-1e9, u_max=1e9)
    worst_rate_err = 0.0
    times = []
    for vartheta in (1.0, 10.0, 100.0):
        h = 0.1 / vartheta
        cfg = PrnnConfig(vartheta=vartheta, inner_dt=h, inner_steps=1)
        phi = 1.0
        ts, logs = [0.0], [0.0]
        for k in range(30):  # spans 3/vartheta seconds
            phi = prnn.relax(PrnnState.from_phi(phi, coeffs), coeffs, cfg).state.phi
            ts.append((k + 1) * h)
            logs.append(math.log(abs(phi)))
        slope = np.polyfit(ts, logs, 1)[0]
        worst_rate_err = max(worst_rate_err, abs(-slope - vartheta) / vartheta)
        reached = prnn.relax_until(
            PrnnState.from_phi(1.0, coeffs), coeffs, cfg, tol=1e-6
        )
        times.append(reached.substeps * h)
    monotone = all(t2 < t1 for t1, t2 in zip(times, times[1:]))
    passed = worst_rate_err < 1e-3 and monotone
    return SuiteResult(
        name="prnn-decay",
        passed=passed,
        details={"worst_rate_error": worst_rate_err, "monotone": float(monotone)},
        lines=[
            f"fitted rate error {worst_rate_err:.3e} (tolerance 1e-3)",
            "time to residual 1e-6: " + ", ".join(f"{t:.3f}s" for t in times),
        ],
    )


def _baseline_timing(duration: float = 3.0) -> Timing:
    # record every plant step so the finite-difference V2 check is as sharp
    # as the integrator allows
    return Timing(plant_dt=0.001, control_period=0.001, duration=duration)


def suite_lyapunov(seed: int = 0, scenario: Scenario | None = None) -> SuiteResult:
    """Exact-feedback runs must realize dV2/dt = -c1*S1^2 - c2*S2^2.

    When a scenario is supplied, the logged-trace monitor is applied to that
    scenario's optimizer run instead.
    """
    del seed
    if scenario is not None:
        return monitor_scenario(scenario)
    timing = _baseline_timing()
    prnn_cfg = PrnnConfig.for_period(timing.control_period)
    cases = []
    for c1, c2 in ((1.0, 1.0), (2.0, 2.0), (3.0, 1.0)):
        for ref, x10 in (
            (ReferenceSignal(kind="constant", setpoint=0.0), 0.1),
            (ReferenceSignal(kind="sinusoid", amplitude=0.1, frequency=0.5), 0.05),
        ):
            cases.append(
                Scenario(
                    initial=PlantState(x10, 0.0),
                    reference=ref,
                    gains=Gains(c1=c1, c2=c2),
                    prnn=prnn_cfg,
                    timing=timing,
                )
            )
    tol = 10.0 * timing.control_period + 1e-6
    worst = 0.0
    aborted = 0
    for scenario_k in cases:
        trace, summary = sim.run_exact_baseline(scenario_k)
        if summary.aborted:
            aborted += 1
            continue
        dt = scenario_k.timing.control_period
        for k in range(len(trace) - 1):
            fd = (trace[k + 1].V2 - trace[k].V2) / dt
            worst = max(worst, abs(fd - trace[k].V2_dot_ideal))
    passed = aborted == 0 and worst <= tol
    return SuiteResult(
        name="lyapunov",
        passed=passed,
        details={"worst_identity_error": worst, "tolerance": tol},
        lines=[
            f"{len(cases)} baseline runs, worst |dV2/dt - ideal| = {worst:.3e} "
            f"(tolerance {tol:.3e})"
        ],
    )


def monitor_scenario(scenario: Scenario) -> SuiteResult:
    """Logged-trace Lyapunov monitor for one optimizer run."""
    trace, summary = sim.run(scenario)
    transient = 5.0 / scenario.prnn.vartheta
    violations = [v for v in lyapunov_monitor(trace) if v.t > transient]
    passed = not summary.aborted and not violations
    lines = [f"{len(violations)} monitor violations after t = {transient:.3f}s"]
    if summary.aborted:
        lines.append(f"run aborted: {summary.abort_reason}")
    return SuiteResult(
        name="lyapunov-monitor",
        passed=passed,
        details={"violations": float(len(violations))},
        lines=lines,
    )


def _stabilization_scenario() -> Scenario:
    return Scenario(
        initial=PlantState(0.1, 0.0),
        reference=ReferenceSignal(kind="constant", setpoint=0.0),
        gains=Gains(2.0, 2.0),
        weights=qp.Weights(T=100.0, R=0.01),
        bounds=(-30.0, 30.0),
        prnn=PrnnConfig.for_period(0.01, vartheta=50.0),
        timing=Timing(plant_dt=0.001, control_period=0.01, duration=5.0),
    )


def suite_stabilization(seed: int = 0) -> SuiteResult:
    """Default closed loop: settle below 0.01 rad in 5 s, bounds respected,
    V2 non-increasing after the network transient."""
    del seed
    scenario = _stabilization_scenario()
    trace, summary = sim.run(scenario)
    x1 = np.array([r.x1 for r in trace])
    t = np.array([r.t for r in trace])
    u = np.array([r.u for r in trace])
    lo, hi = scenario.bounds
    settled = sim.holds_below_from(x1, 0.01, t)
    within_bounds = bool(np.all((u >= lo) & (u <= hi)))
    transient = 5.0 / scenario.prnn.vartheta
    violations = [v for v in lyapunov_monitor(trace) if v.t > transient]
    passed = (
        not summary.aborted
        and not math.isnan(settled)
        and settled <= 5.0
        and within_bounds
        and not violations
    )
    return SuiteResult(
        name="stabilization",
        passed=passed,
        details={
            "settling_time": settled,
            "max_abs_u": float(np.max(np.abs(u))),
            "monitor_violations": float(len(violations)),
        },
        lines=[
            f"|x1| < 0.01 rad from t = {settled:.2f}s; max |u| = {np.max(np.abs(u)):.3f} N; "
            f"{len(violations)} V2 violations after {transient:.2f}s"
        ],
    )


def suite_r_consistency(seed: int = 0) -> SuiteResult:
    """As R -> 0 the network control converges to the exact feedback."""
    del seed
    base = replace(_stabilization_scenario(), bounds=(-1e6, 1e6))
    diffs = []
    for r_weight in (1.0, 0.1, 0.01, 0.001):
        scenario = replace(base, weights=qp.Weights(T=100.0, R=r_weight))
        trace_p, sum_p = sim.run(scenario)
        trace_e, sum_e = sim.run_exact_baseline(scenario)
        if sum_p.aborted or sum_e.aborted:
            return SuiteResult(
                name="r-consistency",
                passed=False,
                lines=[f"run aborted at R={r_weight}"],
            )
        n = min(len(trace_p), len(trace_e))
        diffs.append(
            max(abs(trace_p[k].u - trace_e[k].u) for k in range(n))
        )
    monotone = all(b < a for a, b in zip(diffs, diffs[1:]))
    passed = monotone and diffs[-1] < 1e-2
    return SuiteResult(
        name="r-consistency",
        passed=passed,
        details={"final_max_diff": diffs[-1], "monotone": float(monotone)},
        lines=[
            "max |u_prnn - u_exact| per R in {1, 0.1, 0.01, 0.001}: "
            + ", ".join(f"{d:.3e}" for d in diffs)
        ],
    )


def batch_least_squares(pis, ys, theta0, m0_scale: float) -> np.ndarray:
    """Direct information-form solve equivalent to forgetting-free RLS.

    Minimizes ||theta - theta0||^2 / m0_scale + sum (y - Pi.theta)^2 via the
    normal equations; an independent oracle for the recursive path.
    """
    pis = np.asarray(pis, dtype=float)
    ys = np.asarray(ys, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    info = np.eye(3) / m0_scale + pis.T @ pis
    rhs = theta0 / m0_scale + pis.T @ ys
    return np.linalg.solve(info, rhs)


def rls_samples_from_trace(
    trace: list[sim.TraceRecord], scenario: Scenario
) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct the (Pi, y) stream the adaptive loop consumed from its trace."""
    period = scenario.timing.control_period
    pis, ys = [], []
    for k in range(1, len(trace)):
        prev_r, cur_r = trace[k - 1], trace[k]
        x2dot = (cur_r.x2 - prev_r.x2) / period
        mid = PlantState(0.5 * (cur_r.x1 + prev_r.x1), 0.5 * (cur_r.x2 + prev_r.x2))
        pi = regressor(mid, x2dot, prev_r.u, scenario.params.g)
        if float(np.linalg.norm(pi)) >= scenario.rls.excitation_gate:
            pis.append(pi)
            ys.append(x2dot)
    return np.asarray(pis), np.asarray(ys)


def _rls_scenario(seed: int) -> Scenario:
    return Scenario(
        initial=PlantState(0.0, 0.0),
        reference=ReferenceSignal(kind="sinusoid", amplitude=0.5, frequency=0.5),
        prnn=PrnnConfig.for_period(0.01, vartheta=50.0),
        timing=Timing(plant_dt=0.001, control_period=0.01, duration=5.0),
        adaptive=True,
        seed=seed,
    )


def suite_rls_batch(seed: int = 0) -> SuiteResult:
    """Noise-free excited run: estimates reach the true parameter combinations
    and agree with a direct batch solve of the same samples."""
    scenario = _rls_scenario(seed)
    trace, summary = sim.run(scenario)
    truth = true_theta(scenario.params)
    theta_final = np.array(trace[-1].theta_hat)
    rel_err = float(np.linalg.norm(theta_final - truth) / np.linalg.norm(truth))
    pis, ys = rls_samples_from_trace(trace, scenario)
    theta_batch = batch_least_squares(
        pis, ys, sim.initial_theta(scenario), scenario.rls.m0_scale
    )
    batch_gap = float(np.linalg.norm(theta_final - theta_batch))
    passed = not summary.aborted and rel_err < 0.01 and batch_gap < 1e-6
    return SuiteResult(
        name="rls-batch",
        passed=passed,
        details={"relative_theta_error": rel_err, "batch_gap": batch_gap},
        lines=[
            f"final ||theta - theta_true||/||theta_true|| = {rel_err:.3e} (tolerance 1e-2)",
            f"RLS vs batch least squares gap = {batch_gap:.3e} (tolerance 1e-6)",
        ],
    )


def suite_saturation(seed: int = 0) -> SuiteResult:
    """Tight bounds: control rides the limit, never crosses it, still settles."""
    del seed
    scenario = replace(
        _stabilization_scenario(),
        initial=PlantState(0.15, 0.0),
        bounds=(-2.0, 2.0),
        timing=Timing(plant_dt=0.001, control_period=0.01, duration=10.0),
        settle_tol=0.02,
    )
    trace, summary = sim.run(scenario)
    u = np.array([r.u for r in trace])
    lo, hi = scenario.bounds
    within = bool(np.all((u >= lo) & (u <= hi)))
    passed = (
        not summary.aborted
        and summary.saturation_fraction > 0.0
        and within
        and not math.isnan(summary.settling_time)
        and summary.settling_time <= 10.0
    )
    return SuiteResult(
        name="saturation",
        passed=passed,
        details={
            "saturation_fraction": summary.saturation_fraction,
            "settling_time": summary.settling_time,
        },
        lines=[
            f"saturated {summary.saturation_fraction:.1%} of steps, "
            f"|x1| < 0.02 rad from t = {summary.settling_time:.2f}s, "
            f"bounds respected: {within}"
        ],
    )


def suite_gradient(seed: int = 0, n: int = 1000) -> SuiteResult:
    """QP gradient against central finite differences of the cost."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        coeffs = _random_qp(rng)
        u = rng.uniform(-10.0, 10.0)
        h = 1e-4 * (1.0 + abs(u))
        fd = (qp.cost(coeffs, u + h) - qp.cost(coeffs, u - h)) / (2.0 * h)
        scale = 1.0 + abs(coeffs.Q * u) + abs(coeffs.P)
        worst = max(worst, abs(fd - qp.gradient(coeffs, u)) / scale)
    passed = worst <= 1e-8
    return SuiteResult(
        name="gradient",
        passed=passed,
        details={"worst_relative_error": worst},
        lines=[f"{n} random points, worst relative FD error = {worst:.3e} (tolerance 1e-8)"],
    )


def suite_rk4_order(seed: int = 0) -> SuiteResult:
    """Endpoint error of the plant integrator shrinks 16x per step halving."""
    del seed
    params = PendulumParams()
    d = DisturbanceSpec()

    def endpoint(dt: float) -> tuple[float, float]:
        state = PlantState(0.1, 0.0)
        steps = round(0.5 / dt)
        for k in range(steps):
            state = plant.step(params, state, 0.0, d, k * dt, dt)
        return state.x1, state.x2

    dts = (0.004, 0.002, 0.001, 0.0005)
    ends = [endpoint(dt) for dt in dts]
    gaps = [
        math.hypot(a[0] - b[0], a[1] - b[1]) for a, b in zip(ends, ends[1:])
    ]
    ratios = [g1 / g2 for g1, g2 in zip(gaps, gaps[1:])]
    ratios_ok = all(12.0 < r < 20.0 for r in ratios)
    ref = endpoint(dts[-1] / 100.0)
    ref_gap = math.hypot(ends[-1][0] - ref[0], ends[-1][1] - ref[1])
    passed = ratios_ok and ref_gap < 1e-10
    return SuiteResult(
        name="rk4-order",
        passed=passed,
        details={"halving_ratio_min": min(ratios), "reference_gap": ref_gap},
        lines=[
            "error-halving ratios: " + ", ".join(f"{r:.2f}" for r in ratios) + " (expect ~16)",
            f"gap to dt/100 reference = {ref_gap:.3e}",
        ],
    )


def suite_projection(seed: int = 0, n: int = 100_000) -> SuiteResult:
    """Projection is non-expansive and satisfies the obtuse-angle inequality."""
    rng = np.random.default_rng(seed)
    lo, hi = np.sort(rng.uniform(-5.0, 5.0, 2))
    if hi - lo < 1e-3:
        hi = lo + 1e-3
    a = rng.uniform(-20.0, 20.0, n)
    b = rng.uniform(-20.0, 20.0, n)
    pa, pb = np.clip(a, lo, hi), np.clip(b, lo, hi)
    worst_expansion = float(np.max(np.abs(pa - pb) - np.abs(a - b)))
    sigma = rng.uniform(lo, hi, n)  # arbitrary feasible points
    inner = (pa - sigma) * (a - pa)
    worst_angle = float(np.min(inner))
    passed = worst_expansion <= 0.0 and worst_angle >= -1e-12
    return SuiteResult(
        name="projection",
        passed=passed,
        details={"worst_expansion": worst_expansion, "worst_obtuse_angle": worst_angle},
        lines=[
            f"{n} pairs: max(|PR(a)-PR(b)| - |a-b|) = {worst_expansion:.3e}, "
            f"min (PR(a)-s)(a-PR(a)) = {worst_angle:.3e}"
        ],
    )


SUITES = {
    "prnn-oracle": suite_prnn_oracle,
    "prnn-decay": suite_prnn_decay,
    "lyapunov": suite_lyapunov,
    "stabilization": suite_stabilization,
    "r-consistency": suite_r_consistency,
    "rls-batch": suite_rls_batch,
    "saturation": suite_saturation,
    "gradient": suite_gradient,
    "rk4-order": suite_rk4_order,
    "projection": suite_projection,
}


def run_suites(
    names: list[str] | None = None,
    seed: int = 0,
    scenario: Scenario | None = None,
) -> list[SuiteResult]:
    """Run the named suites (all by default) and return their results."""
    selected = names if names else list(SUITES)
    results = []
    for name in selected:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
        if name == "lyapunov":
            results.append(suite_lyapunov(seed=seed, scenario=scenario))
        else:
            results.append(SUITES[name](seed=seed))
    return results
