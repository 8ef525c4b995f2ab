"""Trace persistence: one CSV row per control step, full double precision.

Values are written with 17 significant digits so that reading a trace back
reproduces the in-memory doubles bit for bit; the checker recomputes the
derived columns to confirm a file is internally consistent.
"""

from __future__ import annotations

import csv
import math

from .sim import TraceRecord

TRACE_COLUMNS = [
    "t",
    "x1",
    "x2",
    "x1d",
    "S1",
    "S2",
    "u",
    "phi",
    "A",
    "B",
    "P",
    "Q",
    "V2",
    "V2_dot_ideal",
    "prnn_residual",
    "theta1",
    "theta2",
    "theta3",
    "condition_residual",
]


class TraceFormatError(ValueError):
    """Trace file violates the column or number format contract."""


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _row(r: TraceRecord) -> list[str]:
    values = [
        r.t, r.x1, r.x2, r.x1d, r.S1, r.S2, r.u, r.phi, r.A, r.B, r.P, r.Q,
        r.V2, r.V2_dot_ideal, r.prnn_residual,
        r.theta_hat[0], r.theta_hat[1], r.theta_hat[2],
        r.condition_residual,
    ]
    return [_fmt(v) for v in values]


def write_trace(path, records: list[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow(_row(r))


def read_trace(path) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_COLUMNS:
            raise TraceFormatError(f"unexpected header {header!r}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_COLUMNS):
                raise TraceFormatError(
                    f"line {lineno}: expected {len(TRACE_COLUMNS)} columns, got {len(row)}"
                )
            try:
                v = [float(cell) for cell in row]
            except ValueError as err:
                raise TraceFormatError(f"line {lineno}: {err}") from err
            records.append(
                TraceRecord(
                    t=v[0], x1=v[1], x2=v[2], x1d=v[3], S1=v[4], S2=v[5], u=v[6],
                    phi=v[7], A=v[8], B=v[9], P=v[10], Q=v[11], V2=v[12],
                    V2_dot_ideal=v[13], prnn_residual=v[14],
                    theta_hat=(v[15], v[16], v[17]),
                    condition_residual=v[18],
                )
            )
    return records


def check_trace(records: list[TraceRecord]) -> list[str]:
    """Internal-consistency problems of a trace; empty list means clean.

    Recomputable columns must match to 1e-12: V2 from S1, S2 and the
    condition residual times Q, which is the constant effort weight R.
    Timestamps must advance on a uniform grid.
    """
    problems = []
    if not records:
        problems.append("trace is empty")
        return problems

    r_weight = records[0].condition_residual * records[0].Q
    dt = records[1].t - records[0].t if len(records) > 1 else None
    for k, r in enumerate(records):
        v2 = 0.5 * r.S1**2 + 0.5 * r.S2**2
        if abs(v2 - r.V2) > 1e-12 * (1.0 + abs(v2)):
            problems.append(f"row {k}: V2 inconsistent with S1,S2 ({r.V2!r} vs {v2!r})")
        rq = r.condition_residual * r.Q
        if abs(rq - r_weight) > 1e-12 * (1.0 + abs(r_weight)):
            problems.append(f"row {k}: condition_residual*Q = {rq!r} not constant")
        for name in ("t", "x1", "x2", "u", "V2"):
            if not math.isfinite(getattr(r, name)):
                problems.append(f"row {k}: non-finite {name}")
        if k > 0 and dt is not None:
            gap = r.t - records[k - 1].t
            if abs(gap - dt) > 1e-9 * (1.0 + abs(dt)):
                problems.append(f"row {k}: non-uniform time step {gap!r}")
    return problems
