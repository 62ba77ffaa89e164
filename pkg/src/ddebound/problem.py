"""Problem description for scalar linear delay equations.

A problem is  x'(t) + sum_k b_k(t) x(h_k(t)) = f(t)  for t >= t0, with
x(t) = phi(t) for t < t0 and x(t0) = x0.  Each delay term declares bounds
0 <= delta_k <= t - h_k(t) <= tau_k which :func:`validate` checks by
sampling over a grid; every norm estimate downstream relies on those
declared bounds, so containment failures must be surfaced before any
certificate is attempted.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, Num, sample, to_source, uses_trig, ExprError

__all__ = [
    "DelayTerm",
    "DDEProblem",
    "GridSpec",
    "TermReport",
    "ValidationReport",
    "default_grid",
    "grid_times",
    "validate",
]


@dataclass(frozen=True)
class DelayTerm:
    """One term b(t) * x(h(t)) with its declared delay window."""

    b: Expr
    h: Expr
    delta: float
    tau: float

    def __post_init__(self):
        if not (0.0 <= self.delta <= self.tau):
            raise ValueError(
                f"delay bounds must satisfy 0 <= delta <= tau, got "
                f"delta={self.delta}, tau={self.tau}"
            )


@dataclass(frozen=True)
class DDEProblem:
    terms: tuple[DelayTerm, ...]
    f: Expr = field(default_factory=lambda: Num(0.0))
    phi: Expr = field(default_factory=lambda: Num(0.0))
    t0: float = 0.0
    x0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) == 0:
            raise ValueError("a problem needs at least one delay term")

    @property
    def tau_max(self) -> float:
        return max(term.tau for term in self.terms)

    @property
    def key(self) -> str:
        """Content hash used to pair trajectories with certificates."""
        parts = []
        for term in self.terms:
            parts.append(to_source(term.b))
            parts.append(to_source(term.h))
            parts.append(repr(term.delta))
            parts.append(repr(term.tau))
        parts.append(to_source(self.f))
        parts.append(to_source(self.phi))
        parts.append(repr(self.t0))
        parts.append(repr(self.x0))
        blob = "\n".join(parts).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for norm estimation, relative to the problem's t0."""

    horizon: float
    step: float
    tail_start: float | None = None
    margin: float = 0.0

    def __post_init__(self):
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not (0.0 < self.step <= self.horizon):
            raise ValueError(f"step must lie in (0, horizon], got {self.step}")
        if self.margin < 0.0:
            raise ValueError(f"margin must be non-negative, got {self.margin}")
        if self.tail_start is None:
            object.__setattr__(self, "tail_start", self.horizon / 2.0)
        if not (0.0 <= self.tail_start < self.horizon):
            raise ValueError(
                f"tail_start must lie in [0, horizon), got {self.tail_start}"
            )


def default_grid(p: DDEProblem) -> GridSpec:
    """Horizon covering 20 delay spans, at least 10 trig periods when the
    data oscillates, and never less than 100 time units; resolution of 200
    samples per delay span."""
    tau = p.tau_max
    horizon = max(20.0 * tau, 100.0)
    exprs = [p.f, p.phi]
    for term in p.terms:
        exprs.extend((term.b, term.h))
    if any(uses_trig(e) for e in exprs):
        horizon = max(horizon, 10.0 * 2.0 * math.pi)
    step = tau / 200.0 if tau > 0.0 else 0.01
    return GridSpec(horizon=horizon, step=step)


def grid_times(t0: float, g: GridSpec) -> np.ndarray:
    """Sample times t0 + i*step including the horizon endpoint."""
    n = int(math.floor(g.horizon / g.step + 1e-9))
    ts = t0 + g.step * np.arange(n + 1, dtype=float)
    end = t0 + g.horizon
    if end - ts[-1] > 1e-9 * g.step:
        ts = np.append(ts, end)
    return ts


@dataclass(frozen=True)
class TermReport:
    index: int
    delay_min: float
    delay_min_t: float
    delay_max: float
    delay_max_t: float
    coeff_norm: float
    contained: bool


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    reasons: tuple[str, ...]
    terms: tuple[TermReport, ...]

    def __bool__(self) -> bool:
        return self.ok


# absolute slack absorbing roundoff in t - h(t) against the declared bounds
_CONTAINMENT_SLACK = 1e-12


def validate(p: DDEProblem, g: GridSpec | None = None) -> ValidationReport:
    """Check the declared delay windows against sampled behaviour.

    Every grid point must satisfy delta_k <= t - h_k(t) <= tau_k.  The
    report also carries the observed sup of each |b_k| so a caller can eye
    the magnitudes that will drive the certificates.
    """
    if g is None:
        g = default_grid(p)
    ts = grid_times(p.t0, g)
    reasons: list[str] = []
    reports: list[TermReport] = []
    for idx, term in enumerate(p.terms):
        try:
            hs = sample(term.h, ts)
            bs = sample(term.b, ts)
        except ExprError as err:
            reasons.append(f"term {idx + 1}: {err}")
            reports.append(
                TermReport(idx, math.nan, math.nan, math.nan, math.nan, math.nan, False)
            )
            continue
        lags = ts - hs
        i_min = int(np.argmin(lags))
        i_max = int(np.argmax(lags))
        lo, hi = float(lags[i_min]), float(lags[i_max])
        contained = (
            lo >= term.delta - _CONTAINMENT_SLACK
            and hi <= term.tau + _CONTAINMENT_SLACK
        )
        if lo < term.delta - _CONTAINMENT_SLACK:
            reasons.append(
                f"term {idx + 1}: observed lag {lo} at t = {ts[i_min]} "
                f"falls below declared delta = {term.delta}"
            )
        if hi > term.tau + _CONTAINMENT_SLACK:
            reasons.append(
                f"term {idx + 1}: observed lag {hi} at t = {ts[i_max]} "
                f"exceeds declared tau = {term.tau}"
            )
        reports.append(
            TermReport(
                index=idx,
                delay_min=lo,
                delay_min_t=float(ts[i_min]),
                delay_max=hi,
                delay_max_t=float(ts[i_max]),
                coeff_norm=float(np.max(np.abs(bs))),
                contained=contained,
            )
        )
    return ValidationReport(ok=not reasons, reasons=tuple(reasons), terms=tuple(reports))
