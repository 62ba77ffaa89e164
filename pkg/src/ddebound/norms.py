"""Grid-based norm and bound estimators.

All certificate hypotheses reduce to sup norms, ratio sup norms, uniform
lower bounds and liminf estimates of closed-form functions of time.  These
are estimated by scanning a :class:`~ddebound.problem.GridSpec` grid; the
optional margin inflates sups and deflates lower bounds so a caller can
buy safety against between-sample wiggle.  Ties in arg-extremum positions
resolve to the smallest time because numpy's argmin/argmax return the
first hit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr import Expr, sample
from .problem import GridSpec, grid_times

__all__ = [
    "NormEstimate",
    "PositivityViolation",
    "sup_norm",
    "sup_ratio_norm",
    "inf_bound",
    "liminf_estimate",
]

Sampler = Callable[[np.ndarray], np.ndarray]


class PositivityViolation(ValueError):
    """A denominator or floor that must stay positive failed to."""

    def __init__(self, t: float, value: float):
        self.t = t
        self.value = value
        super().__init__(f"required positive quantity is {value} at t = {t}")


@dataclass(frozen=True)
class NormEstimate:
    value: float
    arg_t: float
    horizon: float
    step: float
    margin: float


def _values(obj: Expr | Sampler, ts: np.ndarray) -> np.ndarray:
    # Expr nodes are frozen dataclasses, not callables, so this test is safe
    if callable(obj):
        return np.asarray(obj(ts), dtype=float)
    return sample(obj, ts)


def sup_norm(obj: Expr | Sampler, t0: float, g: GridSpec) -> NormEstimate:
    """(1 + margin) times the grid maximum of the absolute value."""
    ts = grid_times(t0, g)
    vals = np.abs(_values(obj, ts))
    i = int(np.argmax(vals))
    return NormEstimate(
        value=(1.0 + g.margin) * float(vals[i]),
        arg_t=float(ts[i]),
        horizon=g.horizon,
        step=g.step,
        margin=g.margin,
    )


def sup_ratio_norm(
    numer: Expr | Sampler, denom: Expr | Sampler, t0: float, g: GridSpec
) -> NormEstimate:
    """(1 + margin) times the grid maximum of |numer/denom|.

    The denominator must be strictly positive at every grid point;
    the first offender raises :class:`PositivityViolation`.
    """
    ts = grid_times(t0, g)
    den = _values(denom, ts)
    bad = np.flatnonzero(den <= 0.0)
    if bad.size:
        j = int(bad[0])
        raise PositivityViolation(float(ts[j]), float(den[j]))
    vals = np.abs(_values(numer, ts)) / den
    i = int(np.argmax(vals))
    return NormEstimate(
        value=(1.0 + g.margin) * float(vals[i]),
        arg_t=float(ts[i]),
        horizon=g.horizon,
        step=g.step,
        margin=g.margin,
    )


def inf_bound(obj: Expr | Sampler, t0: float, g: GridSpec) -> NormEstimate:
    """Grid minimum deflated by the margin (pushed towards -inf, so the
    result is a conservative lower bound in both signs)."""
    ts = grid_times(t0, g)
    vals = _values(obj, ts)
    i = int(np.argmin(vals))
    raw = float(vals[i])
    value = raw * (1.0 - g.margin) if raw >= 0.0 else raw * (1.0 + g.margin)
    return NormEstimate(
        value=value,
        arg_t=float(ts[i]),
        horizon=g.horizon,
        step=g.step,
        margin=g.margin,
    )


def liminf_estimate(
    obj: Expr | Sampler,
    t0: float,
    g: GridSpec,
    tail_start: float | None = None,
) -> NormEstimate:
    """Grid minimum over the tail window [t0 + tail_start, t0 + horizon]."""
    if tail_start is None:
        tail_start = g.tail_start
    if not (0.0 <= tail_start < g.horizon):
        raise ValueError(f"tail_start must lie in [0, horizon), got {tail_start}")
    ts = grid_times(t0, g)
    mask = ts >= t0 + tail_start - 1e-9 * g.step
    ts = ts[mask]
    vals = _values(obj, ts)
    i = int(np.argmin(vals))
    return NormEstimate(
        value=float(vals[i]),
        arg_t=float(ts[i]),
        horizon=g.horizon,
        step=g.step,
        margin=g.margin,
    )
