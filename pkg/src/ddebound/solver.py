"""Numerical integration and the solution representation cross-check.

:func:`solve` runs a fixed-step fourth-order scheme with cubic Hermite
history interpolation (see :mod:`ddebound._kernels` for the stepping
details).  :func:`fundamental` integrates the same equation restarted at
time s with unit initial value and zero history, which is the kernel
X(t, s) of the solution representation

    x(t) = X(t, t0) x(t0)
           - sum_k  integral over [t0, t0 + tau_k] of X(t, s) b_k(s) phi(h_k(s)) ds
           + integral over [t0, t] of X(t, s) f(s) ds

where phi counts as zero beyond t0.  :func:`reconstruct_via_representation`
evaluates that formula by trapezoid quadrature over a family of
precomputed fundamental trajectories, giving an independent check of the
direct integration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .expr import Expr, Num, compile_program, sample
from .problem import DDEProblem

__all__ = [
    "StepTooLarge",
    "StepSizeWarning",
    "NonFiniteRightSide",
    "Trajectory",
    "default_step",
    "solve",
    "fundamental",
    "FundamentalFamily",
    "representation_times",
    "fundamental_family",
    "reconstruct_via_representation",
]


class StepTooLarge(ValueError):
    """The step cannot resolve the smallest declared delay span."""


class StepSizeWarning(UserWarning):
    """Same condition as :class:`StepTooLarge` but only advisory, used when
    a vanishing delay makes the hard limit unenforceable."""


class NonFiniteRightSide(ArithmeticError):
    """The integrator hit a non-finite derivative value."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"right side became non-finite near t = {t}")


@dataclass(frozen=True)
class Trajectory:
    """Dense output on a uniform mesh with node derivatives."""

    t_start: float
    t_end: float
    step: float
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    problem_key: str
    history: Expr
    t0: float

    def __call__(self, t):
        """Cubic Hermite interpolation; times before t_start delegate to
        the history function."""
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        ts = np.atleast_1d(t_arr)
        out = np.empty_like(ts)
        before = ts < self.t_start
        if np.any(before):
            out[before] = sample(self.history, ts[before])
        inside = ~before
        if np.any(inside):
            q = ts[inside]
            u = (q - self.t_start) / self.step
            i = np.clip(u.astype(int), 0, len(self.nodes) - 2)
            th = u - i
            th = np.clip(th, 0.0, 1.0)
            t2 = th * th
            t3 = t2 * th
            dt = self.step
            out[inside] = (
                (2 * t3 - 3 * t2 + 1) * self.values[i]
                + (t3 - 2 * t2 + th) * dt * self.derivs[i]
                + (-2 * t3 + 3 * t2) * self.values[i + 1]
                + (t3 - t2) * dt * self.derivs[i + 1]
            )
        return float(out[0]) if scalar else out

    def to_csv(self, path) -> None:
        data = np.column_stack([self.nodes, self.values])
        np.savetxt(path, data, delimiter=",", header="t,x", comments="")


def default_step(p: DDEProblem) -> float:
    """min(smallest positive delay span / 20, 0.01), floored at 1e-4."""
    taus = [term.tau for term in p.terms if term.tau > 0.0]
    step = min(min(taus) / 20.0 if taus else math.inf, 0.01)
    return max(step, 1e-4)


def _check_step(p: DDEProblem, step: float) -> None:
    taus = [term.tau for term in p.terms if term.tau > 0.0]
    if not taus:
        return
    limit = min(taus) / 4.0
    if step > limit:
        msg = (
            f"step {step} exceeds a quarter of the smallest delay span "
            f"({limit}); delayed arguments would skip mesh cells"
        )
        if all(term.delta > 0.0 for term in p.terms):
            raise StepTooLarge(msg)
        warnings.warn(msg, StepSizeWarning)


_MAX_SWEEPS = 8
_SWEEP_TOL = 1e-14


def _pack_programs(exprs: list[Expr]):
    progs = [compile_program(e) for e in exprs]
    length = max(len(pr.code) for pr in progs)
    code = np.zeros((len(progs), length), dtype=np.int64)
    args = np.zeros((len(progs), length), dtype=np.float64)
    lens = np.zeros(len(progs), dtype=np.int64)
    for i, pr in enumerate(progs):
        n = len(pr.code)
        code[i, :n] = pr.code
        args[i, :n] = pr.args
        lens[i] = n
    depth = max(pr.stack_need for pr in progs)
    return code, args, lens, depth


def solve(p: DDEProblem, t_end: float, step: float | None = None) -> Trajectory:
    """Integrate the problem from its t0 to t_end on a uniform mesh.

    The requested step is shrunk, never stretched, so that the mesh hits
    t_end exactly.
    """
    if not t_end > p.t0:
        raise ValueError(f"t_end must exceed t0 = {p.t0}, got {t_end}")
    if step is None:
        step = default_step(p)
    if not (0.0 < step and math.isfinite(step)):
        raise ValueError(f"step must be positive and finite, got {step}")
    _check_step(p, step)

    span = t_end - p.t0
    n_steps = max(1, int(math.ceil(span / step - 1e-12)))
    dt = span / n_steps

    b_code, b_args, b_len, depth_b = _pack_programs([term.b for term in p.terms])
    h_code, h_args, h_len, depth_h = _pack_programs([term.h for term in p.terms])
    f_prog = compile_program(p.f)
    p_prog = compile_program(p.phi)
    depth = max(depth_b, depth_h, f_prog.stack_need, p_prog.stack_need)
    stack = np.empty(depth, dtype=np.float64)

    kern = backend.kernels()
    status, bad_t, xs, ds = kern.integrate(
        float(p.t0),
        float(p.x0),
        float(dt),
        n_steps,
        b_code,
        b_args,
        b_len,
        h_code,
        h_args,
        h_len,
        f_prog.code,
        f_prog.args,
        len(f_prog.code),
        p_prog.code,
        p_prog.args,
        len(p_prog.code),
        stack,
        _MAX_SWEEPS,
        _SWEEP_TOL,
    )
    if status != 0:
        raise NonFiniteRightSide(float(bad_t))

    nodes = p.t0 + dt * np.arange(n_steps + 1, dtype=float)
    return Trajectory(
        t_start=float(p.t0),
        t_end=float(nodes[-1]),
        step=float(dt),
        nodes=nodes,
        values=xs,
        derivs=ds,
        problem_key=p.key,
        history=p.phi,
        t0=float(p.t0),
    )


def fundamental(p: DDEProblem, s: float, t_end: float, step: float | None = None) -> Trajectory:
    """The kernel X(., s): restart at time s with unit value, zero history
    and zero forcing, keeping the coefficient and delay functions."""
    if s < p.t0:
        raise ValueError(f"restart time s = {s} precedes t0 = {p.t0}")
    q = replace(p, f=Num(0.0), phi=Num(0.0), t0=float(s), x0=1.0)
    return solve(q, t_end, step)


# ---------------------------------------------------------------------------
# Solution representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FundamentalFamily:
    """X(., s) trajectories for a grid of restart times s."""

    s_values: np.ndarray
    trajectories: tuple[Trajectory, ...]
    t_end: float


def representation_times(p: DDEProblem, t: float, n_coarse: int = 100, n_history: int = 50) -> np.ndarray:
    """Restart-time grid for the representation formula: a coarse grid over
    [t0, t] refined over each history window [t0, t0 + tau_k], with the
    window endpoints included exactly so the integrals split cleanly."""
    if t <= p.t0:
        raise ValueError(f"t must exceed t0 = {p.t0}")
    pts = [np.linspace(p.t0, t, n_coarse + 1)]
    for term in p.terms:
        if term.tau > 0.0 and p.t0 + term.tau <= t:
            pts.append(np.linspace(p.t0, p.t0 + term.tau, n_history + 1))
    s = np.concatenate(pts)
    s = np.unique(s)
    # collapse float-level duplicates
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = np.diff(s) > 1e-12 * max(1.0, abs(t))
    return s[keep]


def fundamental_family(
    p: DDEProblem, s_values: np.ndarray, t_end: float, step: float | None = None
) -> FundamentalFamily:
    dt = step if step is not None else default_step(p)
    # a restart at the horizon itself still needs a nonempty span so that
    # X(t_end, t_end) = 1 can be queried
    trajs = tuple(
        fundamental(p, float(s), max(t_end, float(s) + dt), step) for s in s_values
    )
    return FundamentalFamily(
        s_values=np.asarray(s_values, dtype=float),
        trajectories=trajs,
        t_end=float(t_end),
    )


def reconstruct_via_representation(p: DDEProblem, family: FundamentalFamily, t: float) -> float:
    """Evaluate the representation formula at time t by trapezoid
    quadrature over the family's restart grid."""
    if t > family.t_end + 1e-9:
        raise ValueError(f"t = {t} is beyond the family horizon {family.t_end}")
    s = family.s_values
    if abs(s[0] - p.t0) > 1e-12 * max(1.0, abs(p.t0)):
        raise ValueError("the restart grid must start at t0")

    X_at_t = np.array([traj(t) if s_j <= t else 0.0 for s_j, traj in zip(s, family.trajectories)])

    total = X_at_t[0] * p.x0

    # history contribution of each delay term over [t0, t0 + tau_k]
    for term in p.terms:
        if term.tau <= 0.0:
            continue
        upper = p.t0 + term.tau
        mask = s <= upper + 1e-12 * max(1.0, abs(upper))
        ss = s[mask]
        if abs(ss[-1] - upper) > 1e-9:
            raise ValueError(
                f"restart grid must contain t0 + tau = {upper}; "
                "build it with representation_times()"
            )
        hs = sample(term.h, ss)
        bs = sample(term.b, ss)
        phis = np.zeros_like(ss)
        early = hs <= p.t0
        if np.any(early):
            phis[early] = sample(p.phi, hs[early])
        integrand = X_at_t[mask] * bs * phis
        total -= float(np.trapezoid(integrand, ss))

    # forcing contribution over [t0, t]
    if not (isinstance(p.f, Num) and p.f.value == 0.0):
        mask = s <= t + 1e-12 * max(1.0, abs(t))
        ss = s[mask]
        fs = sample(p.f, ss)
        integrand = X_at_t[mask] * fs
        total += float(np.trapezoid(integrand, ss))

    return float(total)
