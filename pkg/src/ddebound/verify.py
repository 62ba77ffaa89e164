"""Check a certificate's envelope against a computed trajectory.

The envelope asserted by a certificate with rate r, amplification A,
history weights c_k and forcing coefficient F is

    decaying:  A exp(-r (t - t0)) (|x(t0)| + sum_k c_k sup|phi|)
               + F * sup |f| over [t0, t]
    growing:   exp(+r (t - t0)) (A (|x(t0)| + sum_k c_k sup|phi|)
               + F * sup |f| over [t0, t])

where sup|phi| runs over the lookback window [t0 - tau_max, t0].  The
forcing supremum is the running maximum along the trajectory mesh, so an
envelope stays small while the forcing has not yet acted.

A verification that fails by less than the solver's own error scale is
flagged ``numerical_only`` rather than trusted either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimates import DECAYING, EnvelopeCertificate
from .expr import Num, sample
from .norms import sup_norm
from .problem import DDEProblem, GridSpec
from .solver import Trajectory

__all__ = [
    "CertificateMismatch",
    "VerificationReport",
    "history_norm",
    "envelope_values",
    "check_envelope",
    "crossover_time",
]


class CertificateMismatch(Exception):
    """Certificate and problem (or trajectory) disagree on identity."""


@dataclass(frozen=True)
class VerificationReport:
    holds: bool
    min_margin: float
    margin_argmin_t: float
    envelope_rate: float
    empirical_rate: float
    tightness: float
    numerical_only: bool
    n_points: int

    def __bool__(self) -> bool:
        return self.holds


def history_norm(p: DDEProblem, cert: EnvelopeCertificate) -> float:
    """sup |phi| over the lookback window [t0 - tau_max, t0], sampled at
    the certificate's grid step.  Zero-width windows contribute nothing
    because the matching history weights are zero as well."""
    tau = p.tau_max
    if tau <= 0.0:
        return 0.0
    step = min(cert.grid.step, tau)
    g = GridSpec(horizon=tau, step=step, margin=cert.grid.margin)
    return sup_norm(p.phi, p.t0 - tau, g).value


def envelope_values(
    cert: EnvelopeCertificate, p: DDEProblem, ts: np.ndarray
) -> np.ndarray:
    """Envelope evaluated at the (sorted, >= t0) times ``ts``."""
    ts = np.asarray(ts, dtype=float)
    if ts.size and ts[0] < p.t0 - 1e-12:
        raise ValueError(f"envelope starts at t0 = {p.t0}, got t = {ts[0]}")

    base = abs(p.x0)
    if cert.init_coeffs and any(c != 0.0 for c in cert.init_coeffs):
        base += sum(cert.init_coeffs) * history_norm(p, cert)

    span = ts - p.t0
    zero_forcing = isinstance(p.f, Num) and p.f.value == 0.0
    if zero_forcing:
        f_run = None
    else:
        f_run = np.maximum.accumulate(np.abs(sample(p.f, ts)))

    if cert.direction == DECAYING:
        env = cert.amplification * np.exp(-cert.rate * span) * base
        if f_run is not None:
            env = env + cert.forcing_coeff * f_run
    else:
        env = cert.amplification * base
        if f_run is not None:
            if math.isinf(cert.forcing_coeff):
                env = env + np.where(f_run > 0.0, math.inf, 0.0)
            else:
                env = env + cert.forcing_coeff * f_run
        env = np.exp(cert.rate * span) * env
    return env


def _empirical_rate(ts: np.ndarray, xs: np.ndarray) -> float:
    """Least-squares slope of log|x| over the final third of the range,
    ignoring samples too small to carry a meaningful logarithm."""
    cut = ts[0] + 2.0 * (ts[-1] - ts[0]) / 3.0
    sel = (ts >= cut) & (np.abs(xs) > 1e-12)
    if np.count_nonzero(sel) < 2:
        return math.nan
    slope, _ = np.polyfit(ts[sel], np.log(np.abs(xs[sel])), 1)
    return float(slope)


def check_envelope(
    traj: Trajectory, cert: EnvelopeCertificate, p: DDEProblem
) -> VerificationReport:
    """Compare |x| against the certified envelope on the trajectory mesh."""
    if cert.problem_key != p.key:
        raise CertificateMismatch(
            f"certificate was issued for problem {cert.problem_key}, "
            f"got {p.key}"
        )
    if traj.problem_key != p.key:
        raise CertificateMismatch(
            f"trajectory was computed for problem {traj.problem_key}, "
            f"got {p.key}"
        )

    ts = traj.nodes
    xs = traj.values
    env = envelope_values(cert, p, ts)
    with np.errstate(invalid="ignore"):
        margins = env - np.abs(xs)
    i = int(np.nanargmin(margins))
    min_margin = float(margins[i])

    scale = max(1.0, float(np.max(np.abs(xs))))
    err_scale = 10.0 * traj.step**4 * scale
    sign = -1.0 if cert.direction == DECAYING else 1.0
    envelope_rate = sign * cert.rate
    empirical_rate = _empirical_rate(ts, xs)

    return VerificationReport(
        holds=min_margin >= 0.0,
        min_margin=min_margin,
        margin_argmin_t=float(ts[i]),
        envelope_rate=envelope_rate,
        empirical_rate=empirical_rate,
        tightness=empirical_rate - envelope_rate,
        numerical_only=abs(min_margin) <= err_scale,
        n_points=int(ts.size),
    )


def crossover_time(
    cert_a: EnvelopeCertificate,
    cert_b: EnvelopeCertificate,
    x0_abs: float = 1.0,
    phi_norm: float = 0.0,
) -> float | None:
    """Smallest time offset from t0 at which the first unforced envelope
    is below or equal to the second, or None if that never happens.

    Each envelope is K exp(s r t) with K = A (|x0| + sum_k c_k phi_norm)
    and s = -1/+1 for the decaying/growing direction.  When the two
    exponents differ and the curves cross at a positive time, that
    crossing time is returned (the same value whichever order the
    certificates are passed in).
    """
    def level(cert):
        k = cert.amplification * (x0_abs + sum(cert.init_coeffs) * phi_norm)
        s = -1.0 if cert.direction == DECAYING else 1.0
        return k, s * cert.rate

    ka, ra = level(cert_a)
    kb, rb = level(cert_b)
    if ka <= 0.0 or kb <= 0.0:
        raise ValueError("envelope levels must be positive to compare")
    if ra == rb:
        return 0.0 if ka <= kb else None
    t_star = math.log(ka / kb) / (rb - ra)
    if t_star >= 0.0:
        return t_star
    # the curves crossed before t0: the slower envelope already lies below
    return 0.0 if ra < rb else None
