"""Exponential envelope certificates from grid-estimated norms.

Every operation here reduces a stability or growth statement to finitely
many grid scans.  The produced :class:`EnvelopeCertificate` asserts, for
the decaying direction,

    |x(t)| <= A * exp(-r (t - t0)) * (|x(t0)| + sum_k c_k * sup|phi|)
              + (A / r) * sup|f| over [t0, t]

and for the growing direction

    |x(t)| <= A * exp(+r (t - t0)) * (|x(t0)| + sum_k c_k * sup|phi|
              + sup|f| over [t0, t] / r)

with rate r, amplification A and per-term history weights c_k.  The
hypotheses behind each route:

* decay at rate r: the reweighted coefficient sum
  a(t) = sum_k exp(r (t - h_k(t))) b_k(t) - r must stay above a positive
  floor, and the product of the total coefficient mass with the delay-
  weighted ratio norms (the contraction constant) must stay below one.
  Then A = 1 / (1 - contraction) and c_k = (exp(r tau_k) - 1)/r * sup|b_k|.
* growth at rate r: same shape with a(t) = sum_k exp(-r (t - h_k)) b_k + r,
  contraction built from exp(-r delta_k) sup|b_k / a| per term, and
  c_k = (1 - exp(-r tau_k))/r * sup|b_k|.
* growth, explicit variant: replaces the ratio norms by the coarser
  delay-weighted coefficient mass ("load"); needs load < floor and gives
  A = floor / (floor - load).
* trivial growth: rate sup_t sum |b_k|, A = 1, from the integral bound on
  the fundamental function.

:func:`critical_decay_rate` solves the scalar rate equation whose unique
root bounds the certifiable decay rates for non-negative coefficients,
and the optimizers search the largest certifiable decay rate or the
smallest certifiable growth rate by bracketing plus bisection.

Terms with a zero delay span contribute nothing to the delay-weighted
sums, so an instantaneous term b(t) x(t) is certified with zero
contraction; in that degenerate case a zero floor is accepted (the bound
is then exact, e.g. b constant, rate = b gives A = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import sample
from .norms import (
    PositivityViolation,
    inf_bound,
    liminf_estimate,
    sup_norm,
    sup_ratio_norm,
)
from .problem import DDEProblem, GridSpec, default_grid, grid_times

__all__ = [
    "DECAYING",
    "GROWING",
    "HypothesisFailure",
    "BracketFailure",
    "NoFeasibleRate",
    "EnvelopeCertificate",
    "FundamentalBound",
    "fundamental_bound",
    "certify_decay",
    "certify_growth",
    "certify_growth_explicit",
    "trivial_growth_bound",
    "DecayCheck",
    "quick_decay_check",
    "ClassicCheck",
    "classic_stability_check",
    "CriticalRate",
    "critical_decay_rate",
    "TunedRate",
    "optimize_decay_rate",
    "optimize_growth_rate",
    "certificate_to_text",
    "certificate_from_text",
]

DECAYING = "decaying"
GROWING = "growing"


class HypothesisFailure(Exception):
    """A certificate hypothesis does not hold on the scanned grid."""

    def __init__(self, condition: str, value: float, bound: float, detail: str = ""):
        self.condition = condition
        self.value = value
        self.bound = bound
        self.detail = detail
        msg = f"{condition}: value {value} violates bound {bound}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class BracketFailure(Exception):
    """A root or feasibility boundary could not be bracketed."""


class NoFeasibleRate(Exception):
    """Not even the smallest probed rate admits a certificate."""


@dataclass(frozen=True)
class EnvelopeCertificate:
    direction: str
    rate: float
    amplification: float
    init_coeffs: tuple[float, ...]
    forcing_coeff: float
    positivity_floor: float
    condition_values: dict
    source: str
    problem_key: str
    grid: GridSpec

    def __post_init__(self):
        if self.direction not in (DECAYING, GROWING):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.rate < 0.0:
            raise ValueError(f"rate must be non-negative, got {self.rate}")
        if not self.amplification >= 1.0:
            raise ValueError(f"amplification must be >= 1, got {self.amplification}")


@dataclass(frozen=True)
class FundamentalBound:
    """Uniform bound on the fundamental function of
    y'(t) = c(t) y(t) - sum_k d_k(t) y(h_k(t))."""

    contraction: float
    bound: float
    damping_floor: float


# ---------------------------------------------------------------------------
# shared scan helpers
# ---------------------------------------------------------------------------

def _grid(p: DDEProblem, t0, g):
    if t0 is None:
        t0 = p.t0
    if g is None:
        g = default_grid(p)
    return float(t0), g


def _lag_sampler(term):
    return lambda ts: ts - sample(term.h, ts)


def _sum_coeff_sampler(p: DDEProblem):
    return lambda ts: sum(sample(term.b, ts) for term in p.terms)


def _reweighted_sum(p: DDEProblem, rate: float, sign: float):
    """Sampler for a(t) = sum_k exp(sign * rate * (t - h_k(t))) b_k(t) - sign * rate."""

    def f(ts):
        acc = np.zeros_like(np.asarray(ts, dtype=float))
        for term in p.terms:
            lag = ts - sample(term.h, ts)
            acc = acc + np.exp(sign * rate * lag) * sample(term.b, ts)
        return acc - sign * rate

    return f


def _check_floor(p, floor, condition="positivity_floor"):
    """Positive floor required as soon as any term has a real delay span;
    the purely instantaneous problem is allowed to sit exactly at zero."""
    any_delay = any(term.tau > 0.0 for term in p.terms)
    if any_delay:
        ok = floor.value > 0.0
    else:
        ok = floor.value >= 0.0
    if not ok:
        raise HypothesisFailure(
            condition, floor.value, 0.0, f"minimum at t = {floor.arg_t}"
        )


# ---------------------------------------------------------------------------
# fundamental-function bound for the damped comparison equation
# ---------------------------------------------------------------------------

def fundamental_bound(c, terms, t0: float, g: GridSpec) -> FundamentalBound:
    """Bound |Y(t, s)| <= 1 / (1 - contraction) for
    y' = c(t) y - sum d_k(t) y(h_k(t)): requires the damping excess
    sum_k d_k(t) - c(t) to stay above a positive floor and the contraction
    product to stay below one."""

    def excess(ts):
        acc = -sample(c, ts)
        for term in terms:
            acc = acc + sample(term.b, ts)
        return acc

    floor = inf_bound(excess, t0, g)
    if not floor.value > 0.0:
        raise HypothesisFailure(
            "damping_floor", floor.value, 0.0, f"minimum at t = {floor.arg_t}"
        )

    mass = sup_norm(c, t0, g).value + sum(
        sup_norm(term.b, t0, g).value for term in terms
    )
    spread = 0.0
    for term in terms:
        if term.tau <= 0.0:
            continue
        spread += term.tau * sup_ratio_norm(term.b, excess, t0, g).value
    contraction = mass * spread
    if not contraction < 1.0:
        raise HypothesisFailure("contraction", contraction, 1.0)
    return FundamentalBound(
        contraction=contraction,
        bound=1.0 / (1.0 - contraction),
        damping_floor=floor.value,
    )


# ---------------------------------------------------------------------------
# decay certificates
# ---------------------------------------------------------------------------

def certify_decay(
    p: DDEProblem, rate: float, t0: float | None = None, g: GridSpec | None = None
) -> EnvelopeCertificate:
    """Certificate |x(t)| <= A exp(-rate (t - t0)) (...) at a given rate."""
    t0, g = _grid(p, t0, g)
    if not rate > 0.0:
        raise ValueError(f"decay rate must be positive, got {rate}")

    a = _reweighted_sum(p, rate, +1.0)
    floor = inf_bound(a, t0, g)
    _check_floor(p, floor)

    coeff_norms = [sup_norm(term.b, t0, g).value for term in p.terms]
    mass = rate + sum(
        math.exp(rate * term.tau) * cn for term, cn in zip(p.terms, coeff_norms)
    )

    cond: dict = {"horizon": g.horizon}
    spread = 0.0
    for k, term in enumerate(p.terms):
        cond[f"coeff_norm_{k + 1}"] = coeff_norms[k]
        if term.tau <= 0.0 or floor.value <= 0.0:
            continue

        def weighted(ts, term=term):
            lag = ts - sample(term.h, ts)
            return np.exp(rate * lag) * sample(term.b, ts)

        cond[f"ratio_norm_{k + 1}"] = sup_ratio_norm(term.b, a, t0, g).value
        w = sup_ratio_norm(weighted, a, t0, g).value
        cond[f"weighted_ratio_norm_{k + 1}"] = w
        spread += term.tau * w

    contraction = mass * spread
    cond["contraction"] = contraction
    if not contraction < 1.0:
        raise HypothesisFailure("contraction", contraction, 1.0)

    amplification = 1.0 / (1.0 - contraction)
    init_coeffs = tuple(
        cn * math.expm1(rate * term.tau) / rate
        for term, cn in zip(p.terms, coeff_norms)
    )
    return EnvelopeCertificate(
        direction=DECAYING,
        rate=rate,
        amplification=amplification,
        init_coeffs=init_coeffs,
        forcing_coeff=amplification / rate,
        positivity_floor=floor.value,
        condition_values=cond,
        source="decay_envelope",
        problem_key=p.key,
        grid=g,
    )


@dataclass(frozen=True)
class DecayCheck:
    """Cheap sufficient test for decay at a proposed rate: the reweighted
    floor must be positive and the crude coefficient product
    (sum of sup|b_k|) * (sum of tau_k sup|b_k|) must stay below it."""

    ok: bool
    floor: float
    product: float

    def __bool__(self) -> bool:
        return self.ok


def quick_decay_check(
    p: DDEProblem, rate: float, t0: float | None = None, g: GridSpec | None = None
) -> DecayCheck:
    t0, g = _grid(p, t0, g)
    if not rate > 0.0:
        raise ValueError(f"decay rate must be positive, got {rate}")
    floor = inf_bound(_reweighted_sum(p, rate, +1.0), t0, g).value
    norms = [sup_norm(term.b, t0, g).value for term in p.terms]
    product = sum(norms) * sum(
        term.tau * cn for term, cn in zip(p.terms, norms)
    )
    return DecayCheck(ok=floor > 0.0 and product < floor, floor=floor, product=product)


# ---------------------------------------------------------------------------
# growth certificates
# ---------------------------------------------------------------------------

def certify_growth(
    p: DDEProblem, rate: float, t0: float | None = None, g: GridSpec | None = None
) -> EnvelopeCertificate:
    """Certificate |x(t)| <= A exp(+rate (t - t0)) (...) at a given rate.

    The contraction uses the per-term factorization
    exp(-rate * delta_k) * sup|b_k / a|, which upper-bounds the sharper
    ratio of the reweighted term against a; the factorized form is what
    the explicit worked constants downstream reproduce.
    """
    t0, g = _grid(p, t0, g)
    if not rate > 0.0:
        raise ValueError(f"growth rate must be positive, got {rate}")

    a = _reweighted_sum(p, rate, -1.0)
    floor = inf_bound(a, t0, g)
    _check_floor(p, floor)

    coeff_norms = [sup_norm(term.b, t0, g).value for term in p.terms]
    mass = rate + sum(
        math.exp(-rate * term.delta) * cn for term, cn in zip(p.terms, coeff_norms)
    )

    cond: dict = {"horizon": g.horizon}
    spread = 0.0
    for k, term in enumerate(p.terms):
        cond[f"coeff_norm_{k + 1}"] = coeff_norms[k]
        if term.tau <= 0.0 or floor.value <= 0.0:
            continue
        r = sup_ratio_norm(term.b, a, t0, g).value
        cond[f"ratio_norm_{k + 1}"] = r
        spread += term.tau * math.exp(-rate * term.delta) * r

    contraction = mass * spread
    cond["contraction"] = contraction
    if not contraction < 1.0:
        raise HypothesisFailure("contraction", contraction, 1.0)

    amplification = 1.0 / (1.0 - contraction)
    init_coeffs = tuple(
        cn * (-math.expm1(-rate * term.tau)) / rate
        for term, cn in zip(p.terms, coeff_norms)
    )
    return EnvelopeCertificate(
        direction=GROWING,
        rate=rate,
        amplification=amplification,
        init_coeffs=init_coeffs,
        forcing_coeff=amplification / rate,
        positivity_floor=floor.value,
        condition_values=cond,
        source="growth_envelope",
        problem_key=p.key,
        grid=g,
    )


def certify_growth_explicit(
    p: DDEProblem, rate: float, t0: float | None = None, g: GridSpec | None = None
) -> EnvelopeCertificate:
    """Growth certificate with fully explicit constants: no ratio norms,
    the delay-weighted coefficient load is tested directly against the
    positivity floor and A = floor / (floor - load)."""
    t0, g = _grid(p, t0, g)
    if not rate > 0.0:
        raise ValueError(f"growth rate must be positive, got {rate}")

    a = _reweighted_sum(p, rate, -1.0)
    floor = inf_bound(a, t0, g)
    if not floor.value > 0.0:
        raise HypothesisFailure(
            "positivity_floor", floor.value, 0.0, f"minimum at t = {floor.arg_t}"
        )

    coeff_norms = [sup_norm(term.b, t0, g).value for term in p.terms]
    mass = rate + sum(
        math.exp(-rate * term.delta) * cn for term, cn in zip(p.terms, coeff_norms)
    )
    load = mass * sum(
        term.tau * math.exp(-rate * term.delta) * cn
        for term, cn in zip(p.terms, coeff_norms)
    )
    if not load < floor.value:
        raise HypothesisFailure("floor_margin", load, floor.value)

    amplification = floor.value / (floor.value - load)
    init_coeffs = tuple(
        cn * (-math.expm1(-rate * term.tau)) / rate
        for term, cn in zip(p.terms, coeff_norms)
    )
    cond: dict = {"load": load, "horizon": g.horizon}
    for k, cn in enumerate(coeff_norms):
        cond[f"coeff_norm_{k + 1}"] = cn
    return EnvelopeCertificate(
        direction=GROWING,
        rate=rate,
        amplification=amplification,
        init_coeffs=init_coeffs,
        forcing_coeff=amplification / rate,
        positivity_floor=floor.value,
        condition_values=cond,
        source="growth_explicit",
        problem_key=p.key,
        grid=g,
    )


def trivial_growth_bound(
    p: DDEProblem, t0: float | None = None, g: GridSpec | None = None
) -> EnvelopeCertificate:
    """Always-valid growth envelope from |X(t,s)| <= exp of the integrated
    coefficient mass: rate = sup_t sum_k |b_k(t)|, amplification 1.

    With identically zero coefficients the rate is 0 and the envelope is
    the constant |x(t0)|; the forcing coefficient is then infinite, i.e.
    no finite forced bound is claimed by this route.
    """
    t0, g = _grid(p, t0, g)

    def mass(ts):
        acc = np.zeros_like(np.asarray(ts, dtype=float))
        for term in p.terms:
            acc = acc + np.abs(sample(term.b, ts))
        return acc

    rate = sup_norm(mass, t0, g).value
    coeff_norms = [sup_norm(term.b, t0, g).value for term in p.terms]
    if rate > 0.0:
        init_coeffs = tuple(
            cn * (-math.expm1(-rate * term.tau)) / rate
            for term, cn in zip(p.terms, coeff_norms)
        )
        forcing = 1.0 / rate
    else:
        init_coeffs = tuple(cn * term.tau for term, cn in zip(p.terms, coeff_norms))
        forcing = math.inf
    cond: dict = {"horizon": g.horizon}
    for k, cn in enumerate(coeff_norms):
        cond[f"coeff_norm_{k + 1}"] = cn
    return EnvelopeCertificate(
        direction=GROWING,
        rate=rate,
        amplification=1.0,
        init_coeffs=init_coeffs,
        forcing_coeff=forcing,
        positivity_floor=math.nan,
        condition_values=cond,
        source="growth_trivial",
        problem_key=p.key,
        grid=g,
    )


# ---------------------------------------------------------------------------
# classic test and the rate equation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassicCheck:
    """Textbook sufficient stability test: non-negative coefficients whose
    tail sum stays positive and whose delay-weighted mass is below one."""

    ok: bool
    coeff_min: float
    liminf_sum: float
    load: float

    def __bool__(self) -> bool:
        return self.ok


def classic_stability_check(
    p: DDEProblem, t0: float | None = None, g: GridSpec | None = None
) -> ClassicCheck:
    t0, g = _grid(p, t0, g)
    ts = grid_times(t0, g)
    coeff_min = min(float(np.min(sample(term.b, ts))) for term in p.terms)
    lim = liminf_estimate(_sum_coeff_sampler(p), t0, g).value
    load = sum(term.tau * sup_norm(term.b, t0, g).value for term in p.terms)
    return ClassicCheck(
        ok=coeff_min >= 0.0 and lim > 0.0 and load < 1.0,
        coeff_min=coeff_min,
        liminf_sum=lim,
        load=load,
    )


@dataclass(frozen=True)
class CriticalRate:
    """Root of the rate equation; every decay rate strictly below ``rate``
    feeds :func:`certify_decay`."""

    rate: float
    lower: float
    upper: float
    liminf_sum: float
    value_at_zero: float
    probes: tuple[tuple[float, float], ...]


def _assert_increasing(probes: list[tuple[float, float]]):
    by_rate = sorted(probes)
    for (l1, g1), (l2, g2) in zip(by_rate, by_rate[1:]):
        if g2 < g1 - 1e-12 * max(1.0, abs(g1)):
            raise BracketFailure(
                f"rate-equation value decreased from {g1} at {l1} to {g2} at {l2}; "
                "grid norm estimates are inconsistent"
            )


def critical_decay_rate(
    p: DDEProblem,
    t0: float | None = None,
    g: GridSpec | None = None,
    tol: float = 1e-9,
) -> CriticalRate:
    """Solve the rate equation for non-negative coefficients.

    Writing S(t) = sum_k b_k(t), the equation in the unknown rate r is

        (r + sum_k exp(r tau_k) sup|b_k|)
          * sum_k tau_k exp(r tau_k) sup|b_k / (S - r)|  =  1 .

    Both factors increase in r, the left side is below one at r = 0 by
    hypothesis and blows up as r approaches the grid minimum of S, so
    bisection finds the unique root.  Monotonicity is re-checked across
    every pair of evaluations.
    """
    t0, g = _grid(p, t0, g)
    ts = grid_times(t0, g)

    coeff_norms = []
    for k, term in enumerate(p.terms):
        bs = sample(term.b, ts)
        lo = float(np.min(bs))
        if lo < 0.0:
            raise HypothesisFailure(
                "coefficient_sign", lo, 0.0, f"term {k + 1} turns negative"
            )
        coeff_norms.append(float(np.max(bs)))

    sum_b = _sum_coeff_sampler(p)
    lim = liminf_estimate(sum_b, t0, g).value
    if not lim > 0.0:
        raise HypothesisFailure("liminf", lim, 0.0, "tail of the coefficient sum")
    sum_min = float(np.min(sum_b(ts)))

    if not any(term.tau > 0.0 for term in p.terms):
        raise BracketFailure(
            "no positive delay span: the rate equation degenerates; "
            "use optimize_decay_rate instead"
        )

    def value(rate: float) -> float:
        if rate >= sum_min:
            return math.inf
        denom = lambda tq: sum_b(tq) - rate
        try:
            spread = sum(
                term.tau
                * math.exp(rate * term.tau)
                * sup_ratio_norm(term.b, denom, t0, g).value
                for term in p.terms
                if term.tau > 0.0
            )
        except PositivityViolation:
            return math.inf
        mass = rate + sum(
            math.exp(rate * term.tau) * cn
            for term, cn in zip(p.terms, coeff_norms)
        )
        return mass * spread

    probes: list[tuple[float, float]] = []

    def probe(rate: float) -> float:
        v = value(rate)
        if math.isfinite(v):
            probes.append((rate, v))
            _assert_increasing(probes)
        return v

    g0 = probe(0.0)
    if not g0 < 1.0:
        raise HypothesisFailure("contraction_at_zero", g0, 1.0)

    lo, hi = 0.0, min(lim, sum_min) * (1.0 - 1e-9)
    g_hi = probe(hi)
    if not g_hi > 1.0:
        raise BracketFailure(
            f"rate-equation value {g_hi} at the bracket end {hi} never exceeds one"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid) < 1.0:
            lo = mid
        else:
            hi = mid

    return CriticalRate(
        rate=0.5 * (lo + hi),
        lower=lo,
        upper=hi,
        liminf_sum=lim,
        value_at_zero=g0,
        probes=tuple(probes),
    )


# ---------------------------------------------------------------------------
# rate optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TunedRate:
    rate: float
    certificate: EnvelopeCertificate
    probes: tuple[tuple[float, bool], ...]
    nonmonotone: tuple[float, float] | None


_DOUBLING_CAP = 200


def optimize_decay_rate(
    p: DDEProblem,
    t0: float | None = None,
    g: GridSpec | None = None,
    tol: float = 1e-6,
) -> TunedRate:
    """Largest certifiable decay rate, by doubling until the first failure
    and bisecting the bracket.  If a rate above the first failure turns
    out feasible again (non-monotone feasibility, possible with ragged
    norm estimates) the pair is reported and the lower bracket is kept.
    """
    t0, g = _grid(p, t0, g)

    def feasible(rate: float):
        try:
            return certify_decay(p, rate, t0, g)
        except (HypothesisFailure, PositivityViolation):
            return None

    probes: list[tuple[float, bool]] = []
    cert = feasible(tol)
    probes.append((tol, cert is not None))
    if cert is None:
        raise NoFeasibleRate(f"no decay certificate even at rate = {tol}")

    lo = tol
    hi = tol
    for _ in range(_DOUBLING_CAP):
        hi *= 2.0
        c = feasible(hi)
        probes.append((hi, c is not None))
        if c is None:
            break
        lo, cert = hi, c
    else:
        raise BracketFailure(f"still certifiable at rate {hi}; giving up the search")

    nonmonotone = None
    c_above = feasible(2.0 * hi)
    probes.append((2.0 * hi, c_above is not None))
    if c_above is not None:
        nonmonotone = (hi, 2.0 * hi)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        c = feasible(mid)
        probes.append((mid, c is not None))
        if c is None:
            hi = mid
        else:
            lo, cert = mid, c

    return TunedRate(rate=lo, certificate=cert, probes=tuple(probes), nonmonotone=nonmonotone)


_GROWTH_MARGIN = 0.98


def optimize_growth_rate(
    p: DDEProblem,
    t0: float | None = None,
    g: GridSpec | None = None,
    tol: float = 1e-6,
    explicit: bool = False,
) -> TunedRate:
    """Smallest certifiable growth rate.

    Rates whose contraction (or load-to-floor ratio) exceeds 0.98 count as
    infeasible so the reported amplification stays finite instead of
    blowing up against the feasibility boundary.
    """
    t0, g = _grid(p, t0, g)

    def feasible(rate: float):
        try:
            if explicit:
                cert = certify_growth_explicit(p, rate, t0, g)
                if cert.condition_values["load"] > _GROWTH_MARGIN * cert.positivity_floor:
                    return None
            else:
                cert = certify_growth(p, rate, t0, g)
                if cert.condition_values["contraction"] > _GROWTH_MARGIN:
                    return None
            return cert
        except (HypothesisFailure, PositivityViolation):
            return None

    probes: list[tuple[float, bool]] = []
    lo = 0.0
    hi = tol
    cert = feasible(hi)
    probes.append((hi, cert is not None))
    if cert is None:
        for _ in range(_DOUBLING_CAP):
            lo = hi
            hi *= 2.0
            cert = feasible(hi)
            probes.append((hi, cert is not None))
            if cert is not None:
                break
        if cert is None:
            raise NoFeasibleRate(f"no growth certificate up to rate = {hi}")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        c = feasible(mid)
        probes.append((mid, c is not None))
        if c is None:
            lo = mid
        else:
            hi, cert = mid, c

    return TunedRate(rate=hi, certificate=cert, probes=tuple(probes), nonmonotone=None)


# ---------------------------------------------------------------------------
# certificate serialization (flat key = value block)
# ---------------------------------------------------------------------------

def certificate_to_text(cert: EnvelopeCertificate) -> str:
    lines = [
        f"source = {cert.source}",
        f"direction = {cert.direction}",
        f"rate = {cert.rate!r}",
        f"amplification = {cert.amplification!r}",
        f"forcing_coeff = {cert.forcing_coeff!r}",
        f"positivity_floor = {cert.positivity_floor!r}",
    ]
    for i, c in enumerate(cert.init_coeffs):
        lines.append(f"init_coeff_{i + 1} = {c!r}")
    for key in sorted(cert.condition_values):
        lines.append(f"{key} = {cert.condition_values[key]!r}")
    lines.append(f"problem_key = {cert.problem_key}")
    lines.append(f"grid_horizon = {cert.grid.horizon!r}")
    lines.append(f"grid_step = {cert.grid.step!r}")
    lines.append(f"grid_tail_start = {cert.grid.tail_start!r}")
    lines.append(f"grid_margin = {cert.grid.margin!r}")
    return "\n".join(lines) + "\n"


def certificate_from_text(text: str) -> EnvelopeCertificate:
    fields: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"certificate line {ln}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        fields[key.strip()] = val.strip()

    def pop_float(key):
        return float(fields.pop(key))

    source = fields.pop("source")
    direction = fields.pop("direction")
    rate = pop_float("rate")
    amplification = pop_float("amplification")
    forcing = pop_float("forcing_coeff")
    floor = pop_float("positivity_floor")
    problem_key = fields.pop("problem_key")
    grid = GridSpec(
        horizon=pop_float("grid_horizon"),
        step=pop_float("grid_step"),
        tail_start=pop_float("grid_tail_start"),
        margin=pop_float("grid_margin"),
    )
    init = []
    i = 1
    while f"init_coeff_{i}" in fields:
        init.append(pop_float(f"init_coeff_{i}"))
        i += 1
    cond = {key: float(val) for key, val in fields.items()}
    return EnvelopeCertificate(
        direction=direction,
        rate=rate,
        amplification=amplification,
        init_coeffs=tuple(init),
        forcing_coeff=forcing,
        positivity_floor=floor,
        condition_values=cond,
        source=source,
        problem_key=problem_key,
        grid=grid,
    )
