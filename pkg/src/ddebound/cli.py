"""Command line front end: solve, certify, verify, reproduce.

Exit codes: 0 success (and, for verify, envelope holds); 1 certificate
invalid or envelope violated; 2 problem validation failure; 3 parse
failure.  All report output is ``key = value`` lines in a stable order
so runs can be diffed.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .estimates import (
    BracketFailure,
    DECAYING,
    GROWING,
    EnvelopeCertificate,
    HypothesisFailure,
    NoFeasibleRate,
    certificate_from_text,
    certificate_to_text,
    certify_decay,
    certify_growth,
    certify_growth_explicit,
    classic_stability_check,
    critical_decay_rate,
    optimize_growth_rate,
    trivial_growth_bound,
)
from .examples import EXAMPLE_IDS, load_example
from .expr import ExprError
from .norms import PositivityViolation, sup_norm
from .problem import DDEProblem, GridSpec, default_grid, validate
from .problemfile import CertifyOptions, ProblemFile, ProblemFileError, load_problem_file
from .solver import NonFiniteRightSide, StepTooLarge, solve
from .verify import (
    CertificateMismatch,
    check_envelope,
    crossover_time,
    envelope_values,
    history_norm,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3

_CRITICAL_FRACTION = 0.95


def _fail(code: int, message: str) -> int:
    print(f"error = {message}", file=sys.stderr)
    return code


def _emit(lines):
    for key, value in lines:
        print(f"{key} = {value}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _load(path: str) -> ProblemFile:
    return load_problem_file(path)


def _validated(pf: ProblemFile):
    report = validate(pf.problem, pf.grid)
    if not report:
        for reason in report.reasons:
            print(f"validation_error = {reason}", file=sys.stderr)
    return report


class _CertifyFailed(Exception):
    def __init__(self, lines):
        self.lines = lines
        super().__init__("no certificate")


def _growth_candidates(p: DDEProblem, grid, tol):
    """All growth certificates the optimizers can produce, plus the
    always-valid coefficient-mass bound."""
    cands = []
    for explicit in (False, True):
        try:
            cands.append(
                optimize_growth_rate(
                    p, g=grid, tol=tol if tol is not None else 1e-6, explicit=explicit
                ).certificate
            )
        except (NoFeasibleRate, BracketFailure, PositivityViolation):
            pass
    trivial = trivial_growth_bound(p, g=grid)
    cands.append(trivial)
    return cands, trivial


def _growth_auto(p: DDEProblem, grid, tol):
    cands, trivial = _growth_candidates(p, grid, tol)
    best = min(cands, key=lambda c: (c.rate, c.amplification))
    lines = [("trivial_rate", _fmt(trivial.rate))]
    if best is not trivial:
        t_cross = crossover_time(
            best, trivial, x0_abs=abs(p.x0), phi_norm=history_norm(p, best)
        )
        if t_cross is not None:
            lines.append(("crossover_vs_trivial", _fmt(t_cross)))
    return best, lines


def _growth_at_rate(p: DDEProblem, rate: float, grid):
    try:
        return certify_growth(p, rate, g=grid)
    except (HypothesisFailure, PositivityViolation) as first:
        try:
            return certify_growth_explicit(p, rate, g=grid)
        except (HypothesisFailure, PositivityViolation):
            raise _CertifyFailed(
                [
                    ("certified", "false"),
                    ("failed_condition", first.condition
                     if isinstance(first, HypothesisFailure) else "positivity"),
                    ("failed_value", _fmt(getattr(first, "value", math.nan))),
                ]
            ) from first


def _certificate_for(p: DDEProblem, opts: CertifyOptions, grid):
    """Resolve a certificate per the requested mode.  Returns
    (certificate, extra report lines)."""
    mode, rate, tol = opts.mode, opts.rate, opts.tol

    if mode == "decay":
        if rate is not None:
            try:
                return certify_decay(p, rate, g=grid), []
            except (HypothesisFailure, PositivityViolation) as exc:
                raise _CertifyFailed(
                    [
                        ("certified", "false"),
                        ("failed_condition", exc.condition
                         if isinstance(exc, HypothesisFailure) else "positivity"),
                        ("failed_value", _fmt(getattr(exc, "value", math.nan))),
                    ]
                ) from exc
        critical = critical_decay_rate(p, g=grid, tol=tol if tol is not None else 1e-9)
        cert = certify_decay(p, _CRITICAL_FRACTION * critical.rate, g=grid)
        return cert, [("critical_rate", _fmt(critical.rate))]

    if mode == "growth":
        if rate is not None:
            cert = _growth_at_rate(p, rate, grid)
            _, lines = _growth_auto_lines_for(cert, p, grid)
            return cert, lines
        best, lines = _growth_auto(p, grid, tol)
        return best, lines

    # auto: classic check, then the decay pipeline, then growth
    classic = classic_stability_check(p, g=grid)
    lines = [
        ("classic_ok", _fmt(classic.ok)),
        ("classic_load", _fmt(classic.load)),
    ]
    try:
        critical = critical_decay_rate(p, g=grid, tol=tol if tol is not None else 1e-9)
        cert = certify_decay(p, _CRITICAL_FRACTION * critical.rate, g=grid)
        return cert, lines + [("critical_rate", _fmt(critical.rate))]
    except (HypothesisFailure, BracketFailure, PositivityViolation):
        pass
    best, growth_lines = _growth_auto(p, grid, tol)
    return best, lines + growth_lines


def _growth_auto_lines_for(cert: EnvelopeCertificate, p: DDEProblem, grid):
    trivial = trivial_growth_bound(p, g=grid)
    lines = [("trivial_rate", _fmt(trivial.rate))]
    t_cross = crossover_time(
        cert, trivial, x0_abs=abs(p.x0), phi_norm=history_norm(p, cert)
    )
    if t_cross is not None:
        lines.append(("crossover_vs_trivial", _fmt(t_cross)))
    return trivial, lines


def cmd_solve(args) -> int:
    try:
        pf = _load(args.file)
    except (ProblemFileError, ExprError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    if not _validated(pf):
        return EXIT_VALIDATION
    step = args.step if args.step is not None else pf.solve_options.step
    try:
        traj = solve(pf.problem, pf.t_end, step=step)
    except (StepTooLarge, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except NonFiniteRightSide as exc:
        return _fail(EXIT_INVALID, str(exc))
    if args.out:
        traj.to_csv(args.out)
        _emit(
            [
                ("command", "solve"),
                ("file", args.file),
                ("points", traj.nodes.size),
                ("step", _fmt(traj.step)),
                ("t_end", _fmt(float(traj.nodes[-1]))),
                ("x_end", _fmt(float(traj.values[-1]))),
                ("out", args.out),
            ]
        )
    else:
        traj.to_csv(sys.stdout)
    return EXIT_OK


def cmd_certify(args) -> int:
    try:
        pf = _load(args.file)
    except (ProblemFileError, ExprError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    if not _validated(pf):
        return EXIT_VALIDATION

    opts = pf.certify_options
    if args.mode is not None:
        opts = CertifyOptions(mode=args.mode, rate=opts.rate, tol=opts.tol)
    if args.rate is not None:
        opts = CertifyOptions(mode=opts.mode, rate=args.rate, tol=opts.tol)
    if args.tol is not None:
        opts = CertifyOptions(mode=opts.mode, rate=opts.rate, tol=args.tol)

    header = [("command", "certify"), ("file", args.file), ("mode", opts.mode)]
    try:
        cert, extra = _certificate_for(pf.problem, opts, pf.grid)
    except _CertifyFailed as exc:
        _emit(header + exc.lines)
        return EXIT_INVALID
    except (HypothesisFailure, BracketFailure, NoFeasibleRate,
            PositivityViolation) as exc:
        _emit(header + [("certified", "false"), ("reason", str(exc))])
        return EXIT_INVALID

    _emit(header + [("certified", "true")] + extra)
    print(certificate_to_text(cert), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(certificate_to_text(cert))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        pf = _load(args.file)
    except (ProblemFileError, ExprError, OSError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    if not _validated(pf):
        return EXIT_VALIDATION

    if args.cert:
        try:
            with open(args.cert, "r", encoding="utf-8") as fh:
                cert = certificate_from_text(fh.read())
        except (ValueError, OSError) as exc:
            return _fail(EXIT_PARSE, f"certificate: {exc}")
    else:
        try:
            cert, _ = _certificate_for(pf.problem, pf.certify_options, pf.grid)
        except (_CertifyFailed, HypothesisFailure, BracketFailure,
                NoFeasibleRate, PositivityViolation) as exc:
            return _fail(EXIT_INVALID, f"no certificate to verify: {exc}")

    step = args.step if args.step is not None else pf.solve_options.step
    try:
        traj = solve(pf.problem, pf.t_end, step=step)
    except (StepTooLarge, ValueError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except NonFiniteRightSide as exc:
        return _fail(EXIT_INVALID, str(exc))

    try:
        report = check_envelope(traj, cert, pf.problem)
    except CertificateMismatch as exc:
        return _fail(EXIT_INVALID, str(exc))

    _emit(
        [
            ("command", "verify"),
            ("file", args.file),
            ("source", cert.source),
            ("rate", _fmt(cert.rate)),
            ("holds", _fmt(report.holds)),
            ("min_margin", _fmt(report.min_margin)),
            ("margin_argmin_t", _fmt(report.margin_argmin_t)),
            ("envelope_rate", _fmt(report.envelope_rate)),
            ("empirical_rate", _fmt(report.empirical_rate)),
            ("tightness", _fmt(report.tightness)),
            ("numerical_only", _fmt(report.numerical_only)),
            ("n_points", report.n_points),
        ]
    )
    if args.out:
        env = envelope_values(cert, pf.problem, traj.nodes)
        data = np.column_stack([traj.nodes, np.abs(traj.values), env])
        np.savetxt(args.out, data, delimiter=",", header="t,abs_x,envelope",
                   comments="")
        print(f"out = {args.out}")
    return EXIT_OK if report.holds else EXIT_INVALID


# ---------------------------------------------------------------------------
# reproduce: pinned constants for the built-in examples
# ---------------------------------------------------------------------------

class _Pins:
    def __init__(self):
        self.failures = 0

    def check(self, name: str, ok: bool, detail: str):
        tag = "[PASS]" if ok else "[FAIL]"
        print(f"{tag} {name}: {detail}")
        if not ok:
            self.failures += 1


def _overlay(p, grid, direction, rate, amplification, forcing_coeff=0.0):
    """Certificate carrying externally fixed constants, used to test that
    a published envelope really dominates the computed solution."""
    return EnvelopeCertificate(
        direction=direction,
        rate=rate,
        amplification=amplification,
        init_coeffs=(),
        forcing_coeff=forcing_coeff,
        positivity_floor=math.nan,
        condition_values={},
        source="growth_trivial" if direction != DECAYING else "decay_envelope",
        problem_key=p.key,
        grid=grid,
    )


def _reproduce_1(pins, forced: bool) -> None:
    pf = load_example("1f" if forced else "1")
    p = pf.problem
    grid = default_grid(p)
    bnorm = sup_norm(p.terms[0].b, p.t0, grid).value
    pins.check("coefficient norm = 0.6", abs(bnorm - 0.6) <= 1e-7,
               f"got {bnorm!r}")

    critical = critical_decay_rate(p, g=grid)
    pins.check("critical rate = 0.159229 +- 5e-4",
               abs(critical.rate - 0.159229) <= 5e-4, f"got {critical.rate!r}")

    cert = certify_decay(p, pf.certify_options.rate, g=grid)
    cv = cert.condition_values
    pins.check("floor >= 0.05", cert.positivity_floor >= 0.05,
               f"got {cert.positivity_floor!r}")
    pins.check("ratio norm <= 3.85*1.01", cv["ratio_norm_1"] <= 3.85 * 1.01,
               f"got {cv['ratio_norm_1']!r}")
    pins.check("contraction <= 0.803*1.01", cv["contraction"] <= 0.803 * 1.01,
               f"got {cv['contraction']!r}")
    pins.check("amplification <= 5.1*1.02", cert.amplification <= 5.1 * 1.02,
               f"got {cert.amplification!r}")

    traj = solve(p, pf.t_end)
    forcing = 34.0 if forced else 0.0
    overlay = _overlay(p, grid, DECAYING, 0.15, 6.67, forcing_coeff=forcing)
    rep = check_envelope(traj, overlay, p)
    label = "6.67 exp(-0.15 t) + 3.4" if forced else "6.67 exp(-0.15 t)"
    pins.check(f"{label} dominates", rep.holds,
               f"min margin {rep.min_margin!r} at t = {rep.margin_argmin_t!r}")


def _reproduce_2(pins) -> None:
    pf = load_example("2")
    p = pf.problem
    grid = default_grid(p)
    cert = certify_growth_explicit(p, pf.certify_options.rate, g=grid)
    pins.check("floor >= 1.6986 - 1e-3",
               cert.positivity_floor >= 1.6986 - 1e-3,
               f"got {cert.positivity_floor!r}")
    pins.check("load <= 1.527*1.001",
               cert.condition_values["load"] <= 1.527 * 1.001,
               f"got {cert.condition_values['load']!r}")
    pins.check("amplification <= 10.01", cert.amplification <= 10.01,
               f"got {cert.amplification!r}")

    traj = solve(p, pf.t_end)
    overlay = _overlay(p, grid, GROWING, 0.8, 10.0)
    rep = check_envelope(traj, overlay, p)
    pins.check("10 exp(0.8 t) dominates", rep.holds,
               f"min margin {rep.min_margin!r}")

    trivial = _overlay(p, grid, GROWING, 2.0, 1.0)
    t_cross = crossover_time(overlay, trivial)
    pins.check("crossover vs exp(2 t) = 1.92 +- 0.01",
               t_cross is not None and abs(t_cross - 1.92) <= 0.01,
               f"got {t_cross!r}")


def _reproduce_2a(pins) -> None:
    pf = load_example("2a")
    p = pf.problem
    grid = default_grid(p)
    cert = certify_growth(p, pf.certify_options.rate, g=grid)
    cv = cert.condition_values
    pins.check("ratio norm <= 2.6735*1.01", cv["ratio_norm_1"] <= 2.6735 * 1.01,
               f"got {cv['ratio_norm_1']!r}")
    pins.check("contraction = 0.61515 +- 1%",
               abs(cv["contraction"] - 0.61515) <= 0.0061515,
               f"got {cv['contraction']!r}")
    pins.check("amplification <= 2.6*1.02", cert.amplification <= 2.6 * 1.02,
               f"got {cert.amplification!r}")

    traj = solve(p, pf.t_end)
    overlay = _overlay(p, grid, GROWING, 0.2, 2.6)
    rep = check_envelope(traj, overlay, p)
    pins.check("2.6 exp(0.2 t) dominates", rep.holds,
               f"min margin {rep.min_margin!r}")

    ts, xs = traj.nodes, traj.values
    sel = (ts >= 30.0) & (np.abs(xs) > 1e-12)
    slope = float(np.polyfit(ts[sel], np.log(np.abs(xs[sel])), 1)[0])
    pins.check("tail-fit rate = 0.09 +- 0.02", abs(slope - 0.09) <= 0.02,
               f"got {slope!r} over [30, 60]")

    trivial = _overlay(p, grid, GROWING, 0.6, 1.0)
    t_cross = crossover_time(overlay, trivial)
    pins.check("crossover vs exp(0.6 t) = 2.389 +- 0.01",
               t_cross is not None and abs(t_cross - 2.389) <= 0.01,
               f"got {t_cross!r}")


def _reproduce_floor(pins) -> None:
    pf = load_example("2a-floor")
    p = pf.problem
    traj = solve(p, pf.t_end, step=0.002)
    base = 1.0 - 1.6 * math.pi
    logs = []
    for k in (1, 2, 3):
        want = base**k
        got = float(traj(4.0 * math.pi * k))
        ok = abs(got - want) <= 0.005 * abs(want)
        pins.check(f"x({k}*4*pi) = (1 - 1.6 pi)^{k} +- 0.5%", ok,
                   f"got {got!r} want {want!r}")
        logs.append(math.log(abs(got)))
    ks = np.array([1.0, 2.0, 3.0]) * 4.0 * math.pi
    slope = float(np.polyfit(ks, np.array(logs), 1)[0])
    want_rate = math.log(1.6 * math.pi - 1.0) / (4.0 * math.pi)
    pins.check("fitted growth rate = 0.11 +- 0.01",
               abs(slope - want_rate) <= 0.01,
               f"got {slope!r} want {want_rate!r}")


def _reproduce_3(pins) -> None:
    pf = load_example("3")
    p = pf.problem
    grid = default_grid(p)
    cert = certify_decay(p, pf.certify_options.rate, g=grid)
    cv = cert.condition_values
    pins.check("floor = 0.18 +- 0.01", abs(cert.positivity_floor - 0.18) <= 0.01,
               f"got {cert.positivity_floor!r}")
    pins.check("ratio norm 1 <= 1.691*1.01", cv["ratio_norm_1"] <= 1.691 * 1.01,
               f"got {cv['ratio_norm_1']!r}")
    pins.check("ratio norm 2 <= 1.669*1.01", cv["ratio_norm_2"] <= 1.669 * 1.01,
               f"got {cv['ratio_norm_2']!r}")
    pins.check("contraction <= 0.7953*1.01", cv["contraction"] <= 0.7953 * 1.01,
               f"got {cv['contraction']!r}")
    pins.check("amplification <= 4.89*1.02", cert.amplification <= 4.89 * 1.02,
               f"got {cert.amplification!r}")

    traj = solve(p, pf.t_end)
    overlay = _overlay(p, grid, DECAYING, 0.02, 4.89)
    rep = check_envelope(traj, overlay, p)
    pins.check("4.89 exp(-0.02 t) dominates", rep.holds,
               f"min margin {rep.min_margin!r}")

    classic = classic_stability_check(p, g=grid)
    pins.check("classic test refuses oscillating signs", not classic.ok,
               f"coefficient min {classic.coeff_min!r}")


def cmd_reproduce(args) -> int:
    pins = _Pins()
    runner = {
        "1": lambda: _reproduce_1(pins, forced=False),
        "1f": lambda: _reproduce_1(pins, forced=True),
        "2": lambda: _reproduce_2(pins),
        "2a": lambda: _reproduce_2a(pins),
        "2a-floor": lambda: _reproduce_floor(pins),
        "3": lambda: _reproduce_3(pins),
    }[args.example_id]
    runner()
    return EXIT_OK if pins.failures == 0 else EXIT_INVALID


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ddebound",
        description="Exponential envelope certificates for scalar linear "
                    "delay equations, checked against numerical solutions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="integrate and emit a t,x CSV")
    p_solve.add_argument("file")
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--step", type=float, default=None)
    p_solve.set_defaults(run=cmd_solve)

    p_cert = sub.add_parser("certify", help="compute an envelope certificate")
    p_cert.add_argument("file")
    p_cert.add_argument("--mode", choices=["decay", "growth", "auto"], default=None)
    p_cert.add_argument("--lambda", dest="rate", type=float, default=None)
    p_cert.add_argument("--tol", type=float, default=None)
    p_cert.add_argument("--out", default=None,
                        help="also write the certificate block to this path")
    p_cert.set_defaults(run=cmd_certify)

    p_verify = sub.add_parser(
        "verify", help="solve, then check a certificate's envelope"
    )
    p_verify.add_argument("file")
    p_verify.add_argument("--cert", default=None,
                          help="certificate file (default: certify in-process)")
    p_verify.add_argument("--out", default=None,
                          help="write t,abs_x,envelope CSV to this path")
    p_verify.add_argument("--step", type=float, default=None)
    p_verify.set_defaults(run=cmd_verify)

    p_repro = sub.add_parser("reproduce", help="re-check built-in example pins")
    p_repro.add_argument("example_id", choices=list(EXAMPLE_IDS))
    p_repro.set_defaults(run=cmd_reproduce)

    args = parser.parse_args(argv)
    return args.run(args)


if __name__ == "__main__":
    sys.exit(main())
