"""Plain-text problem files.

Sections written as ``[name]`` headers followed by ``key = value`` lines;
``#`` starts a comment.  ``[problem]`` carries t0, x0, phi, f and t_end;
each ``[term]`` section adds one delay term with b, h, delta, tau;
optional ``[grid]`` (horizon, step, tail_start, margin), ``[solver]``
(step) and ``[certify]`` (mode, lambda, tol) configure the pipeline.

Values of phi, f, b and h are expressions in t.  Every other field is a
constant expression (so ``delta = 1/12`` or ``tau = 4*pi`` stay exact)
and must not mention t.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    Binary,
    Expr,
    ExprError,
    Num,
    TimeVar,
    Unary,
    evaluate,
    parse,
)
from .problem import DDEProblem, DelayTerm, GridSpec

__all__ = [
    "ProblemFileError",
    "SolveOptions",
    "CertifyOptions",
    "ProblemFile",
    "parse_problem_file",
    "load_problem_file",
]

MODES = ("decay", "growth", "auto")


class ProblemFileError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class SolveOptions:
    step: float | None = None


@dataclass(frozen=True)
class CertifyOptions:
    mode: str = "auto"
    rate: float | None = None
    tol: float | None = None


@dataclass(frozen=True)
class ProblemFile:
    problem: DDEProblem
    t_end: float
    grid: GridSpec | None
    solve_options: SolveOptions
    certify_options: CertifyOptions


_SECTION_KEYS = {
    "problem": {"t0", "x0", "phi", "f", "t_end"},
    "term": {"b", "h", "delta", "tau"},
    "grid": {"horizon", "step", "tail_start", "margin"},
    "solver": {"step"},
    "certify": {"mode", "lambda", "tol"},
}


def _mentions_time(e: Expr) -> bool:
    if isinstance(e, TimeVar):
        return True
    if isinstance(e, Unary):
        return _mentions_time(e.arg)
    if isinstance(e, Binary):
        return _mentions_time(e.lhs) or _mentions_time(e.rhs)
    return False


def _scan(text: str):
    """Yield (line_no, section, key, value) plus section-open events with
    key=None."""
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTION_KEYS:
                raise ProblemFileError(f"unknown section [{section}]", ln)
            yield ln, section, None, None
            continue
        if "=" not in line:
            raise ProblemFileError(
                f"expected 'key = value' or a [section] header, got {line!r}", ln
            )
        if section is None:
            raise ProblemFileError("assignment before any [section] header", ln)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SECTION_KEYS[section]:
            raise ProblemFileError(f"unknown key {key!r} in [{section}]", ln)
        if not value:
            raise ProblemFileError(f"empty value for {key!r}", ln)
        yield ln, section, key, value


def _expr_field(value: str, ln: int) -> Expr:
    try:
        return parse(value)
    except ExprError as exc:
        raise ProblemFileError(str(exc), ln) from exc


def _const_field(value: str, ln: int) -> float:
    e = _expr_field(value, ln)
    if _mentions_time(e):
        raise ProblemFileError(
            f"constant field must not depend on t, got {value!r}", ln
        )
    try:
        out = evaluate(e, 0.0)
    except ExprError as exc:
        raise ProblemFileError(str(exc), ln) from exc
    return float(out)


def parse_problem_file(text: str) -> ProblemFile:
    problem_fields: dict = {}
    terms: list[dict] = []
    term_lines: list[int] = []
    grid_fields: dict = {}
    solver_fields: dict = {}
    certify_fields: dict = {}
    seen_singletons: dict[str, int] = {}

    current: dict | None = None
    for ln, section, key, value in _scan(text):
        if key is None:
            if section == "term":
                current = {}
                terms.append(current)
                term_lines.append(ln)
            else:
                if section in seen_singletons:
                    raise ProblemFileError(
                        f"duplicate section [{section}] (first at line "
                        f"{seen_singletons[section]})",
                        ln,
                    )
                seen_singletons[section] = ln
                current = {
                    "problem": problem_fields,
                    "grid": grid_fields,
                    "solver": solver_fields,
                    "certify": certify_fields,
                }[section]
            continue
        if key in current:
            raise ProblemFileError(f"duplicate key {key!r} in [{section}]", ln)
        current[key] = (value, ln)

    if not terms:
        raise ProblemFileError("a problem file needs at least one [term] section")

    def const(fields, key, default=None):
        if key not in fields:
            return default
        value, ln = fields[key]
        return _const_field(value, ln)

    def expr(fields, key, default):
        if key not in fields:
            return default
        value, ln = fields[key]
        return _expr_field(value, ln)

    built_terms = []
    for i, (fields, start_ln) in enumerate(zip(terms, term_lines), start=1):
        for req in ("b", "h", "delta", "tau"):
            if req not in fields:
                raise ProblemFileError(f"term {i} is missing {req!r}", start_ln)
        try:
            built_terms.append(
                DelayTerm(
                    b=expr(fields, "b", None),
                    h=expr(fields, "h", None),
                    delta=const(fields, "delta"),
                    tau=const(fields, "tau"),
                )
            )
        except ValueError as exc:
            raise ProblemFileError(f"term {i}: {exc}", start_ln) from exc

    if "t_end" not in problem_fields:
        raise ProblemFileError("[problem] must declare t_end")
    t_end = const(problem_fields, "t_end")

    problem = DDEProblem(
        terms=built_terms,
        f=expr(problem_fields, "f", Num(0.0)),
        phi=expr(problem_fields, "phi", Num(0.0)),
        t0=const(problem_fields, "t0", 0.0),
        x0=const(problem_fields, "x0", 1.0),
    )
    if not t_end > problem.t0:
        _, ln = problem_fields["t_end"]
        raise ProblemFileError(f"t_end must exceed t0 = {problem.t0}", ln)

    grid = None
    if grid_fields:
        for req in ("horizon", "step"):
            if req not in grid_fields:
                raise ProblemFileError(f"[grid] is missing {req!r}")
        try:
            grid = GridSpec(
                horizon=const(grid_fields, "horizon"),
                step=const(grid_fields, "step"),
                tail_start=const(grid_fields, "tail_start"),
                margin=const(grid_fields, "margin", 0.0),
            )
        except ValueError as exc:
            raise ProblemFileError(f"[grid]: {exc}") from exc

    solve_options = SolveOptions(step=const(solver_fields, "step"))

    mode = "auto"
    if "mode" in certify_fields:
        value, ln = certify_fields["mode"]
        if value not in MODES:
            raise ProblemFileError(
                f"mode must be one of {', '.join(MODES)}, got {value!r}", ln
            )
        mode = value
    certify_options = CertifyOptions(
        mode=mode,
        rate=const(certify_fields, "lambda"),
        tol=const(certify_fields, "tol"),
    )

    return ProblemFile(
        problem=problem,
        t_end=t_end,
        grid=grid,
        solve_options=solve_options,
        certify_options=certify_options,
    )


def load_problem_file(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_file(fh.read())
