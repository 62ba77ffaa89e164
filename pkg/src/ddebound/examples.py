"""Built-in example problem files.

Each entry is a complete problem file (see :mod:`ddebound.problemfile`)
for one of the worked equations the test suite and the ``reproduce``
subcommand pin down: a decaying equation with an oscillating coefficient
and proportional delay bound, its forced variant, two growing equations
(constant delay, and a 14-to-16 unit swinging delay), the piecewise-
constant floor-delay construction, and a two-term equation whose
coefficients oscillate in sign.
"""

from __future__ import annotations

from .problemfile import ProblemFile, parse_problem_file

__all__ = ["EXAMPLE_IDS", "example_text", "load_example"]


_EXAMPLES: dict[str, str] = {
    "1": """\
# one oscillating coefficient, decaying at rate 0.15
[problem]
t0 = 0
x0 = 1
phi = sin(20*t) - 1
f = 0
t_end = 40

[term]
b = 0.2*(2 - sin(t))
h = t - (2 - sin(t))/12
delta = 1/12
tau = 0.25

[certify]
mode = decay
lambda = 0.15
""",
    "1f": """\
# forced variant of example 1, same certificate plus a forcing offset
[problem]
t0 = 0
x0 = 1
phi = sin(20*t) - 1
f = 0.05*(1 + sin(2*t))
t_end = 40

[term]
b = 0.2*(2 - sin(t))
h = t - (2 - sin(t))/12
delta = 1/12
tau = 0.25

[certify]
mode = decay
lambda = 0.15
""",
    "2": """\
# constant coefficient and delay, unstable; growth envelope at rate 0.8
[problem]
t0 = 0
x0 = 1
phi = 0
t_end = 8

[term]
b = 2
h = t - 1
delta = 1
tau = 1

[certify]
mode = growth
lambda = 0.8
""",
    "2a": """\
# delay swinging between 14 and 16, growth envelope at rate 0.2
[problem]
t0 = 0
x0 = 1
phi = 0
t_end = 60

[term]
b = 0.2*(2 - sin(t))
h = t - 15 + sin(t)
delta = 14
tau = 16

[certify]
mode = growth
lambda = 0.2
""",
    "2a-floor": """\
# piecewise-constant argument: delay sweeps 0..4*pi, much faster growth
[problem]
t0 = 0
x0 = 1
phi = 0
t_end = 12*pi

[term]
b = 0.2*(2 - sin(t))
h = 4*pi*floor(t/(4*pi))
delta = 0
tau = 4*pi

[certify]
mode = auto
""",
    "3": """\
# two terms whose coefficients oscillate in sign, decaying at rate 0.02
[problem]
t0 = 0
x0 = 1
phi = 0
t_end = 100

[term]
b = 0.2*(0.5 - sin(t))
h = t - (2 - sin(t))/6
delta = 1/6
tau = 0.5

[term]
b = 0.2*(0.5 + sin(t))
h = t - (2 - sin(t))/12
delta = 1/12
tau = 0.25

[certify]
mode = decay
lambda = 0.02
""",
}

EXAMPLE_IDS = tuple(_EXAMPLES)


def example_text(example_id: str) -> str:
    """Raw problem-file text for a built-in example."""
    try:
        return _EXAMPLES[example_id]
    except KeyError:
        known = ", ".join(EXAMPLE_IDS)
        raise KeyError(f"unknown example {example_id!r}; known: {known}") from None


def load_example(example_id: str) -> ProblemFile:
    return parse_problem_file(example_text(example_id))
