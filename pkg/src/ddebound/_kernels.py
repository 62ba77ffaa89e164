"""Hot integration kernels, built once per backend.

:func:`make_kernels` receives a decorator (``numba.njit`` or the identity
function) and returns the compiled kernel set.  Keeping a single source of
truth for both backends guarantees the pure-python fallback computes the
same arithmetic as the jitted path.

The integrator advances on a uniform mesh.  The right side of
x'(t) = f(t) - sum_k b_k(t) x(h_k(t)) carries no instantaneous state term:
every stage value comes from history interpolation, so the classical RK4
stage combination collapses to Simpson weights over the stage times
t_n, t_n + dt/2, t_n + dt.  With cubic Hermite history that is a
fourth-order scheme.  When a delayed argument lands inside the step being
built (short or vanishing delay), stage queries fall back to a provisional
Hermite patch through the predicted endpoint and the step is re-run until
the endpoint stops moving; with history-only queries a single pass is
exact and no re-run happens.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np

# opcodes mirrored from expr.compile_program
_OP_CONST = 0
_OP_T = 1
_OP_ADD = 2
_OP_SUB = 3
_OP_MUL = 4
_OP_DIV = 5
_OP_POW = 6
_OP_NEG = 7
_OP_SIN = 8
_OP_COS = 9
_OP_EXP = 10
_OP_LN = 11
_OP_ABS = 12
_OP_FLOOR = 13

# integrate() status codes
STATUS_OK = 0
STATUS_NONFINITE = 1


def make_kernels(jit) -> SimpleNamespace:
    """Build the kernel set under the given decorator."""

    @jit
    def eval_program(code, args, n, t, stack):
        # stack machine; domain faults push nan instead of raising so the
        # jitted and plain paths behave identically
        sp = 0
        for i in range(n):
            op = code[i]
            if op == _OP_CONST:
                stack[sp] = args[i]
                sp += 1
            elif op == _OP_T:
                stack[sp] = t
                sp += 1
            elif op == _OP_ADD:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] + stack[sp]
            elif op == _OP_SUB:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] - stack[sp]
            elif op == _OP_MUL:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] * stack[sp]
            elif op == _OP_DIV:
                sp -= 1
                d = stack[sp]
                if d == 0.0:
                    stack[sp - 1] = math.nan
                else:
                    stack[sp - 1] = stack[sp - 1] / d
            elif op == _OP_POW:
                sp -= 1
                b = stack[sp - 1]
                e = stack[sp]
                if b < 0.0 and e != math.floor(e):
                    stack[sp - 1] = math.nan
                elif b == 0.0 and e < 0.0:
                    stack[sp - 1] = math.nan
                else:
                    stack[sp - 1] = b ** e
            elif op == _OP_NEG:
                stack[sp - 1] = -stack[sp - 1]
            elif op == _OP_SIN:
                stack[sp - 1] = math.sin(stack[sp - 1])
            elif op == _OP_COS:
                stack[sp - 1] = math.cos(stack[sp - 1])
            elif op == _OP_EXP:
                v = stack[sp - 1]
                if v > 709.0:
                    stack[sp - 1] = math.inf
                else:
                    stack[sp - 1] = math.exp(v)
            elif op == _OP_LN:
                v = stack[sp - 1]
                if v <= 0.0:
                    stack[sp - 1] = math.nan
                else:
                    stack[sp - 1] = math.log(v)
            elif op == _OP_ABS:
                stack[sp - 1] = abs(stack[sp - 1])
            else:  # _OP_FLOOR
                stack[sp - 1] = math.floor(stack[sp - 1])
        return stack[0]

    @jit
    def hermite(x0, d0, x1, d1, theta, dt):
        # cubic Hermite on one mesh cell, theta in [0, 1]
        t2 = theta * theta
        t3 = t2 * theta
        return (
            (2.0 * t3 - 3.0 * t2 + 1.0) * x0
            + (t3 - 2.0 * t2 + theta) * dt * d0
            + (-2.0 * t3 + 3.0 * t2) * x1
            + (t3 - t2) * dt * d1
        )

    @jit
    def integrate(
        t0,
        x0,
        dt,
        n_steps,
        b_code,
        b_args,
        b_len,
        h_code,
        h_args,
        h_len,
        f_code,
        f_args,
        f_len,
        p_code,
        p_args,
        p_len,
        stack,
        max_sweeps,
        sweep_tol,
    ):
        m = b_len.shape[0]
        xs = np.zeros(n_steps + 1)
        ds = np.zeros(n_steps + 1)
        xs[0] = x0

        def deriv(ts, n, xn, dn, xe, de, left_limit):
            # right side at time ts while step n -> n+1 is under construction;
            # xe, de describe the provisional endpoint of that step.  With
            # left_limit the stage closes a cell from the right: a delayed
            # argument sitting exactly on the history jump at t0 is then
            # resolved by its approach direction, so a transversal crossing
            # takes the history side while a flat (piecewise-constant)
            # delay keeps the solution side.
            tn = t0 + n * dt
            acc = eval_program(f_code, f_args, f_len, ts, stack)
            overlapped = False
            for k in range(m):
                bk = eval_program(b_code[k], b_args[k], b_len[k], ts, stack)
                hk = eval_program(h_code[k], h_args[k], h_len[k], ts, stack)
                if hk == t0 and left_limit:
                    eps = 1e-9 * (1.0 + abs(ts))
                    hk_before = eval_program(
                        h_code[k], h_args[k], h_len[k], ts - eps, stack
                    )
                    if hk_before < t0:
                        hk = hk_before  # approach from the history side
                if hk < t0:
                    v = eval_program(p_code, p_args, p_len, hk, stack)
                elif hk > tn:
                    overlapped = True
                    th = (hk - tn) / dt
                    if th > 1.0:
                        th = 1.0
                    v = hermite(xn, dn, xe, de, th, dt)
                elif n == 0:
                    v = xs[0]
                else:
                    u = (hk - t0) / dt
                    i = int(u)
                    if i > n - 1:
                        i = n - 1
                    if i < 0:
                        i = 0
                    v = hermite(xs[i], ds[i], xs[i + 1], ds[i + 1], u - i, dt)
                acc -= bk * v
            return acc, overlapped

        d0, _ = deriv(t0, 0, x0, 0.0, x0, 0.0, False)
        if not math.isfinite(d0):
            return STATUS_NONFINITE, t0, xs, ds
        ds[0] = d0

        for n in range(n_steps):
            tn = t0 + n * dt
            xn = xs[n]
            dn = ds[n]

            k1, _ = deriv(tn, n, xn, dn, xn, dn, False)

            xe = xn + dt * dn  # Euler predictor for the new endpoint
            de = dn
            hit_overlap = False
            for _sweep in range(max_sweeps):
                kmid, o1 = deriv(tn + 0.5 * dt, n, xn, dn, xe, de, False)
                kend, o2 = deriv(tn + dt, n, xn, dn, xe, de, True)
                x_new = xn + dt * (k1 + 4.0 * kmid + kend) / 6.0
                if not math.isfinite(x_new):
                    return STATUS_NONFINITE, tn + dt, xs, ds
                moved = abs(x_new - xe)
                xe = x_new
                de = kend
                if not (o1 or o2):
                    break  # history-only step, first pass is final
                hit_overlap = True
                if moved <= sweep_tol * (1.0 + abs(x_new)):
                    break
            if hit_overlap:
                # endpoint slope consistent with the accepted endpoint value
                de, _ = deriv(tn + dt, n, xn, dn, xe, de, True)
            if not math.isfinite(de):
                return STATUS_NONFINITE, tn + dt, xs, ds
            xs[n + 1] = xe
            ds[n + 1] = de

        return STATUS_OK, t0 + n_steps * dt, xs, ds

    return SimpleNamespace(
        eval_program=eval_program,
        hermite=hermite,
        integrate=integrate,
    )
