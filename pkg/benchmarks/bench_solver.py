"""Compare the jitted and pure-numpy integration kernels.

Runs the same integrations under DDEBOUND_BACKEND=numba and =numpy and
reports wall times (best of --repeat, compile time excluded by a warm-up
call).  Usage:

    python3 benchmarks/bench_solver.py [--repeat 5] [--t-end 200]
"""

import argparse
import os
import time

import numpy as np

from ddebound.backend import backend_name
from ddebound.examples import load_example
from ddebound.solver import solve


def _cases(t_end):
    yield "one term, variable lag", load_example("1").problem, t_end, 0.002
    yield "two terms, mixed signs", load_example("3").problem, t_end, 0.002
    yield "constant lag, growing", load_example("2").problem, min(t_end, 40.0), 0.0005


def _time_one(p, t_end, step, repeat):
    solve(p, t_end, step=step)  # warm-up: jit compile + cache fill
    best = float("inf")
    for _ in range(repeat):
        tic = time.perf_counter()
        traj = solve(p, t_end, step=step)
        best = min(best, time.perf_counter() - tic)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--t-end", type=float, default=200.0)
    args = ap.parse_args()

    backends = ["numpy"]
    try:
        import numba  # noqa: F401

        backends.insert(0, "numba")
    except ImportError:
        print("numba not importable; timing the numpy fallback only")

    rows = []
    for label, p, t_end, step in _cases(args.t_end):
        times = {}
        trajs = {}
        for name in backends:
            os.environ["DDEBOUND_BACKEND"] = name
            assert backend_name() == name
            times[name], trajs[name] = _time_one(p, t_end, step, args.repeat)
        n = len(trajs[backends[0]].nodes)
        rows.append((label, n, times, trajs))

    print(f"{'case':<28} {'steps':>8} " + "".join(f"{b:>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for label, n, times, trajs in rows:
        line = f"{label:<28} {n:>8} "
        line += "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            line += f" {times['numpy'] / times['numba']:>10.1f}x"
        print(line)
        if len(backends) == 2:
            diff = float(
                np.max(np.abs(trajs["numba"].values - trajs["numpy"].values))
            )
            if diff > 1e-12:
                print(f"{'':<28} backends disagree by {diff:.2e}")


if __name__ == "__main__":
    main()
