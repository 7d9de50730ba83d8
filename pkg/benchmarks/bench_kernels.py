"""Compiled core vs pure-Python fallback on the two hot kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Prints per-call times and the speedup for
  * one shooting integration (DOPRI5 with tangent flow and winding angle),
  * one method-of-lines advance over t in [0, 0.1] on m=257 points,
    for the semilinear and the log evolution forms.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from sturm_attractor import _pykernels

try:
    from sturm_attractor import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

CI2 = np.array([0.0, -2.0, 0.0, 2.0])  # Chafee-Infante F0 at lambda = 2


def shoot_case(mod):
    return lambda: mod.shoot_poly(CI2, 0.0, 0.8, 1e-9, 1e-10, 100.0, np.pi / 16)


def mol_case(mod, form):
    m = 257
    x = np.linspace(0.0, np.pi, m)
    u0 = 0.1 + 0.3 * np.cos(x)
    dx = x[1] - x[0]
    return lambda: mod.mol_advance_poly(u0, 0.0, 0.1, dx, CI2, 0.0, form, 0.4, np.inf)


def best_time(fn, repeat: int) -> float:
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.Timer(fn).repeat(repeat, n)) / n


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        raise SystemExit("compiled core not built; run `pip install -e . --no-build-isolation`")
    cases = [
        ("shoot_poly (a=0.8)", shoot_case),
        ("mol_advance_poly semilinear", lambda mod: mol_case(mod, 0)),
        ("mol_advance_poly log form", lambda mod: mol_case(mod, 1)),
    ]
    print(f"{'kernel':40s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, make in cases:
        tp = best_time(make(_pykernels), args.repeat)
        tc = best_time(make(compiled), args.repeat)
        steps = make(compiled)()[2] if name.startswith("mol") else None
        label = f"{name} ({steps} steps)" if steps else name
        print(f"{label:40s} {tp * 1e3:10.3f}ms {tc * 1e3:10.3f}ms {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
