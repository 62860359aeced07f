"""Compare the compiled and pure-Python KL_inf kernels.

Times the inner log-sum maximiser, the heavy-tailed dual solver, and a full
heavy-tailed interval (which calls the dual solver a few dozen times inside
the root finder).  Each backend is checked to return the same values before
it is timed.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 2000]
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from klci import HeavyFamilySpec, klinf
from klci import _kernels_py
from klci.policies import ci_pi1_h

try:
    from klci import _kernels as _compiled
except ImportError:
    _compiled = None


def _best(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def heavy_ci(x, spec):
    ci = ci_pi1_h(x, 0.05, spec)
    return ci.lower, ci.upper


def _cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 3.0, 64)
    w = rng.dirichlet(np.ones(64))
    x = rng.pareto(3.0, n) + 1.0
    vals, counts = np.unique(x, return_counts=True)
    weights = counts / counts.sum()
    return c, w, vals, weights, x


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=2000, help="sample size for the heavy-tailed cases")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {"python": _kernels_py}
    if _compiled is None:
        print("compiled kernels not built; timing the Python backend only")
    else:
        backends["cython"] = _compiled

    c, w, vals, weights, x = _cases(args.n, args.seed)
    spec = HeavyFamilySpec(1.0, 4.0)
    target = float(weights @ vals) + 0.1

    results = {}
    for name, mod in backends.items():
        klinf.kernels = mod
        ci = heavy_ci(x, spec)
        results[name] = (
            mod.logsum_max(c, w)[0],
            mod.heavy_upper(vals, weights, target, 1.0, 4.0)[0],
            ci,
        )
    ref = results["python"]
    for name, got in results.items():
        assert math.isclose(got[0], ref[0], rel_tol=1e-12), name
        assert math.isclose(got[1], ref[1], rel_tol=1e-9), name
        assert math.isclose(got[2][0], ref[2][0], rel_tol=1e-7), name
        assert math.isclose(got[2][1], ref[2][1], rel_tol=1e-7), name

    rows = []
    for name, mod in backends.items():
        klinf.kernels = mod
        rows.append(
            (
                name,
                _best(lambda: mod.logsum_max(c, w), args.repeat),
                _best(lambda: mod.heavy_upper(vals, weights, target, 1.0, 4.0), args.repeat),
                _best(lambda: heavy_ci(x, spec), args.repeat),
            )
        )

    print(f"{len(vals)} atoms, heavy spec eps=1 gamma=4, best of {args.repeat}")
    print(f"{'backend':<8} {'logsum_max':>12} {'heavy_upper':>12} {'pi1h CI':>12}")
    for name, a, b, d in rows:
        print(f"{name:<8} {a * 1e6:>10.1f}us {b * 1e6:>10.1f}us {d * 1e3:>10.2f}ms")
    if len(rows) == 2:
        py, cy = rows
        print(f"{'speedup':<8} {py[1] / cy[1]:>11.1f}x {py[2] / cy[2]:>11.1f}x {py[3] / cy[3]:>11.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
