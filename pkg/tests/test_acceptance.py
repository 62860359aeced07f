"""Acceptance criteria, each run at its stated tolerance.

Every test prints a single ``criterion N: PASS|FAIL`` line (also repeated
in the terminal summary) and then asserts the same condition.
"""

import dataclasses
import math
import time
from pathlib import Path

import numpy as np

from klci import EmpiricalDist, ExpFamilyModel, HeavyFamilySpec, Side, klinf_bounded, klinf_bounded_upper, klinf_heavy
from klci.bounds import RegimeSpec, limiting_width_param
from klci.cli import build_experiments, parse_config
from klci.harness import (
    BernoulliGen,
    ExperimentConfig,
    ExponentialCost,
    GaussianGen,
    MethodSpec,
    UniformCost,
    lower_bound_curve,
    run_experiment,
)
from klci.policies import ci_pi1

from oracles import heavy_primal

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
BERN = ExpFamilyModel.bernoulli()
GAUSS = ExpFamilyModel.gaussian(1.0)


def _load(name):
    return build_experiments(parse_config((CONFIGS / name).read_text()), None)


def _run_all(experiments):
    rows = []
    for exp in experiments:
        rows.extend(run_experiment(exp))
    return rows


def test_criterion_1_table1(report):
    t0 = time.perf_counter()
    rows = _run_all(_load("table1.cfg"))
    elapsed = time.perf_counter() - t0
    got = {(r.method, r.dist, int(r.n_or_C)): r.avg_width for r in rows}
    p6, p9 = BernoulliGen(0.6).label, BernoulliGen(0.9).label
    targets = {
        ("pi1", p6, 2000): 0.0712, ("pi1", p6, 3000): 0.0582, ("pi1", p9, 2000): 0.0436, ("pi1", p9, 3000): 0.0356,
        ("mpeb", p6, 2000): 0.0898, ("mpeb", p6, 3000): 0.0712, ("mpeb", p9, 2000): 0.0606, ("mpeb", p9, 3000): 0.0473,
    }
    misses = [f"{k}={got[k]:.5f} vs {v}" for k, v in targets.items() if abs(got[k] - v) > 0.0005]
    hoeff = [round(got[("hoeffding", p6, n)], 4) for n in (2000, 3000)]
    if hoeff != [0.0728, 0.0594]:
        misses.append(f"hoeffding {hoeff}")
    if not all(r.reps == 1000 for r in rows):
        misses.append("replications != 1000")
    if elapsed >= 60:
        misses.append(f"runtime {elapsed:.1f}s")
    pi1 = ", ".join(f"{got[('pi1', d, n)]:.4f}" for d in (p6, p9) for n in (2000, 3000))
    ok = report(1, not misses, f"pi1 widths [{pi1}], hoeffding {hoeff}, {elapsed:.1f}s" + (f"; misses: {misses}" if misses else ""))
    assert ok, misses


def test_criterion_2_figure1(report):
    t0 = time.perf_counter()
    ks = np.linspace(0.5, 50.0, 100)
    pts = lower_bound_curve(GAUSS, ks, mu=0.0)
    ratios = [p.width / p.comparator for p in pts]
    elapsed = time.perf_counter() - t0
    ok = (
        len(pts) == 100
        and all(f"{r:.6f}" == "2.000000" for r in ratios)
        and all(abs(p.width - 2 * math.sqrt(2 / p.k)) <= 1e-14 * p.width for p in pts)
        and elapsed < 1.0
    )
    report(2, ok, f"ratio range [{min(ratios):.15f}, {max(ratios):.15f}] over 100 k values, {1000 * elapsed:.1f} ms")
    assert ok


def test_criterion_3_table2(report):
    experiments = _load("table2.cfg")
    targets = {500: 0.492, 1000: 0.355, 2000: 0.255, 3000: 0.199}
    lines, ok = [], True
    for reps, tol in ((200, 0.03), (1000, 0.02)):
        t0 = time.perf_counter()
        rows = _run_all([dataclasses.replace(e, replications=reps) for e in experiments])
        elapsed = time.perf_counter() - t0
        widths = {int(r.n_or_C): r.avg_width for r in rows}
        good = all(abs(widths[c] - v) <= tol for c, v in targets.items())
        if reps == 1000:
            good = good and elapsed < 1800
        ok = ok and good
        got = ", ".join(f"C={c}: {widths[c]:.4f}" for c in targets)
        lines.append(f"{reps} reps [{got}] tol {tol} {'ok' if good else 'off'} ({elapsed:.0f}s)")
    report(3, ok, "; ".join(lines) + "; targets 0.492/0.355/0.255/0.199")
    assert ok


def _coverage_methods():
    return (
        MethodSpec("pi1", model=BERN),
        MethodSpec("pi1hat", model=BERN),
        MethodSpec("pi1b"),
        MethodSpec("pi1h", heavy=HeavyFamilySpec(1.0, 1.0)),
        MethodSpec("hoeffding"),
        MethodSpec("bernstein", sigma=math.sqrt(0.24)),
        MethodSpec("mpeb"),
        MethodSpec("pi1", model=BERN, side="lower"),
        MethodSpec("pi1", model=BERN, side="upper"),
    )


def test_criterion_4_coverage(report):
    t0 = time.perf_counter()
    reps = 20000
    worst, bad = {}, []
    for n, delta in ((200, 0.05), (2000, 0.01)):
        cfg = ExperimentConfig(BernoulliGen(0.6), _coverage_methods(), delta, reps, seed=4242, n=n)
        for row in run_experiment(cfg):
            used = reps - row.excluded
            miss = 1.0 - row.coverage
            slack = 3 * math.sqrt(delta * (1 - delta) / used)
            worst[(row.method, n)] = miss
            if not (miss <= delta + slack) or row.excluded > 0:
                bad.append(f"{row.method} n={n}: miss {miss:.4f}, excluded {row.excluded}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 300:
        bad.append(f"runtime {elapsed:.0f}s")
    top = max(worst.items(), key=lambda kv: kv[1])
    detail = f"{len(worst)} method/size pairs, largest miss {top[1]:.4f} ({top[0][0]}, n={top[0][1]}), {elapsed:.0f}s"
    ok = report(4, not bad, detail + (f"; failing: {bad}" if bad else ""))
    assert ok, bad


def test_criterion_5_rate_identity(report):
    worst = 0.0
    for n in (10, 100, 1000, 10**5):
        for delta in (0.1, 0.05, 1e-3, 1e-6, 1e-8):
            ci = ci_pi1(GAUSS, np.zeros(n), delta)
            lhs = ci.width**2 * n / math.log(1 / delta)
            rhs = 8 * math.log(2 / delta) / math.log(1 / delta)
            worst = max(worst, abs(lhs - rhs) / rhs)
    ci = ci_pi1(GAUSS, np.zeros(1000), 1e-8)
    at_small = ci.width**2 * 1000 / math.log(1e8)
    ok = worst <= 1e-12 and abs(at_small - 8) <= 0.04 * 8
    report(5, ok, f"max relative identity error {worst:.2e}; value at delta=1e-8 is {at_small:.4f} ({100 * (at_small / 8 - 1):.2f}% above 8)")
    assert ok


def test_criterion_6_oracles(report):
    rng = np.random.default_rng(606)
    # two-point reduction
    worst_two = 0.0
    for _ in range(200):
        p, x = rng.uniform(0.001, 0.999, 2)
        nu = EmpiricalDist([0.0, 1.0], [1 - p, p])
        worst_two = max(worst_two, abs(klinf_bounded(nu, x) - BERN.divergence(nu.mean, x)))
    # heavy dual against the grid primal
    worst_heavy = 0.0
    for _ in range(20):
        eps = float(rng.choice([0.5, 1.0, 2.0]))
        spec = HeavyFamilySpec(eps, 4.0)
        k = int(rng.integers(1, 5))
        vals = rng.uniform(-0.8 * spec.m_half, 0.8 * spec.m_half, k)
        w = rng.dirichlet(np.ones(k))
        nu = EmpiricalDist(vals, w)
        side = Side.UPPER if rng.random() < 0.5 else Side.LOWER
        edge = spec.m_half if side is Side.UPPER else -spec.m_half
        x = nu.mean + rng.uniform(0.1, 0.9) * (edge - nu.mean)
        dual = klinf_heavy(nu, x, spec, side).value
        primal = heavy_primal(nu.values, nu.weights, x, eps, 4.0, side.value)
        worst_heavy = max(worst_heavy, abs(dual - primal))
    # sandwich on random bounded instances
    sandwich_bad = 0
    for _ in range(500):
        k = int(rng.integers(1, 8))
        nu = EmpiricalDist(rng.uniform(0, 0.999, k), rng.dirichlet(np.ones(k)))
        x = nu.mean + rng.uniform(0.001, 0.999) * (1 - nu.mean)
        if not klinf_bounded_upper(nu, x).value <= math.log((1 - nu.mean) / (1 - x)) + 1e-12:
            sandwich_bad += 1
    ok = worst_two <= 1e-8 and worst_heavy <= 1e-3 and sandwich_bad == 0
    report(6, ok, f"two-point max error {worst_two:.1e}; heavy vs primal max error {worst_heavy:.1e}; sandwich violations {sandwich_bad}/500")
    assert ok


def test_criterion_7_limiting_width(report):
    delta = 1e-8
    errs = []
    for k in (1.0, 5.0, 20.0):
        n = round(k * math.log(1 / delta))
        ci = ci_pi1(BERN, np.full(n, 0.6), delta)
        lw = limiting_width_param(BERN, 0.6, RegimeSpec(k))
        errs.append(abs(ci.width / lw.width - 1))
    ok = max(errs) <= 0.02
    report(7, ok, "relative gaps " + ", ".join(f"k={k:g}: {100 * e:.2f}%" for k, e in zip((1, 5, 20), errs)))
    assert ok


def test_criterion_8_cost_invariance(report):
    widths = {}
    for name, cost in (("uniform", UniformCost(0.0, 2.0)), ("exponential", ExponentialCost(1.0))):
        cfg = ExperimentConfig(
            GaussianGen(0.0, 1.0), (MethodSpec("pi1hat", model=GAUSS),), 0.05, 1000, seed=808, budget=3000.0, cost=cost
        )
        (row,) = run_experiment(cfg)
        widths[name] = row.avg_width
    rel = abs(widths["uniform"] / widths["exponential"] - 1)
    ok = rel <= 0.02
    report(8, ok, f"uniform {widths['uniform']:.5f}, exponential {widths['exponential']:.5f}, gap {100 * rel:.3f}%")
    assert ok
