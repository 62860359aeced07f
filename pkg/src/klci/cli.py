"""Command line interface: ``klci ci``, ``klci bench`` and ``klci bounds``.

Exit codes: 0 on success, 2 on flag, domain or configuration errors, 3 when
a data file cannot be parsed.  Errors are reported as a single line on
stderr and nothing is written to ``--out`` on failure.
"""

from __future__ import annotations

import argparse
import io
import itertools
import math
import os
import sys

import numpy as np

from .bounds import BOUNDED
from .errors import DomainError
from .exp_family import ExpFamilyModel, Family
from .harness import (
    BernoulliGen,
    ExperimentConfig,
    ExponentialCost,
    GammaGen,
    GaussianGen,
    MethodSpec,
    ParetoGen,
    PoissonGen,
    UniformCost,
    UnitCost,
    lower_bound_curve,
    run_experiment,
)
from .klinf import EmpiricalDist, HeavyFamilySpec
from .policies import METHODS, SidedRequest

BENCH_HEADER = "method,dist,n_or_C,delta,reps,avg_width,width_stderr,coverage,avg_samples,excluded,wall_ms"
BOUNDS_HEADER = "k,mu_star_L,mu_star_R,our_width,comparator_width"
CI_HEADER = "method,lower,upper,point_estimate,width,n,beta_used"

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    """Bad flags, domain violations or configuration errors (exit 2)."""


class DataError(Exception):
    """Unparseable data file (exit 3)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(v) -> str:
    """Six significant digits, or empty for a missing value."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    tmp = f"{out}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except OSError as exc:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise UsageError(f"cannot write {out}: {exc.strerror}") from None


def read_data(path: str) -> np.ndarray:
    """One numeric value per line, with an optional header line ``x``."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from None
    while lines and not lines[-1].strip():
        lines.pop()
    start = 1 if lines and lines[0].strip().lower() == "x" else 0
    values = []
    for i, line in enumerate(lines[start:], start=start + 1):
        try:
            v = float(line.strip())
        except ValueError:
            raise DataError(f"{path}:{i}: not a number: {line.strip()!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}:{i}: non-finite value {line.strip()!r}")
        values.append(v)
    if not values:
        raise DataError(f"{path}: no data values")
    return np.asarray(values)


def _model(kind: str | None, sigma: float | None, shape: float | None) -> ExpFamilyModel:
    if kind is None:
        raise UsageError("--model is required for this method")
    kind = kind.lower()
    if kind == "gaussian":
        return ExpFamilyModel.gaussian(1.0 if sigma is None else sigma)
    if kind == "gamma":
        if shape is None:
            raise UsageError("--shape is required for the gamma model")
        return ExpFamilyModel.gamma(shape)
    return ExpFamilyModel(Family(kind))


def _heavy(eps, gamma) -> HeavyFamilySpec:
    if eps is None or gamma is None:
        raise UsageError("pi1h needs --eps and --gamma-bound")
    return HeavyFamilySpec(eps, gamma)


# --- ci ----------------------------------------------------------------------


def cmd_ci(args) -> int:
    data = read_data(args.data)
    side = SidedRequest(args.one_sided) if args.one_sided else SidedRequest.TWO_SIDED
    model = sigma = heavy = None
    if args.method in ("pi1", "pi1hat"):
        model = _model(args.model, args.sigma, args.shape)
    elif args.method == "bernstein":
        if args.sigma is None:
            raise UsageError("bernstein needs the known standard deviation --sigma")
        sigma = args.sigma
    elif args.method == "pi1h":
        heavy = _heavy(args.eps, args.gamma_bound)
    method = MethodSpec(args.method, model=model, sigma=sigma, heavy=heavy, side=side)
    nu = EmpiricalDist.from_samples(data)
    ci = method.apply(data, nu, args.delta)
    row = [method.label, ci.lower, ci.upper, ci.point_estimate, ci.width, ci.n_used, ci.beta_used]
    _write(CI_HEADER + "\n" + ",".join(fmt(v) for v in row) + "\n", args.out)
    return 0


# --- bench -------------------------------------------------------------------

_GEN_PARAMS = {
    "bernoulli": ("p",),
    "gaussian": ("mu", "sigma"),
    "poisson": ("mu",),
    "gamma": ("shape", "mean"),
    "pareto": ("x_m", "alpha"),
}
_GEN_DEFAULTS = {"sigma": [1.0], "x_m": [1.0]}

CONFIG_KEYS = frozenset(
    {
        "generator",
        "methods",
        "delta",
        "mode",
        "n",
        "budget.C",
        "cost.kind",
        "cost.a",
        "cost.b",
        "cost.mean",
        "replications",
        "seed",
        "model",
        "model.sigma",
        "model.shape",
        "bernstein.sigma",
        "heavy.eps",
        "heavy.gamma",
        "one_sided",
    }
    | {f"generator.{p}" for ps in _GEN_PARAMS.values() for p in ps}
)


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {i}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"config line {i}: unknown key '{key}'")
        if key in out:
            raise UsageError(f"config line {i}: duplicate key '{key}'")
        if not value:
            raise UsageError(f"config key '{key}': empty value")
        out[key] = value
    return out


def _numbers(kv, key, cast=float) -> list:
    try:
        vals = [cast(s.strip()) for s in kv[key].split(",")]
    except ValueError:
        raise UsageError(f"config key '{key}': not a number list: {kv[key]!r}") from None
    return vals


def _number(kv, key, cast=float, default=None):
    if key not in kv:
        if default is None:
            raise UsageError(f"config key '{key}' is required")
        return default
    vals = _numbers(kv, key, cast)
    if len(vals) != 1:
        raise UsageError(f"config key '{key}': expected a single value")
    return vals[0]


def _int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(s)
    return int(v)


def _make_generator(kind, params):
    if kind == "bernoulli":
        return BernoulliGen(params["p"])
    if kind == "gaussian":
        return GaussianGen(params["mu"], params["sigma"])
    if kind == "poisson":
        return PoissonGen(params["mu"])
    if kind == "gamma":
        return GammaGen(params["shape"], params["mean"])
    return ParetoGen(params["x_m"], params["alpha"])


def _default_model(gen, kv) -> ExpFamilyModel:
    kind = kv.get("model")
    if kind is None:
        if isinstance(gen, BernoulliGen):
            return ExpFamilyModel.bernoulli()
        if isinstance(gen, GaussianGen):
            return ExpFamilyModel.gaussian(_number(kv, "model.sigma", default=gen.sigma))
        if isinstance(gen, PoissonGen):
            return ExpFamilyModel.poisson()
        if isinstance(gen, GammaGen):
            return ExpFamilyModel.gamma(_number(kv, "model.shape", default=gen.shape))
        raise UsageError("config key 'model' is required for pi1/pi1hat with this generator")
    if kind not in [f.value for f in Family]:
        raise UsageError(f"config key 'model': unknown model {kind!r}")
    sigma = _number(kv, "model.sigma", default=1.0)
    shape = _number(kv, "model.shape", default=1.0)
    return ExpFamilyModel(Family(kind), sigma=sigma, shape=shape)


def build_experiments(kv: dict[str, str], seed: int | None) -> list[ExperimentConfig]:
    """Expand a parsed configuration into the grid of experiments it describes."""
    kind = kv.get("generator")
    if kind is None:
        raise UsageError("config key 'generator' is required")
    if kind not in _GEN_PARAMS:
        raise UsageError(f"config key 'generator': unknown generator {kind!r}")
    for key in kv:
        if key.startswith("generator.") and key.split(".", 1)[1] not in _GEN_PARAMS[kind]:
            raise UsageError(f"config key '{key}' does not apply to generator {kind}")
    grids = {}
    for p in _GEN_PARAMS[kind]:
        key = f"generator.{p}"
        if key in kv:
            grids[p] = _numbers(kv, key)
        elif p in _GEN_DEFAULTS:
            grids[p] = _GEN_DEFAULTS[p]
        else:
            raise UsageError(f"config key '{key}' is required")
    if "methods" not in kv:
        raise UsageError("config key 'methods' is required")
    tags = [t.strip() for t in kv["methods"].split(",") if t.strip()]
    for t in tags:
        if t not in METHODS:
            raise UsageError(f"config key 'methods': unknown method {t!r}")
    deltas = _numbers(kv, "delta") if "delta" in kv else None
    if deltas is None:
        raise UsageError("config key 'delta' is required")
    mode = kv.get("mode", "fixed")
    if mode not in ("fixed", "budget"):
        raise UsageError(f"config key 'mode': expected fixed or budget, got {mode!r}")
    if mode == "fixed":
        if "n" not in kv:
            raise UsageError("config key 'n' is required in fixed mode")
        for key in ("budget.C", "cost.kind", "cost.a", "cost.b", "cost.mean"):
            if key in kv:
                raise UsageError(f"config key '{key}' only applies in budget mode")
        sizes = _numbers(kv, "n", _int)
        cost = UnitCost()
    else:
        if "budget.C" not in kv:
            raise UsageError("config key 'budget.C' is required in budget mode")
        if "n" in kv:
            raise UsageError("config key 'n' only applies in fixed mode")
        sizes = _numbers(kv, "budget.C")
        ck = kv.get("cost.kind", "unit")
        if ck == "unit":
            cost = UnitCost()
        elif ck == "uniform":
            cost = UniformCost(_number(kv, "cost.a"), _number(kv, "cost.b"))
        elif ck == "exponential":
            cost = ExponentialCost(_number(kv, "cost.mean"))
        else:
            raise UsageError(f"config key 'cost.kind': unknown cost model {ck!r}")
    reps = _number(kv, "replications", _int)
    if seed is None:
        seed = _number(kv, "seed", _int, default=0)
    side = kv.get("one_sided", "two")
    if side not in ("two", "lower", "upper"):
        raise UsageError(f"config key 'one_sided': expected lower or upper, got {side!r}")

    names = list(grids)
    experiments = []
    for combo in itertools.product(*(grids[p] for p in names)):
        try:
            gen = _make_generator(kind, dict(zip(names, combo)))
        except DomainError as exc:
            raise UsageError(f"config key 'generator': {exc}") from None
        methods = []
        for t in tags:
            model = sigma = heavy = None
            if t in ("pi1", "pi1hat"):
                model = _default_model(gen, kv)
            elif t == "bernstein":
                if "bernstein.sigma" in kv and kv["bernstein.sigma"] != "auto":
                    sigma = _number(kv, "bernstein.sigma")
                else:
                    sigma = gen.std
            elif t == "pi1h":
                heavy = HeavyFamilySpec(_number(kv, "heavy.eps"), _number(kv, "heavy.gamma"))
            methods.append(MethodSpec(t, model=model, sigma=sigma, heavy=heavy, side=side))
        for delta in deltas:
            for size in sizes:
                common = dict(
                    generator=gen,
                    methods=methods,
                    delta=delta,
                    replications=reps,
                    seed=seed,
                    cost=cost,
                )
                if mode == "fixed":
                    experiments.append(ExperimentConfig(n=size, **common))
                else:
                    experiments.append(ExperimentConfig(budget=size, **common))
    return experiments


def bench_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    buf.write(BENCH_HEADER + "\n")
    for r in rows:
        vals = [
            r.method,
            r.dist,
            r.n_or_C,
            r.delta,
            r.reps,
            r.avg_width,
            r.width_stderr,
            r.coverage,
            r.avg_samples,
            r.excluded,
            r.wall_ms if timing else None,
        ]
        buf.write(",".join(fmt(v) for v in vals) + "\n")
    return buf.getvalue()


def cmd_bench(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    experiments = build_experiments(parse_config(text), args.seed)
    rows = []
    for exp in experiments:
        rows.extend(run_experiment(exp))
    _write(bench_csv(rows, timing=not args.omit_timing), args.out)
    return 0


# --- bounds ------------------------------------------------------------------


def parse_k_grid(spec: str, scale: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"--k-grid expects lo:hi:steps, got {spec!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError:
        raise UsageError(f"--k-grid expects lo:hi:steps, got {spec!r}") from None
    if not (0 < lo <= hi < math.inf) or steps < 1:
        raise UsageError("--k-grid needs 0 < lo <= hi and steps >= 1")
    if steps == 1 or lo == hi:
        if lo != hi:
            raise UsageError("--k-grid with one step needs lo == hi")
        return [lo]
    if scale == "log":
        grid = np.geomspace(lo, hi, steps)
    else:
        grid = np.linspace(lo, hi, steps)
    return [float(k) for k in grid]


def cmd_bounds(args) -> int:
    ks = parse_k_grid(args.k_grid, args.k_scale)
    if (args.model is None) == (args.nu_file is None):
        raise UsageError("give exactly one of --model and --nu-file")
    if args.model is not None:
        if args.mu is None:
            raise UsageError("--mu is required with --model")
        model = _model(args.model, args.sigma, args.shape)
        pts = lower_bound_curve(model, ks, args.cbar, mu=args.mu)
    else:
        nu = EmpiricalDist.from_samples(read_data(args.nu_file))
        family = BOUNDED if args.family == "bounded" else _heavy(args.eps, args.gamma_bound)
        pts = lower_bound_curve(nu, ks, args.cbar, family=family)
    buf = io.StringIO()
    buf.write(BOUNDS_HEADER + "\n")
    for p in pts:
        buf.write(",".join(fmt(v) for v in (p.k, p.mu_star_L, p.mu_star_R, p.width, p.comparator)) + "\n")
    _write(buf.getvalue(), args.out)
    return 0


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klci", description="KL-divergence confidence intervals for means.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ci", help="confidence interval for one data file")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--data", required=True, help="one value per line, optional header 'x'")
    p.add_argument("--model", choices=[f.value for f in Family])
    p.add_argument("--sigma", type=float, help="Gaussian standard deviation, or the known std for bernstein")
    p.add_argument("--shape", type=float, help="Gamma shape")
    p.add_argument("--eps", type=float, help="moment exponent is 1 + eps (pi1h)")
    p.add_argument("--gamma-bound", type=float, help="bound on E|X|^(1+eps) (pi1h)")
    p.add_argument("--one-sided", choices=["lower", "upper"])
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("bench", help="Monte Carlo benchmark from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--omit-timing", action="store_true", help="leave wall_ms empty for byte-stable output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bounds", help="limiting-width lower bound over a k grid")
    p.add_argument("--model", choices=[f.value for f in Family])
    p.add_argument("--nu-file", help="sample standing in for a nonparametric distribution")
    p.add_argument("--family", choices=["bounded", "heavy"], default="bounded")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--shape", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--gamma-bound", type=float)
    p.add_argument("--k-grid", required=True, help="lo:hi:steps")
    p.add_argument("--k-scale", choices=["linear", "log"], default="linear")
    p.add_argument("--cbar", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except DataError as exc:
        print(f"klci: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, DomainError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"klci: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
