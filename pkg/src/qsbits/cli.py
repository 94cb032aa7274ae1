"""Command-line entry point: ``qsbits {exact,asympt,poisson,simulate,compare}``.

Every table is in long form with a ``source`` column naming where each
number came from (exact, residue, asymptotic or simulated).  Exit status is 0
on success, 1 when a computation fails, 2 on bad usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import asymptotics as asy
from . import exact_means as em
from . import poisson_model as pm
from .densities import DensitySpec, load_density
from .errors import DepthCapExceeded, ExperimentFailed, PoleArgument, QuadratureFailure
from .sim_harness import ALGORITHMS, STATISTICS, ExperimentConfig, run_experiment

EXACT_FORMULAS = {
    "key_mean": em.exact_key_mean,
    "key_mean_altsum": em.exact_key_mean_altsum,
    "bit_mean": em.exact_bit_mean,
    "bitsquick_mean": em.exact_bitsquick_mean,
    "savings_mean": em.exact_savings_mean,
    "q_term": em.q_term,
}
ASYMPT_FORMULAS = ("bit_mean", "key_mean", "bitsquick_mean", "rice_bit_mean", "rice_key_mean",
                   "pi", "pi_tilde")
POISSON_STATS = ("keys", "bits", "mu_f")
# simulated mean vs reference, in standard errors
SIM_TOLERANCE_SE = 4.0
COMPUTATION_ERRORS = (QuadratureFailure, DepthCapExceeded, ExperimentFailed, PoleArgument, ArithmeticError)


class UsageError(Exception):
    pass


# --- argument helpers ----------------------------------------------------------------

def parse_grid(text: str, integer: bool) -> list:
    """``a:b:step`` (inclusive of b) or a comma list; must be finite and strictly increasing."""
    conv = int if integer else float
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            a, b, step = (conv(p) for p in parts)
            if step <= 0:
                raise ValueError
            out, x = [], a
            while x <= b:
                out.append(x)
                x = x + step
        else:
            out = [conv(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"--grid: cannot parse {text!r}") from None
    if not out:
        raise UsageError("--grid: empty grid")
    if any(not math.isfinite(x) for x in out):
        raise UsageError("--grid: values must be finite")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise UsageError("--grid: values must be strictly increasing")
    return out


def _points(args, integer: bool, allow_lambda: bool = False):
    """The n (or lambda) values requested through --n, --lambda or --grid."""
    given = [f for f in ("n", "lam", "grid") if getattr(args, f, None) is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --n, --lambda, --grid")
    if args.grid is not None:
        pts = parse_grid(args.grid, integer)
    elif args.n is not None:
        pts = [args.n]
    else:
        if not allow_lambda:
            raise UsageError("--lambda is not valid for this subcommand")
        pts = [args.lam]
    for p in pts:
        if integer and p < 0:
            raise UsageError(f"--n: must be nonnegative, got {p}")
        if not integer and p <= 0:
            raise UsageError(f"--lambda: must be positive, got {p}")
    return pts


def _density(args) -> DensitySpec | None:
    if getattr(args, "density", None) is None:
        return None
    try:
        return load_density(args.density)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"--density: {exc}") from None


def _fmt(x, digits: int) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, int):
        return str(x)
    return f"{x:.{digits}g}"


def render(columns, rows, fmt: str, digits: int = 12) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in rows], indent=1, default=str) + "\n"
    cells = [[_fmt(v, digits) for v in r] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows(cells)
        return buf.getvalue()
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


# --- subcommands -----------------------------------------------------------------

def cmd_exact(args):
    ns = _points(args, integer=True)
    formula = args.formula or "bit_mean"
    fn = EXACT_FORMULAS[formula]
    rows = []
    for n in ns:
        cap = em.KEY_MAX_N if formula == "key_mean" else em.MAX_N
        if n > cap:
            raise UsageError(f"--n: {formula} is limited to n <= {cap}")
        q = fn(n)
        rows.append([n, formula, em.to_decimal(q, args.digits), "exact", f"{q.numerator}/{q.denominator}"])
    return ["n", "formula", "decimal", "source", "fraction"], rows


def _asympt_value(formula: str, n: int, K):
    if formula == "bit_mean":
        return asy.bit_mean_asymptotic(n, K), "asymptotic"
    if formula == "key_mean":
        return asy.key_mean_asymptotic(n), "asymptotic"
    if formula == "bitsquick_mean":
        return asy.bitsquick_mean_asymptotic(n, K), "asymptotic"
    if formula == "rice_bit_mean":
        return asy.rice_exact_bit_mean(n, None if K is None else K), "residue"
    if formula == "rice_key_mean":
        return asy.rice_exact_key_mean(n), "residue"
    if formula == "pi":
        return asy.periodic_pi(n, K), "asymptotic"
    return asy.periodic_pi_tilde(n, K), "asymptotic"


def cmd_asympt(args):
    ns = _points(args, integer=True)
    formula = args.formula or "bit_mean"
    if formula not in ASYMPT_FORMULAS:
        raise UsageError(f"--formula: choose from {', '.join(ASYMPT_FORMULAS)}")
    rows = []
    for n in ns:
        if n < 2:
            raise UsageError("--n: asymptotic formulas need n >= 2")
        K = args.truncation_k
        if K is None and formula != "rice_bit_mean":
            K = asy.CONSTANTS.series_truncation
        value, source = _asympt_value(formula, n, K)
        rows.append([n, formula, value, source])
    return ["n", "formula", "value", "source"], rows


def cmd_poisson(args):
    lams = _points(args, integer=False, allow_lambda=True)
    stat = args.stat or "bits"
    if stat not in POISSON_STATS:
        raise UsageError(f"--stat: choose from {', '.join(POISSON_STATS)}")
    spec = _density(args)
    if stat == "mu_f" and spec is None:
        raise UsageError("--density is required for mu_f")
    rows = []
    for lam in lams:
        if stat == "keys":
            v, err = pm.poisson_key_mean_exact(lam, return_error=True)
            rows.append([lam, stat, v, err, _oracle_gap(lam, v, pm.poisson_key_mean_series), "exact"])
            if lam >= 2:
                rows.append([lam, stat, pm.poisson_key_mean_asymptotic(lam, args.terms), None,
                             None, "asymptotic"])
        elif stat == "bits":
            v, err = pm.poisson_bit_mean_exact(lam, return_error=True)
            rows.append([lam, stat, v, err, _oracle_gap(lam, v, pm.poisson_bit_mean_series), "exact"])
            if lam >= 2:
                rows.append([lam, stat, pm.poisson_bit_mean_asymptotic(lam, refined=args.refined),
                             None, None, "asymptotic"])
        else:
            v, tail = pm.mu_f(lam, spec, args.depth)
            gap = v - pm.poisson_bit_mean_exact(lam) if spec.is_uniform else None
            rows.append([lam, stat, v, tail, gap, "exact"])
    return ["lambda", "stat", "value", "error_bound", "oracle_gap", "source"], rows


def _oracle_gap(lam, value, series):
    """Difference from the extended-precision series, where that series is affordable."""
    return value - float(series(lam)) if lam <= 50 else None


def _algorithms(args) -> tuple[str, ...]:
    algos = tuple(a for a in (args.algorithms or "").split(",") if a)
    if not algos:
        raise UsageError("--algorithms: need at least one algorithm")
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"--algorithms: unknown {', '.join(bad)}")
    return algos


def _simulate(args, point, model, spec):
    cfg = ExperimentConfig(model=model, n=point if model == "fixed_n" else 0,
                           lam=float(point) if model == "poisson" else 0.0, density=spec,
                           algorithms=_algorithms(args), trials=args.trials, seed=args.seed,
                           depth_cap=args.depth_cap)
    return run_experiment(cfg)


def cmd_simulate(args):
    model = "poisson" if args.lam is not None else "fixed_n"
    pts = _points(args, integer=model == "fixed_n", allow_lambda=True)
    spec = _density(args)
    wanted = tuple(s for s in (args.stat or "").split(",") if s) or STATISTICS
    if any(s not in STATISTICS for s in wanted):
        raise UsageError(f"--stat: choose from {', '.join(STATISTICS)}")
    rows = []
    for p in pts:
        res = _simulate(args, p, model, spec)
        for s, st in res.stats.items():
            if s in wanted:
                rows.append([p, s, st.trials, st.mean, st.variance, st.se, st.min, st.max, "simulated"])
    col = "n" if model == "fixed_n" else "lambda"
    return [col, "statistic", "trials", "mean", "var", "se", "min", "max", "source"], rows


def _references_fixed(n: int, K):
    """Reference values per statistic: (exact or residue, asymptotic)."""
    refs = {}
    if n <= em.KEY_MAX_N:
        refs["K"] = [(float(em.exact_key_mean(n)), "exact")]
    else:
        refs["K"] = [(asy.rice_exact_key_mean(n), "residue")]
    if n <= em.MAX_N:
        refs["B"] = [(float(em.exact_bit_mean(n)), "exact")]
        refs["Q"] = [(float(em.exact_bitsquick_mean(n)), "exact")]
    else:
        refs["B"] = [(asy.rice_exact_bit_mean(n), "residue")]
        refs["Q"] = []
    if n >= 2:
        refs["K"].append((asy.key_mean_asymptotic(n), "asymptotic"))
        refs["B"].append((asy.bit_mean_asymptotic(n, K), "asymptotic"))
        refs["Q"].append((asy.bitsquick_mean_asymptotic(n, K), "asymptotic"))
    return refs


def _references_poisson(lam: float, refined: bool):
    refs = {"K": [(pm.poisson_key_mean_exact(lam), "exact")],
            "B": [(pm.poisson_bit_mean_exact(lam), "exact")], "Q": []}
    if lam >= 2:
        refs["K"].append((pm.poisson_key_mean_asymptotic(lam), "asymptotic"))
        refs["B"].append((pm.poisson_bit_mean_asymptotic(lam, refined=refined), "asymptotic"))
    return refs


def cmd_compare(args):
    model = "poisson" if args.lam is not None else "fixed_n"
    pts = _points(args, integer=model == "fixed_n", allow_lambda=True)
    _algorithms(args)
    K = args.truncation_k or asy.CONSTANTS.series_truncation
    rows = []
    for p in pts:
        refs = _references_fixed(p, K) if model == "fixed_n" else _references_poisson(p, args.refined)
        sim = _simulate(args, p, model, None) if args.trials > 0 else None
        for stat in ("K", "B", "Q"):
            best = refs[stat][0][0] if refs[stat] else None
            for value, source in refs[stat]:
                gap = None if best is None or source == refs[stat][0][1] else value - best
                rows.append([p, stat, source, value, None, gap, None, ""])
            if sim is not None and stat in sim.stats:
                st = sim.stats[stat]
                if best is None:
                    rows.append([p, stat, "simulated", st.mean, st.se, None, None, ""])
                else:
                    z = (st.mean - best) / st.se if st.se > 0 else (0.0 if st.mean == best else math.inf)
                    flag = "" if abs(z) <= SIM_TOLERANCE_SE else "OUT_OF_TOLERANCE"
                    rows.append([p, stat, "simulated", st.mean, st.se, st.mean - best, z, flag])
    col = "n" if model == "fixed_n" else "lambda"
    return [col, "statistic", "source", "value", "se", "discrepancy", "z", "flag"], rows


COMMANDS = {"exact": cmd_exact, "asympt": cmd_asympt, "poisson": cmd_poisson,
            "simulate": cmd_simulate, "compare": cmd_compare}


def _digits(text: str) -> int:
    try:
        d = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer") from None
    if not 6 <= d <= 200:
        raise argparse.ArgumentTypeError("must lie in [6, 200]")
    return d


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("must be an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsbits", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--grid", help="a:b:step (inclusive) or a comma list")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--digits", type=_digits, default=20, help="decimal digits, 6..200")

    p = sub.add_parser("exact", parents=[common], help="exact rational means")
    p.add_argument("--formula", choices=sorted(EXACT_FORMULAS))

    p = sub.add_parser("asympt", parents=[common], help="residue and asymptotic formulas")
    p.add_argument("--formula", choices=ASYMPT_FORMULAS)
    p.add_argument("--truncation-k", type=_positive_int)

    p = sub.add_parser("poisson", parents=[common], help="Poissonized means")
    p.add_argument("--stat", choices=POISSON_STATS)
    p.add_argument("--density")
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--refined", action="store_true")
    p.add_argument("--terms", type=int, default=0, help="refinement terms M for keys")

    for name, helptext in (("simulate", "Monte Carlo estimates"),
                           ("compare", "exact, asymptotic and simulated side by side")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--algorithms", default="quicksort,bitsquick")
        p.add_argument("--depth-cap", type=_positive_int, default=4096)
        p.add_argument("--truncation-k", type=_positive_int)
        p.add_argument("--refined", action="store_true")
        if name == "simulate":
            p.add_argument("--stat", help="comma list of " + ",".join(STATISTICS))
            p.add_argument("--density")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "trials", 1) < 0 or (args.command == "simulate" and args.trials < 1):
        print(f"qsbits {args.command}: error: --trials must be positive", file=sys.stderr)
        return 2
    if args.command == "poisson" and not 0 <= args.depth <= 24:
        print("qsbits poisson: error: --depth must lie in [0, 24]", file=sys.stderr)
        return 2
    try:
        columns, rows = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qsbits {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except COMPUTATION_ERRORS as exc:
        print(f"qsbits {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"qsbits {args.command}: error: {exc}", file=sys.stderr)
        return 2
    text = render(columns, rows, args.format, digits=min(args.digits, 17))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
