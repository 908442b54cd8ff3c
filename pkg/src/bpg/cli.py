"""Command-line interface: ``bpg <subcommand> [options]``.

Every subcommand writes a table as CSV (header plus rows) or JSON
(``{"metadata": ..., "rows": [...]}``) to standard output or ``--output``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure,
5 numerical or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from importlib import metadata as _metadata
from pathlib import Path

import numpy as np

from .baselines import make_baseline
from .errors import BpgError, ConvergenceError, DataError, DomainError, QuadratureWarning
from .estimation import MODELS, FitConfig, fit_mle
from .evaluation import descriptive_stats, gof_report, load_dataset, read_values, ttt_coordinates
from .family import BetaPoissonG, PoissonG
from .montecarlo import SimulationPlan, run_simulation
from .properties import galton_moors, moment_summary, renyi_entropy

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive of ``stop`` up to rounding) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r}: expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"grid {text!r}: non-numeric field") from None
        if not step > 0 or stop < start:
            raise UsageError(f"grid {text!r}: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    return np.array(parse_list(text, float))


def parse_list(text: str, kind=float) -> list:
    out = []
    for pos, tok in enumerate(text.split(","), 1):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(kind(tok))
        except ValueError:
            raise UsageError(f"item {pos} of {text!r} is not a valid {kind.__name__}: {tok!r}") from None
    return out


def parse_assignments(text: str) -> dict[str, float]:
    """``key=value,key=value`` into a dict of floats."""
    out = {}
    for pos, item in enumerate(filter(None, (t.strip() for t in text.split(","))), 1):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"item {pos} of {text!r}: expected key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"item {pos} of {text!r}: value {val!r} is not a number") from None
    return out


def read_config(path: str) -> dict[str, str]:
    """Simple ``key = value`` file; ``#`` comments and blank lines ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config file {path!r}: {exc.strerror}") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def load_data(spec: str) -> np.ndarray:
    if spec.startswith("builtin:"):
        return load_dataset(spec.split(":", 1)[1]).values
    values, _ = read_values(spec)
    return values


def build_distribution(args, bp_only=False):
    if bp_only and args.family != "bp":
        raise UsageError(f"'{args.command}' supports --family bp only (use m = n = 1 for Poisson-G)")
    params = {"beta": args.beta}
    if args.baseline == "weibull":
        params["delta"] = args.delta
    baseline = make_baseline(args.baseline, **params)
    if args.family == "pg":
        return PoissonG(args.lam, baseline)
    return BetaPoissonG(args.m, args.n, args.lam, baseline)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _version() -> str:
    try:
        return _metadata.version("artifact")
    except _metadata.PackageNotFoundError:
        return "0+unknown"


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return _json_safe(value.item())
    return value


def render(rows: list[dict], fmt: str, meta: dict) -> str:
    if fmt == "json":
        body = {"metadata": meta, "rows": [{k: _json_safe(v) for k, v in r.items()} for r in rows]}
        return json.dumps(body, indent=2) + "\n"
    buf = io.StringIO()
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", restval="")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _fmt_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _fmt_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return v


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_eval(args) -> list[dict]:
    dist = build_distribution(args)
    grid = parse_grid(args.grid)
    fn = getattr(dist, args.what)
    key = "u" if args.what == "quantile" else "x"
    values = np.atleast_1d(fn(grid))
    return [{key: float(g), args.what: float(v)} for g, v in zip(grid, values)]


def _with_quadrature_notes(fn):
    # quadrature trouble is reported next to the affected cell instead of aborting
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        value = fn()
    notes = [str(w.message) for w in caught if issubclass(w.category, QuadratureWarning)]
    return value, "; ".join(notes)


def cmd_moments(args) -> list[dict]:
    dist = build_distribution(args, bp_only=True)
    s, note = _with_quadrature_notes(lambda: moment_summary(dist, method=args.method))
    return [{"m": dist.m, "n": dist.n, "lambda": dist.lam, **dist.baseline.params,
             "mean": s.mean, "variance": s.variance, "skewness": s.skewness, "kurtosis": s.kurtosis,
             "note": note}]


def cmd_entropy(args) -> list[dict]:
    dist = build_distribution(args, bp_only=True)
    rows = []
    for delta in parse_list(args.orders, float):
        try:
            value, note = _with_quadrature_notes(lambda: renyi_entropy(delta, dist))
            rows.append({"delta": delta, "renyi": value, "error": note})
        except BpgError as exc:
            rows.append({"delta": delta, "renyi": math.nan, "error": str(exc)})
    return rows


def cmd_shape(args) -> list[dict]:
    if args.family != "bp":
        raise UsageError("'shape' supports --family bp only")
    lams = parse_grid(args.lambda_grid) if args.lambda_grid else [args.lam]
    betas = parse_grid(args.beta_grid) if args.beta_grid else [args.beta]
    rows = []
    for lam in lams:
        for beta in betas:
            params = {"beta": float(beta)}
            if args.baseline == "weibull":
                params["delta"] = args.delta
            dist = BetaPoissonG(args.m, args.n, float(lam), make_baseline(args.baseline, **params))
            s, k = galton_moors(dist)
            rows.append({"m": args.m, "n": args.n, "lambda": float(lam), "beta": float(beta),
                         "galton_skewness": s, "moors_kurtosis": k})
    return rows


def cmd_fit(args) -> list[dict]:
    models = parse_list(args.models, str)
    if not models:
        raise UsageError("--models needs at least one model name")
    unknown = [m for m in models if m not in MODELS]
    if unknown:
        raise UsageError(f"unknown model(s) {unknown}; choose from {sorted(MODELS)}")
    data = load_data(args.data)
    config = FitConfig(starts=args.starts, seed=args.seed, ci_level=args.ci_level)
    rows = []
    for name in models:
        fit = fit_mle(data, name, config)
        rep = gof_report(fit, data, modified=args.modified_gof)
        row = {"model": name, "k": fit.k, "loglik": fit.loglik, "aic": rep.aic, "bic": rep.bic,
               "caic": rep.caic, "hqic": rep.hqic, "ad": rep.ad, "cvm": rep.cvm, "ks": rep.ks,
               "ks_pvalue": rep.ks_pvalue, "converged": fit.converged}
        for p in fit.param_names:
            row[f"{p}"] = fit.estimates[p]
            row[f"{p}_se"] = fit.std_errors[p] if fit.std_errors else None
            row[f"{p}_ci_low"] = fit.ci_low[p] if fit.ci_low else None
            row[f"{p}_ci_high"] = fit.ci_high[p] if fit.ci_high else None
        rows.append(row)
    rows.sort(key=lambda r: r["aic"])
    return rows


def cmd_ttt(args) -> list[dict]:
    pts = ttt_coordinates(load_data(args.data))
    return [{"u": float(u), "ttt": float(t)} for u, t in pts]


def cmd_describe(args) -> list[dict]:
    return [descriptive_stats(load_data(args.data)).as_dict()]


def cmd_simulate(args) -> list[dict]:
    truth = parse_assignments(args.truth)
    names = MODELS[args.model].param_names
    alias = {"lambda": "lam"}
    truth = {alias.get(k, k): v for k, v in truth.items()}
    if set(truth) != set(names):
        raise UsageError(f"--truth must set exactly {', '.join(names)} (lambda may be spelled out)")
    plan = SimulationPlan(tuple(truth[nm] for nm in names), tuple(parse_list(args.sizes, int)),
                          args.reps, args.seed, args.model)
    return run_simulation(plan, workers=args.workers).rows()


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write to this path instead of standard output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp from metadata")
    p.add_argument("--config", help="key=value file supplying defaults for any option")


def _add_dist(p):
    p.add_argument("--family", choices=("bp", "pg"), default="bp")
    p.add_argument("--baseline", choices=("exp", "weibull"), default="exp")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0, help="Weibull shape")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpg", description="Beta Poisson-G distributions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="pdf, cdf, sf, hrf or quantile on a grid")
    _add_dist(p)
    p.add_argument("--what", choices=("pdf", "cdf", "sf", "hrf", "quantile"), default="pdf")
    p.add_argument("--grid", required=True, help="start:stop:step or comma list")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("moments", help="mean, variance, skewness, kurtosis")
    _add_dist(p)
    p.add_argument("--method", choices=("direct", "quantile"), default="direct")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("entropy", help="Renyi entropy for a list of orders")
    _add_dist(p)
    p.add_argument("--orders", default="0.5,2", help="comma list of Renyi orders (each > 0, != 1)")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("shape", help="Galton skewness and Moors kurtosis")
    _add_dist(p)
    p.add_argument("--lambda-grid", help="grid of lambda values")
    p.add_argument("--beta-grid", help="grid of beta values")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("fit", help="fit models to a dataset and compare them")
    p.add_argument("--data", required=True, help="builtin:data1, builtin:data2 or a file path")
    p.add_argument("--models", required=True, help="comma list from: " + ",".join(MODELS))
    p.add_argument("--starts", type=int, default=20)
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--modified-gof", action="store_true", help="small-sample modified A and W")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ttt", help="scaled total-time-on-test coordinates")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_ttt)

    p = sub.add_parser("describe", help="descriptive statistics of a dataset")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("simulate", help="Monte-Carlo bias and MSE of the MLE")
    p.add_argument("--truth", required=True, help="e.g. m=2,n=1.8,lambda=1.5,beta=2")
    p.add_argument("--model", choices=("bp_e", "bp_w"), default="bp_e")
    p.add_argument("--sizes", default="50,100,200,300")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--workers", type=int, default=None, help="processes (default: BPG_WORKERS or 1)")
    p.set_defaults(func=cmd_simulate)

    for p in sub.choices.values():
        _add_common(p)
    return parser


def _apply_config(parser, argv):
    # a --config file supplies defaults; explicit flags still win
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    cmd = next((a for a in argv if not a.startswith("-")), None)
    sub = parser._subparsers._group_actions[0].choices.get(cmd) if cmd else None
    if sub is None:
        return
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = "lam" if key == "lambda" else key
        if dest not in dests or dest in ("help", "config"):
            raise UsageError(f"config key {key!r} is not an option of '{cmd}'")
        action = dests[dest]
        defaults[dest] = action.type(val) if action.type else (val.lower() in ("1", "true", "yes")
                                                                 if action.const is True else val)
        action.required = False
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", QuadratureWarning)
            rows = args.func(args)
        meta = {"tool": "bpg", "version": _version(), "command": args.command, "seed": args.seed}
        if not args.deterministic:
            meta["timestamp"] = datetime.now(timezone.utc).isoformat()
        text = render(rows, args.format, meta)
        if args.output:
            try:
                Path(args.output).write_text(text)
            except OSError as exc:
                raise DataError(f"cannot write {args.output!r}: {exc.strerror}") from None
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except UsageError as exc:
        print(f"bpg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"bpg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"bpg: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DomainError, BpgError, ArithmeticError, FloatingPointError) as exc:
        print(f"bpg: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
