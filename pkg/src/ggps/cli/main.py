"""``ggps`` command line: fit, eval, sample, profile and simstudy."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import DomainError, GgpsError
from ..estimation import FitConfig, fit, model_spec, profile_loglik
from ..gof import fit_gof
from .io import fmt_float, format_table, ingest, resolve_output
from .report import ModelEntry, RunReport, render_report, write_report
from .simstudy import TABLE_COLUMNS, SimStudyConfig, run_simstudy

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE = 0, 1, 2
DEFAULT_MODELS = "gompertz,gg,ggg,ggp,ggb,ggl"


class UsageError(GgpsError):
    """Bad command-line arguments."""


class FitFailure(GgpsError):
    """A model could not be fitted; carries the model tag."""

    def __init__(self, model: str, cause: Exception):
        self.model = model
        super().__init__(f"{model}: {type(cause).__name__}: {cause}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- argument helpers ------------------------------------------------------------
def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid must be lo:hi:steps, got {text!r}") from None
    if steps < 1 or (steps > 1 and not hi > lo):
        raise UsageError("grid needs steps >= 1 and hi > lo")
    return np.linspace(lo, hi, steps)


def _add_model_params(p):
    p.add_argument("--model", default="ggg", help="gompertz, gg, ggg, ggp, ggb, ggl or ggg-ext")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--theta-star", type=float, default=None, help="ggg-ext only: theta* = 1 - theta")
    p.add_argument("--m", type=int, default=5, help="binomial size for ggb")


def _model_from_args(args):
    spec = model_spec(args.model, args.m)
    est = [args.alpha] if spec.has_alpha else []
    est += [args.beta, args.gamma]
    if spec.has_theta:
        if args.theta_star is not None:
            if not spec.extended:
                raise UsageError("--theta-star applies to ggg-ext only")
            theta = 1.0 - args.theta_star
        elif args.theta is not None:
            theta = args.theta
        else:
            raise UsageError(f"{spec.label} needs --theta")
        est.append(theta)
    elif args.theta is not None or args.theta_star is not None:
        raise UsageError(f"{spec.label} has no theta parameter")
    return spec, spec.build(est)


def _param_header(spec, model) -> str:
    names = spec.param_names
    vals = spec.natural_of(model)
    return f"model {spec.label} " + " ".join(f"{n}={fmt_float(v)}" for n, v in zip(names, vals))


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


# -- commands --------------------------------------------------------------------
def cmd_fit(args) -> int:
    data = ingest(args.data, args.format)
    names = [m.strip() for m in args.models.split(",") if m.strip()]
    if not names:
        raise UsageError("--models is empty")
    if len(set(n.lower() for n in names)) != len(names):
        raise UsageError("--models lists a model twice")
    config = FitConfig(method=args.method, ci_level=args.ci, seed=args.seed)
    entries = []
    for name in names:
        spec = model_spec(name, args.m)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                result = fit(spec, data, config)
                gof = fit_gof(result, data)
        except (GgpsError, ArithmeticError, ValueError) as exc:
            raise FitFailure(spec.label, exc) from exc
        entries.append(ModelEntry(result, gof))
    v = data.values
    report = RunReport(
        dataset={"label": data.label, "source": data.source, "n": data.n,
                 "min": float(v.min()), "max": float(v.max()), "mean": data.mean},
        models=tuple(entries),
        seed=args.seed,
        version=__version__,
        settings={"method": args.method, "ci": args.ci, "m": args.m, "models": names, "format": args.format},
    )
    path = write_report(report, resolve_output(args.out, f"{data.label or 'data'}_report.json"))
    sys.stdout.write(render_report(report))
    sys.stdout.write(f"report written to {path}\n")
    return EXIT_CONVERGENCE if report.any_unconverged else EXIT_OK


def cmd_eval(args) -> int:
    spec, model = _model_from_args(args)
    if (args.x_grid is None) == (args.q is None):
        raise UsageError("give exactly one of --x-grid or --q")
    if args.x_grid is not None:
        x = _grid(args.x_grid)
        if np.any(x < 0):
            raise DomainError("x grid must be nonnegative")
        with np.errstate(all="ignore"):
            cols = ("x", "pdf", "cdf", "sf", "hazard")
            sf = model.sf(x)
            haz = np.where(sf > 0, model.pdf(x) / np.where(sf > 0, sf, 1.0), np.nan)
            rows = zip(x, model.pdf(x), model.cdf(x), sf, haz)
    else:
        q = np.array(_floats(args.q))
        x = model.quantile(q)
        cols = ("q", "x", "cdf")
        rows = zip(q, x, model.cdf(x))
    _emit(format_table(cols, rows, [_param_header(spec, model)]), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    spec, model = _model_from_args(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    rng = np.random.default_rng(args.seed)
    x = np.atleast_1d(model.sample(args.n, rng, method=args.method))
    header = [_param_header(spec, model), f"n={args.n} seed={args.seed} method={args.method}"]
    text = "".join(f"# {h}\n" for h in header) + "".join(fmt_float(v) + "\n" for v in x)
    _emit(text, args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    data = ingest(args.data, args.format)
    spec = model_spec(args.model, args.m)
    if args.param not in spec.param_names:
        raise UsageError(f"{spec.label} has no parameter {args.param!r}; choose from {spec.param_names}")
    grid = _grid(args.grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mle = fit(spec, data, FitConfig(method=args.method, seed=args.seed))
        points = profile_loglik(spec, data, args.param, grid, mle)
    others = [n for n in spec.param_names if n != args.param]
    cols = (args.param, "profile_loglik", "converged", *others)
    rows = []
    for pt in points:
        rest = [v for n, v in zip(spec.param_names, pt.estimates) if n != args.param]
        rows.append((pt.value, pt.loglik, "1" if pt.converged else "0", *rest))
    header = [
        f"profile of {args.param} for {spec.label} on {data.label} (n={data.n})",
        "mle " + " ".join(f"{n}={fmt_float(v)}" for n, v in mle.params.items()) + f" loglik={fmt_float(mle.loglik)}",
    ]
    _emit(format_table(cols, rows, header), args.out)
    return EXIT_OK


def cmd_simstudy(args) -> int:
    config = SimStudyConfig(
        family=args.family,
        alphas=_floats(args.alphas),
        thetas=_floats(args.thetas),
        beta=args.beta,
        gamma=args.gamma,
        sizes=tuple(int(s) for s in _floats(args.sizes)),
        replications=args.reps,
        seed=args.seed,
        m=args.m,
        init_at_truth=args.init == "truth",
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cells = run_simstudy(config, workers=args.workers)
    rows = [row for cell in cells for row in cell.rows()]
    header = [
        f"simulation study: {config.model} beta={fmt_float(config.beta)} gamma={fmt_float(config.gamma)} "
        f"replications={config.replications} seed={config.seed} init={args.init}",
    ]
    _emit(format_table(TABLE_COLUMNS, rows, header), args.out)
    return EXIT_CONVERGENCE if any(c.failure_fraction > 0 for c in cells) else EXIT_OK


# -- parser ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ggps", description="Generalized Gompertz power-series lifetime models.")
    parser.add_argument("--version", action="version", version=f"ggps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit models to a dataset and write a report")
    p.add_argument("--data", required=True, help="data file, or bundled:glass_fibers / bundled:phosphorus")
    p.add_argument("--format", default="lines", help="lines or csv:COL")
    p.add_argument("--models", default=DEFAULT_MODELS)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--method", choices=("direct", "em", "both"), default="direct")
    p.add_argument("--ci", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report path (default: $GGPS_OUTPUT_DIR/<data>_report.json)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="tabulate pdf, cdf and hazard, or quantiles")
    _add_model_params(p)
    p.add_argument("--x-grid", default=None, help="lo:hi:steps")
    p.add_argument("--q", default=None, help="comma-separated probability levels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="draw a sample")
    _add_model_params(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("inverse", "compound"), default="inverse")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("profile", help="profile log-likelihood of one parameter")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="lines")
    p.add_argument("--model", default="ggg")
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", required=True, help="lo:hi:steps")
    p.add_argument("--method", choices=("direct", "em", "both"), default="direct")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simstudy", help="Monte Carlo study of the EM estimators")
    p.add_argument("--family", default="geometric")
    p.add_argument("--alphas", default="1.0")
    p.add_argument("--thetas", default="0.5")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--sizes", default="100")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--init", choices=("default", "truth"), default="default")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simstudy)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, GgpsError, ValueError, OSError) as exc:
        sys.stderr.write(f"ggps: error: {exc}\n")
        return EXIT_USAGE
