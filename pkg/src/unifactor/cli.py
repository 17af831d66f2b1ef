"""Command line front end.

Exit status: 0 on success, 2 for invalid input, 3 when a solver did not
converge (the artifact is still written, with ``converged`` false).
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateBasisError,
    SingularModelError,
    ValidationError,
)
from .fa import emit_sweep_csv, fit_fa_ls, fit_fa_ml, fit_fa_pls, regularization_sweep
from .io import dumps_json, format_matrix_csv, parse_data_csv, parse_matrix_csv
from .matrix import covariance_from_data
from .objectives import FAMILIES, ObjectiveSpec, eval_ls
from .path import PathConfig, default_grid, emit_path_csv, solve_path
from .pca import pca_report
from .pcfm import fit_pcfm

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


def _floats(tokens) -> list:
    out = []
    for tok in tokens:
        for part in str(tok).split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError:
                    raise ValidationError(f"not a number: {part!r}") from None
    return out


def _load_sigma(args):
    if args.cov is not None:
        return parse_matrix_csv(args.cov)
    return covariance_from_data(parse_data_csv(args.data), args.estimator)


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_pca(args, sigma):
    rep = pca_report(sigma, args.q)
    dec = rep.decomposition
    if args.format == "csv":
        return format_matrix_csv(dec.low_rank), True
    return dumps_json({
        "command": "pca",
        "q": args.q,
        "cumulative_proportion": rep.cumulative_proportion,
        "well_represented": rep.well_represented,
        "variances": rep.variances,
        "loading": dec.loading,
        "low_rank": dec.low_rank,
        "residual": dec.residual,
        "converged": True,
    }), True


def _run_fa(args, sigma):
    if args.method == "ml":
        fit = fit_fa_ml(sigma, args.q, eps=args.eps, max_evals=args.max_evals)
    else:
        kwargs = {"max_iters": args.max_iters, "stop_on_loewner": args.stop_on_loewner}
        if args.cd_eps is not None:
            kwargs["eps"] = args.cd_eps
        if args.method == "ls":
            fit = fit_fa_ls(sigma, args.q, **kwargs)
        else:
            if args.lam is None:
                raise ValidationError("--lambda is required for --method pls")
            fit = fit_fa_pls(sigma, args.q, args.lam, **kwargs)
    dec, rep = fit.decomposition, fit.report
    if args.format == "csv":
        return format_matrix_csv(dec.low_rank), rep.converged
    return dumps_json({
        "command": "fa",
        "method": args.method,
        "q": args.q,
        "lambda": args.lam if args.method == "pls" else None,
        "loading": dec.loading,
        "low_rank": dec.low_rank,
        "v": fit.v,
        "v_fro": fit.v_fro,
        "ls_loss": eval_ls(dec.low_rank, dec.residual, sigma),
        "objective": rep.objective,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "message": rep.message,
    }), rep.converged


def _run_sweep(args, sigma):
    lambdas = _floats(args.lambdas)
    if not lambdas:
        raise ValidationError("--lambdas needs at least one value")
    kwargs = {"max_iters": args.max_iters}
    if args.cd_eps is not None:
        kwargs["eps"] = args.cd_eps
    rows = regularization_sweep(sigma, args.q, lambdas, **kwargs)
    return emit_sweep_csv(rows), all(r.converged for r in rows)


def _run_path(args, sigma):
    grid = default_grid(args.steps) if args.grid is None else np.array(_floats([args.grid]))
    config = PathConfig(q=args.q, grid=grid, eps=args.eps, max_evals=args.max_evals)
    points = solve_path(sigma, config)
    return emit_path_csv(points), all(pt.converged for pt in points)


def _run_pcfm(args, sigma):
    fit = fit_pcfm(sigma, args.q, args.objective, tol=args.tol, max_iters=args.max_iters,
                   tie_residuals=not args.untied, search_eps=args.eps,
                   max_evals=args.max_evals)
    if args.format == "csv":
        return format_matrix_csv(fit.implied()), fit.report.converged
    payload = fit.to_dict()
    payload["message"] = fit.report.message
    return dumps_json(payload), fit.report.converged


def _run_loss(args, sigma):
    family = args.objective
    params = {"tau": args.tau, "lam": args.lam, "w": args.w, "base_f": args.base_f}
    spec = ObjectiveSpec(family, sigma, **{k: v for k, v in params.items() if v is not None})
    if args.t is None:
        raise ValidationError("--t is required")
    t = parse_matrix_csv(args.t)
    v = None
    if not spec.one_matrix:
        if args.v is None:
            raise ValidationError(f"objective {family!r} needs --v")
        v = parse_matrix_csv(args.v)
    value = spec(t, v)
    if args.format == "json":
        return dumps_json({"command": "loss", "objective": family, "value": value}), True
    return repr(float(value)) + "\n", True


_RUNNERS = {
    "pca": _run_pca,
    "fa": _run_fa,
    "sweep": _run_sweep,
    "path": _run_path,
    "pcfm": _run_pcfm,
    "loss": _run_loss,
}
_DEFAULT_FORMAT = {"pca": "json", "fa": "json", "pcfm": "json", "loss": "text",
                   "sweep": "csv", "path": "csv"}
_FORMATS = {"pca": ("json", "csv"), "fa": ("json", "csv"), "pcfm": ("json", "csv"),
            "loss": ("text", "json"), "sweep": ("csv",), "path": ("csv",)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unifactor",
        description="PCA, factor analysis and their combinations on covariance matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--cov", metavar="CSV", help="covariance matrix file")
    src.add_argument("--data", metavar="CSV", help="data file, one observation per line")
    common.add_argument("--estimator", choices=("ml", "sample"), default="ml",
                        help="covariance divisor for --data: n (ml) or n-1 (sample)")
    common.add_argument("--output", "-o", metavar="PATH", help="write here instead of stdout")
    common.add_argument("--format", help="output format (default depends on the command)")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--eps", type=float, default=1e-6, help="direct search step threshold")
    search.add_argument("--max-evals", type=int, default=None,
                        help="direct search budget (default: $UNIFACTOR_MAX_EVALS or 200000)")

    p = sub.add_parser("pca", parents=[common], help="principal components and variance share")
    p.add_argument("--q", type=int, required=True)

    p = sub.add_parser("fa", parents=[common, search], help="factor analysis fit")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--method", choices=("ls", "pls", "ml"), default="ls")
    p.add_argument("--lambda", dest="lam", type=float, help="penalty weight for pls")
    p.add_argument("--cd-eps", type=float, default=None,
                   help="coordinate descent stop threshold on the residual norm decrease")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--stop-on-loewner", action="store_true",
                   help="stop coordinate descent once V <= sigma fails")

    p = sub.add_parser("sweep", parents=[common], help="penalized LS over a list of lambdas")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--lambdas", nargs="+", required=True, help="values, space or comma separated")
    p.add_argument("--cd-eps", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=10_000)

    p = sub.add_parser("path", parents=[common, search], help="PCA to FA homotopy")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--steps", type=int, default=20, help="uniform grid with this many steps")
    p.add_argument("--grid", help="explicit comma separated weights from 1 down to 0")

    p = sub.add_parser("pcfm", parents=[common, search], help="principal component factor model")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--objective", choices=("ls", "ml"), default="ls")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--untied", action="store_true",
                   help="free every residual variance instead of tying them per basis group")

    p = sub.add_parser("loss", parents=[common], help="evaluate one objective")
    p.add_argument("--objective", choices=FAMILIES, required=True)
    p.add_argument("--t", metavar="CSV", help="low-rank matrix T")
    p.add_argument("--v", metavar="CSV", help="residual matrix V (two-matrix objectives)")
    p.add_argument("--tau", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--base-f", choices=("trace", "spectral", "frobenius"))
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or _DEFAULT_FORMAT[args.command]
    if fmt not in _FORMATS[args.command]:
        print(f"unifactor {args.command}: unsupported --format {fmt!r}", file=sys.stderr)
        return EXIT_INVALID
    args.format = fmt
    try:
        sigma = _load_sigma(args)
        text, converged = _RUNNERS[args.command](args, sigma)
    except (ValidationError, SingularModelError, OSError) as exc:
        print(f"unifactor {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, DegenerateBasisError) as exc:
        print(f"unifactor {args.command}: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    _emit(args, text)
    if not converged:
        print(f"unifactor {args.command}: solver did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
