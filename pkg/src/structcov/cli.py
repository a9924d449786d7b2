"""Command-line front door: cutoff tables, scalar indices, tradeoff curves,
influence indices, model fits, and Monte Carlo experiments as CSV/JSON.

Exit codes: 0 success, 2 usage or schema error, 3 non-convergence,
4 tolerance breach.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    biweight_scalars,
    consistency_constant,
    cutoff_for_breakdown,
    gaussian_ml_scalars,
    limit_covariances,
)
from .errors import NotPositiveDefiniteError, StructCovError
from .estimators import FitOptions, fit, load_dataset
from .influence import ges_indices
from .report import (
    DEFAULT_BREAKDOWNS,
    DEFAULT_DIMS,
    cutoff_table,
    render_tradeoff_figures,
    tradeoff_rows,
    tradeoff_summary,
    write_tradeoff_csv,
    write_tradeoff_summary,
)
from .simulate import (
    estimator_limit_experiment,
    gaussian_designs,
    radial_projection_experiment,
    report_to_dict,
)
from .structure import compound_symmetry, load_structure
from .weights import biweight, gaussian_ml, s_rho

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_TOLERANCE = 4

SCHEMA_PREFIX = "structcov"


def _echo(args: argparse.Namespace, parser_name: str) -> None:
    """Log the resolved invocation so any run is reproducible from the echo."""
    if args.quiet:
        return
    skip = {"quiet", "func", "verb"}
    parts = [f"structcov {parser_name}"]
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                parts.append(flag)
        elif isinstance(value, (list, tuple)):
            parts.append(f"{flag} " + " ".join(str(v) for v in value))
        else:
            parts.append(f"{flag} {shlex.quote(str(value))}")
    print("# invocation: " + " ".join(parts), file=sys.stderr)


def _emit_table(rows: list[dict], columns: tuple[str, ...], args, schema: str) -> None:
    out = sys.stdout
    if args.format == "json":
        doc = {"schema_id": f"{SCHEMA_PREFIX}.{schema}.v1", "rows": rows}
        json.dump(doc, out, indent=2)
        out.write("\n")
        return
    out.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for col in columns:
            val = row[col]
            cells.append(str(int(val)) if col == "k" else f"{val:.3f}")
        out.write(",".join(cells) + "\n")


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise StructCovError(f"grid '{text}' is not start:stop:step") from None
    if step <= 0 or stop < start:
        raise StructCovError(f"grid '{text}' is not increasing")
    n = int(round((stop - start) / step)) + 1
    grid = [round(start + i * step, 10) for i in range(n) if start + i * step <= stop + 1e-9]
    if not grid or grid[0] <= 0 or grid[-1] > 0.5:
        raise StructCovError(f"grid '{text}' must stay within (0, 0.5]")
    return grid


def _scalars_row(args) -> dict:
    if args.family == "gaussian-ml":
        sc = gaussian_ml_scalars(args.dim)
    else:
        sc = biweight_scalars(args.dim, cutoff=args.cutoff, breakdown=args.breakdown)
    row = {
        "k": sc.k,
        "family": sc.family,
        "cutoff": sc.cutoff,
        "breakdown": sc.breakdown,
        "b0": sc.b0,
        "sigma1": sc.sigma1,
        "sigma2": sc.sigma2,
        "sigma3": sc.sigma3,
        "lambda": sc.lambda_,
        "alpha": sc.alpha,
        "gamma1": sc.gamma1,
        "gamma2": sc.gamma2,
        "delta1": sc.delta1,
        "delta2": sc.delta2,
        "are_regression": sc.are_regression,
        "are_shape_direction": sc.are_shape,
        "are_scale": sc.are_scale,
    }
    return row


def run_cutoff(args) -> int:
    for k in args.dim:
        if k < 1:
            raise StructCovError(f"dimension {k} is not a positive integer")
    for eps in args.breakdown:
        if not 0.0 < eps <= 0.5:
            raise StructCovError(f"breakdown {eps} outside (0, 0.5]")
    rows = cutoff_table(args.dim, args.breakdown)
    _emit_table(rows, ("k", "breakdown", "cutoff"), args, "cutoff")
    return EXIT_OK


def run_scalars(args) -> int:
    if args.family == "s-rho" and (args.cutoff is None) == (args.breakdown is None):
        raise StructCovError("s-rho scalars need exactly one of --cutoff / --breakdown")
    row = _scalars_row(args)
    if args.format == "json":
        doc = {"schema_id": f"{SCHEMA_PREFIX}.scalars.v1", **row}
        json.dump(doc, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        cols = [c for c in row if row[c] is not None]
        sys.stdout.write(",".join(cols) + "\n")
        cells = []
        for c in cols:
            v = row[c]
            cells.append(str(v) if isinstance(v, (int, str)) else f"{v:.3f}")
        sys.stdout.write(",".join(cells) + "\n")
    return EXIT_OK


def run_tradeoff(args) -> int:
    grid = _parse_grid(args.grid)
    for k in args.dim:
        if k < 1:
            raise StructCovError(f"dimension {k} is not a positive integer")
    rows = tradeoff_rows(args.dim, grid)
    out_csv = Path(args.out)
    write_tradeoff_csv(rows, out_csv, decimals=None if args.format == "json" else 3)
    summary = tradeoff_summary(args.dim)
    out_summary = out_csv.with_suffix(".summary.json")
    write_tradeoff_summary(summary, out_summary)
    written = [out_csv, out_summary]
    if args.plot:
        written += render_tradeoff_figures(rows, out_csv)
    if not args.quiet:
        for p in written:
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


def run_influence(args) -> int:
    if (args.cutoff is None) == (args.breakdown is None):
        raise StructCovError("need exactly one of --cutoff / --breakdown")
    rows = []
    for k in args.dim:
        g = ges_indices(k, cutoff=args.cutoff, breakdown=args.breakdown)
        rows.append(
            {
                "k": g.k,
                "cutoff": g.cutoff,
                "breakdown": g.breakdown,
                "g1": g.g1,
                "g2": g.g2,
                "g3": g.g3,
            }
        )
    _emit_table(rows, ("k", "cutoff", "breakdown", "g1", "g2", "g3"), args, "influence")
    return EXIT_OK


def _make_triple(family: str, k: int, cutoff: float | None, breakdown: float | None):
    if family == "gaussian-ml":
        return gaussian_ml(k), 1.0, 0.0
    if (cutoff is None) == (breakdown is None):
        raise StructCovError("s-rho family needs exactly one of --cutoff / --breakdown")
    if cutoff is None:
        cutoff = cutoff_for_breakdown(k, breakdown)
    sc = biweight_scalars(k, cutoff=cutoff)
    rho = biweight(cutoff).with_b0(sc.b0)
    return s_rho(rho, k), sc.sigma1, sc.sigma2


def run_fit(args) -> int:
    data = load_dataset(args.data)
    struct = load_structure(args.structure)
    triple, sigma1, sigma2 = _make_triple(args.family, struct.dim, args.cutoff, args.breakdown)
    result = fit(data, struct, triple, FitOptions(max_iterations=args.max_iterations))
    doc = {
        "schema_id": f"{SCHEMA_PREFIX}.fit.v1",
        "family": args.family,
        "beta": result.beta.tolist(),
        "theta": result.theta.tolist(),
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "pds_valid": bool(result.pds_valid),
        "psi_norm": result.psi_norm,
        "message": result.message,
        "distances": result.distances.tolist(),
    }
    if result.pds_valid:
        cov = limit_covariances(struct, result.theta, sigma1, sigma2)
        se = np.sqrt(np.diag(cov.cov_theta) / data.n)
        doc["theta_standard_errors"] = se.tolist()
        doc["limit_cov_theta"] = cov.cov_theta.tolist()
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def run_simulate(args) -> int:
    struct = load_structure(args.structure) if args.structure else compound_symmetry(3)
    theta0 = np.asarray(args.theta, dtype=float)
    if theta0.size != struct.nparams:
        raise StructCovError(
            f"--theta has {theta0.size} entries, structure expects {struct.nparams}"
        )
    if args.experiment == "radial":
        replicates = args.replicates if args.replicates is not None else 100_000
        report = radial_projection_experiment(
            struct, theta0, args.sigma1, args.sigma2, replicates=replicates, seed=args.seed
        )
        rel = report.max_rel_err
        tolerance = args.tolerance if args.tolerance is not None else 0.05
    else:
        triple, sigma1, sigma2 = _make_triple(
            args.family, struct.dim, args.cutoff, args.breakdown
        )
        beta0 = np.asarray(args.beta, dtype=float)
        designs = gaussian_designs(args.n, struct.dim, beta0.size, seed=args.seed)
        report = estimator_limit_experiment(
            struct,
            theta0,
            beta0,
            designs,
            triple,
            sigma1,
            sigma2,
            n=args.n,
            replicates=args.replicates if args.replicates is not None else 2000,
            seed=args.seed,
        )
        rel = report.rel_frobenius_err
        tolerance = args.tolerance if args.tolerance is not None else 0.10
    doc = {"schema_id": f"{SCHEMA_PREFIX}.simulate.v1", "tolerance": tolerance}
    doc.update(report_to_dict(report))
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK if rel <= tolerance else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structcov",
        description="Structured covariance estimators: efficiency, robustness, and fits.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--quiet", action="store_true", help="suppress the invocation echo")

    p = sub.add_parser("cutoff", help="biweight cutoff for given breakdown points")
    p.add_argument("--dim", type=int, nargs="+", default=list(DEFAULT_DIMS))
    p.add_argument("--breakdown", type=float, nargs="+", default=list(DEFAULT_BREAKDOWNS))
    common(p)
    p.set_defaults(func=run_cutoff)

    p = sub.add_parser("scalars", help="asymptotic scalar indices for one family")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--family", choices=("gaussian-ml", "s-rho"), default="s-rho")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--breakdown", type=float)
    common(p)
    p.set_defaults(func=run_scalars)

    p = sub.add_parser("tradeoff", help="efficiency/sensitivity curves over breakdown")
    p.add_argument("--dim", type=int, nargs="+", default=[2, 5, 10])
    p.add_argument("--grid", default="0.05:0.50:0.05", help="breakdown grid start:stop:step")
    p.add_argument("--out", default="tradeoff.csv", help="output CSV path")
    p.add_argument("--plot", action="store_true", help="also render PNG figures next to the CSV")
    common(p)
    p.set_defaults(func=run_tradeoff)

    p = sub.add_parser("influence", help="gross-error-sensitivity indices")
    p.add_argument("--dim", type=int, nargs="+", default=[2])
    p.add_argument("--cutoff", type=float)
    p.add_argument("--breakdown", type=float)
    common(p)
    p.set_defaults(func=run_influence)

    p = sub.add_parser("fit", help="fit a structured covariance model to data")
    p.add_argument("--data", required=True, help="dataset CSV or JSON path")
    p.add_argument("--structure", required=True, help="structure descriptor JSON path")
    p.add_argument("--family", choices=("gaussian-ml", "s-rho"), default="gaussian-ml")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--breakdown", type=float)
    p.add_argument("--max-iterations", type=int, default=500)
    common(p)
    p.set_defaults(func=run_fit)

    p = sub.add_parser("simulate", help="Monte Carlo validation experiments")
    p.add_argument("--experiment", choices=("radial", "limit"), required=True)
    p.add_argument("--structure", help="structure descriptor JSON (default: compound symmetry k=3)")
    p.add_argument("--theta", type=float, nargs="+", default=[1.0, 0.5])
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=0.0)
    p.add_argument("--family", choices=("gaussian-ml", "s-rho"), default="gaussian-ml")
    p.add_argument("--cutoff", type=float)
    p.add_argument("--breakdown", type=float)
    p.add_argument("--beta", type=float, nargs="+", default=[1.0, -0.5])
    p.add_argument("--n", type=int, default=500)
    p.add_argument(
        "--replicates", type=int, default=None, help="default: 100000 radial, 2000 limit"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=None)
    common(p)
    p.set_defaults(func=run_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo(args, args.verb)
    try:
        return args.func(args)
    except NotPositiveDefiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (StructCovError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
