"""Command-line front end.

Subcommands: ``fit``, ``simulate``, ``decompose``, ``densities``, ``jive2``,
``isd`` and ``ladder``.  Data goes to stdout (or ``--out``) as CSV with a
header row; diagnostics go to stderr.

Exit codes: 0 success, 2 parse/config error, 3 numerical failure
(rank deficiency, singular moment matrix), 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import BasisSpec, build_basis, constant_spec, ladder
from .companions import IvSample, KernelSpec, isd_delta, isd_estimate, isd_small_bandwidth_variance, jive2_fit
from .errors import ConfigError, DimensionError, ManyTermsError, NumericalError, ParseError
from .plm import PlmFit, confidence_interval, fit_plm
from .projection import factorize
from .simulation import (
    DgpSpec,
    decompositions_to_csv,
    default_mixture,
    density_grid,
    parse_config,
    rows_to_csv,
    run_decompositions,
)
from .simulation.mc import run_with_timing

log = logging.getLogger("manyterms")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_INTERNAL = 4

FIT_HEADER = [
    "name", "beta", "se0", "se1", "ci0_lower", "ci0_upper", "ci1_lower", "ci1_upper",
    "s2", "sigma2_hat", "K", "n", "min_leverage_complement",
]


def _names(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if not names:
        raise ParseError("empty column list")
    return names


def read_columns(path: str | Path, columns: Sequence[str]) -> dict[str, np.ndarray]:
    """Read named numeric columns from a CSV file with a header row.

    Raises
    ------
    ParseError
        On a missing file or column, a ragged row, or a non-numeric cell
        (the 1-based data row and column name are reported).
    """
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"column(s) not found: {', '.join(missing)}", column=missing[0])
        idx = {c: header.index(c) for c in columns}
        values: dict[str, list[float]] = {c: [] for c in columns}
        for rowno, row in enumerate(reader, 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"row {rowno}: expected {len(header)} fields, got {len(row)}", row=rowno)
            for c in columns:
                cell = row[idx[c]].strip()
                try:
                    val = float(cell)
                except ValueError:
                    raise ParseError(f"row {rowno}, column {c!r}: not a number: {cell!r}", row=rowno, column=c) from None
                if not math.isfinite(val):
                    raise ParseError(f"row {rowno}, column {c!r}: non-finite value", row=rowno, column=c)
                values[c].append(val)
    return {c: np.asarray(v, dtype=np.float64) for c, v in values.items()}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _select_spec(d_z: int, K: int | None, step: int | None, max_degree: int, max_inter: int) -> BasisSpec:
    specs = ladder(d_z, max_degree, max_inter)
    if (K is None) == (step is None):
        raise ConfigError("give exactly one of --K or --ladder-step", key="K")
    if K == 1:
        return constant_spec(d_z)
    if K is not None:
        for s in specs:
            if s.K == K:
                return s
        raise ConfigError(f"K={K} is not on the ladder for d_z={d_z}: {[s.K for s in specs]}", key="K")
    if not 1 <= step <= len(specs):  # type: ignore[operator]
        raise ConfigError(f"--ladder-step must be in 1..{len(specs)}", key="ladder-step")
    return specs[step - 1]  # type: ignore[operator]


def fit_report(fit: PlmFit, names: Sequence[str], level: float) -> str:
    ci0 = confidence_interval(fit, level, corrected=False)
    ci1 = confidence_interval(fit, level, corrected=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIT_HEADER)
    for k, name in enumerate(names):
        writer.writerow([
            name,
            repr(float(fit.beta_hat[k])),
            repr(float(fit.se0[k])),
            repr(float(fit.se1[k])),
            repr(float(ci0.lower[k])),
            repr(float(ci0.upper[k])),
            repr(float(ci1.lower[k])),
            repr(float(ci1.upper[k])),
            repr(fit.s2),
            repr(fit.sigma2_hat),
            fit.K,
            fit.n,
            repr(fit.min_leverage_complement),
        ])
    return buf.getvalue()


def cmd_fit(args: argparse.Namespace) -> int:
    y_name = args.y.strip()
    x_names = _names(args.x)
    z_names = _names(args.z)
    groups = [[y_name], x_names, z_names]
    flat = [c for g in groups for c in g]
    if len(set(flat)) != len(flat):
        raise ConfigError("outcome, regressor and covariate columns must be disjoint", key="x")
    data = read_columns(args.input, flat)
    y = data[y_name]
    X = np.column_stack([data[c] for c in x_names])
    Z = np.column_stack([data[c] for c in z_names])
    spec = _select_spec(len(z_names), args.K, args.ladder_step, args.max_degree, args.max_interaction_degree)
    if y.shape[0] <= X.shape[1] + spec.K:
        raise ConfigError(f"need n > d + K; n={y.shape[0]}, d={X.shape[1]}, K={spec.K}", key="K")
    w = factorize(build_basis(Z, spec), tol=args.tol, strict=args.strict)
    if w.dropped:
        print(f"permissive mode: dropped basis columns {list(w.dropped)}; using K={w.K}", file=sys.stderr)
    fit = fit_plm(y, X, w)
    _emit(fit_report(fit, x_names, args.level), args.out)
    if args.basis_out:
        Path(args.basis_out).write_text(spec.to_text())
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc.strerror}", key="config") from None
    config = parse_config(text)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    threads = args.threads if args.threads is not None else config.threads
    rows, meta = run_with_timing(config, threads)
    meta["threads"] = threads
    _emit(rows_to_csv(rows), args.out)
    meta_path = args.meta or (f"{args.out}.meta.json" if args.out else None)
    if meta_path:
        Path(meta_path).write_text(json.dumps(meta, indent=2) + "\n")
    return EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    dgp = DgpSpec.for_model(args.model, n=args.n, regression=args.regression)
    spec = _select_spec(dgp.d_z, args.K, None, args.max_degree, args.max_interaction_degree)
    if args.S < 1:
        raise ConfigError("S must be at least 1", key="S")
    if dgp.n <= spec.K + 1:
        raise ConfigError(f"need n > d + K; n={dgp.n}, K={spec.K}", key="K")
    reports = run_decompositions(dgp, spec.K, args.S, args.seed, args.threads, spec=spec)
    _emit(decompositions_to_csv(reports), args.out)
    return EXIT_OK


def cmd_densities(args: argparse.Namespace) -> int:
    labels = ["gaussian", "asymmetric", "bimodal"] if args.dist == "all" else [args.dist]
    grids = [density_grid(default_mixture(lab), args.start, args.stop, args.step) for lab in labels]  # type: ignore[arg-type]
    lines = [",".join(["x", *labels])]
    for i in range(grids[0].shape[0]):
        lines.append(",".join([repr(float(grids[0][i, 0])), *(repr(float(g[i, 1])) for g in grids)]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_jive2(args: argparse.Namespace) -> int:
    y_name = args.y.strip()
    x_names = _names(args.x)
    z_names = _names(args.z)
    data = read_columns(args.input, [y_name, *x_names, *z_names])
    sample = IvSample(
        y=data[y_name],
        X=np.column_stack([data[c] for c in x_names]),
        Z=np.column_stack([data[c] for c in z_names]),
    )
    fit = jive2_fit(sample, tol=args.tol)
    lines = ["name,beta"] + [f"{name},{float(b)!r}" for name, b in zip(x_names, fit.beta_hat)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_isd(args: argparse.Namespace) -> int:
    names = _names(args.x)
    data = read_columns(args.input, names)
    x = np.column_stack([data[c] for c in names])
    n = x.shape[0]
    h = args.h if args.h is not None else n ** (-1.0 / 3.0)
    k = KernelSpec(args.kernel, len(names), h)
    beta = isd_estimate(x, k)
    lines = [
        "beta_hat,delta_hat,var_U,n,h",
        f"{beta!r},{isd_delta(beta, k)!r},{isd_small_bandwidth_variance(beta, k, n)!r},{n},{h!r}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_ladder(args: argparse.Namespace) -> int:
    specs = ladder(args.d_z, args.max_degree, args.max_interaction_degree)
    if args.K is None:
        _emit("step,K\n" + "".join(f"{i},{s.K}\n" for i, s in enumerate(specs, 1)), args.out)
    else:
        spec = _select_spec(args.d_z, args.K, None, args.max_degree, args.max_interaction_degree)
        _emit(spec.to_text(), args.out)
    return EXIT_OK


def _add_basis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-degree", type=int, default=10, help="highest pure power on the ladder")
    p.add_argument("--max-interaction-degree", type=int, default=5, help="highest degree of mixed terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manyterms", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate the partially linear model on CSV data")
    p.add_argument("--input", required=True)
    p.add_argument("--y", required=True, help="outcome column")
    p.add_argument("--x", required=True, help="comma-separated regressor columns")
    p.add_argument("--z", required=True, help="comma-separated covariate columns entering the series")
    p.add_argument("--K", type=int, help="number of series terms: 1 (constant only) or a ladder value")
    p.add_argument("--ladder-step", type=int, help="1-based position on the ladder")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--tol", type=float, default=1e-10, help="relative rank tolerance")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True)
    mode.add_argument("--permissive", dest="strict", action="store_false")
    p.add_argument("--out")
    p.add_argument("--basis-out", help="write the basis exponent listing here")
    _add_basis_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run the Monte Carlo study from a key=value config")
    p.add_argument("config")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--meta", help="metadata sidecar path (default: <out>.meta.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="oracle V-statistic decomposition on simulated samples")
    p.add_argument("--model", type=int, default=1)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--S", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--regression", choices=["exp_sqnorm", "sqnorm"], default="exp_sqnorm")
    p.add_argument("--out")
    _add_basis_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("densities", help="error-distribution densities on a grid")
    p.add_argument("--dist", choices=["gaussian", "asymmetric", "bimodal", "all"], default="all")
    p.add_argument("--start", type=float, default=-6.0)
    p.add_argument("--stop", type=float, default=6.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_densities)

    p = sub.add_parser("jive2", help="JIVE2 estimate from CSV data")
    p.add_argument("--input", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--z", required=True, help="comma-separated instrument columns")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_jive2)

    p = sub.add_parser("isd", help="leave-one-out integrated squared density estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True, help="comma-separated data columns")
    p.add_argument("--kernel", choices=["gaussian", "epanechnikov"], default="gaussian")
    p.add_argument("--h", type=float, help="bandwidth (default n^(-1/3))")
    p.add_argument("--out")
    p.set_defaults(func=cmd_isd)

    p = sub.add_parser("ladder", help="list the basis ladder or one basis")
    p.add_argument("--d-z", type=int, default=5)
    p.add_argument("--K", type=int)
    p.add_argument("--out")
    _add_basis_flags(p)
    p.set_defaults(func=cmd_ladder)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ConfigError, DimensionError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ManyTermsError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        print(f"ValueError: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"InternalError: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
