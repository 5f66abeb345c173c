"""Command-line interface: ``jpscdf {estimate,moments,simulate,empirical,kernels}``.

Exit codes: 0 success, 2 malformed input data, 3 invalid flags or
arguments that violate a precondition.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bandwidth import select_bandwidth
from .csvio import write_estimate, write_table
from .distributions import DIST_NAMES, Support
from .empirical import BodyfatFormatError, Concomitant, load_bodyfat, table1
from .estimators import JpsSample, estimate_cdf
from .kernels import KERNEL_NAMES, get_kernel
from .moments import weight_moments
from .sim import DEFAULT_P_GRID, re_curve

EXIT_INPUT = 2
EXIT_USAGE = 3

RE_COLUMNS = ("p", "mse_srs", "se_srs", "mse_jps", "se_jps", "re")
TABLE_COLUMNS = ("concomitant", "n", "H", "p", "mse_srs", "se_srs", "mse_jps", "se_jps", "re", "re_se")


class InputError(Exception):
    """Malformed input data (exit code 2)."""


class UsageError(Exception):
    """Invalid flag combination or precondition violation (exit code 3)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bandwidth_flag(text: str) -> str:
    if text in ("auto-pointwise", "auto-global"):
        return text
    if text.startswith("fixed:"):
        try:
            value = float(text[6:])
        except ValueError:
            value = float("nan")
        if value > 0:
            return text
    raise argparse.ArgumentTypeError("bandwidth must be auto-pointwise, auto-global or fixed:<positive value>")


def _workers(args) -> int:
    env = os.environ.get("JPS_CDF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"JPS_CDF_THREADS must be an integer, got {env!r}") from None
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


# Flags that do not influence results live only in the sidecar, so that the
# same seed gives byte-identical tables whatever the destination or thread count.
_SIDECAR_ONLY = ("threads", "out", "svg", "out_dir")


def _run_config(args) -> list[tuple[str, object]]:
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func" and k not in _SIDECAR_ONLY}
    return [("tool", "jpscdf"), ("version", __version__), ("subcommand", args.command), ("args", flags)]


def _emit(args, columns, rows, meta, writer=None) -> None:
    """Write the table to ``--out`` (plus a ``.run.json`` sidecar) or stdout.

    ``writer(fh)`` replaces the default table writer when given.
    """
    def write(fh):
        if writer is None:
            write_table(fh, columns, rows, meta)
        else:
            writer(fh)

    out = getattr(args, "out", None)
    if out is None:
        write(sys.stdout)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write(fh)
    sidecar = {k: v for k, v in meta}
    sidecar["outputs"] = {k: getattr(args, k, None) for k in _SIDECAR_ONLY if k != "threads"}
    sidecar["outputs"]["out"] = str(out)
    sidecar["threads"] = getattr(args, "threads", None)
    sidecar["JPS_CDF_THREADS"] = os.environ.get("JPS_CDF_THREADS")
    sidecar["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    Path(str(out) + ".run.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=str) + "\n",
                                            encoding="utf-8")


# --- estimate --------------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _read_sample(path: str, design: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InputError(f"{path}: no data")
    first = [h.strip().lower() for h in lines[0].split(",")]
    if all(_is_number(f) for f in first):
        # headerless: columns are x[, rank]
        header, body = ["x", "rank"][: len(first)], lines
    else:
        header, body = first, lines[1:]
    if "x" not in header:
        raise InputError(f"{path}: header must contain an 'x' column")
    if design == "jps" and "rank" not in header:
        raise InputError(f"{path}: a JPS sample needs a 'rank' column")
    ix = header.index("x")
    ir = header.index("rank") if "rank" in header else None
    xs, ranks = [], []
    for lineno, line in enumerate(body, start=2):
        fields = line.split(",")
        try:
            xs.append(float(fields[ix]))
            if ir is not None and design == "jps":
                r = float(fields[ir])
                if r != int(r):
                    raise ValueError
                ranks.append(int(r))
        except (IndexError, ValueError):
            raise InputError(f"{path}: line {lineno}: malformed record {line!r}") from None
    if not xs:
        raise InputError(f"{path}: no observations")
    return np.array(xs), (np.array(ranks) if ranks else None)


def _eval_grid(args, xs: np.ndarray) -> np.ndarray:
    if args.t is not None:
        return np.asarray(args.t, dtype=float)
    if args.grid is not None:
        try:
            lo, hi, m = args.grid.split(":")
            return np.linspace(float(lo), float(hi), int(m))
        except ValueError:
            raise UsageError("--grid must look like start:stop:count") from None
    return np.linspace(xs.min(), xs.max(), 101)


def cmd_estimate(args) -> int:
    if args.design == "jps" and args.H is None:
        raise UsageError("--design jps requires --H")
    if args.design == "srs" and args.H is not None:
        raise UsageError("--H only applies to --design jps")
    if args.t is not None and args.grid is not None:
        raise UsageError("pass at most one of --t and --grid")
    xs, ranks = _read_sample(args.input, args.design)
    sample = None
    if args.design == "jps":
        try:
            sample = JpsSample(xs, ranks, args.H)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    t = _eval_grid(args, xs)
    meta = _run_config(args)
    if args.method == "edf":
        est = estimate_cdf(t, xs=None if sample else xs, sample=sample)
    else:
        kernel = get_kernel(args.kernel)
        H = args.H if sample else None
        if args.bandwidth.startswith("fixed:"):
            h = float(args.bandwidth[6:])
            info = {"clamped": 0, "capped": 0}
        else:
            points = t if args.bandwidth == "auto-pointwise" else np.array([np.median(xs)])
            bws = [select_bandwidth(xs, kernel, float(p), support=args.support, H=H) for p in points]
            h = np.array([b.h for b in bws]) if args.bandwidth == "auto-pointwise" else bws[0].h
            info = {"clamped": sum(b.clamped for b in bws), "capped": sum(b.capped for b in bws)}
        est = estimate_cdf(t, xs=None if sample else xs, sample=sample, kernel=kernel, h=h)
        meta.append(("bandwidth_events", info))
    _emit(args, (), (), meta, writer=lambda fh: write_estimate(fh, est, meta))
    return 0


# --- moments / kernels -------------------------------------------------------------


def cmd_moments(args) -> int:
    rows = []
    for n in args.n:
        for H in args.H:
            if n < 1 or H < 2:
                raise UsageError("moments need n >= 1 and H >= 2")
            wm = weight_moments(n, H)
            rows.append([n, H, str(wm.var_w), wm.var_w_float, str(wm.e_w2j), wm.e_w2j_float, wm.nH_e_w2j])
    _emit(args, ("n", "H", "var_w", "var_w_float", "e_w2j", "e_w2j_float", "nH_e_w2j"), rows, _run_config(args))
    return 0


def cmd_kernels(args) -> int:
    kinds = KERNEL_NAMES if args.kind == "all" else (args.kind,)
    rows = []
    for k in kinds:
        spec = get_kernel(k)
        rows.append([spec.name, spec.a, spec.int_x2k, spec.int_K2])
    _emit(args, ("kind", "a", "int_x2k", "int_K2"), rows, _run_config(args))
    return 0


# --- simulate ----------------------------------------------------------------------


def _mode(flag: str):
    return flag[len("auto-"):] if flag.startswith("auto-") else flag


def _plot_curves(path, curves, title):
    from .svg import LineChart

    chart = LineChart(title=title, xlabel="p", ylabel="RE(p)", hlines=[1.0])
    for label, c in curves:
        chart.add(label, c.p_grid, c.re)
    chart.save(path)


def _curve_rows(curves, with_H: bool):
    for H, c in curves:
        for i, p in enumerate(c.p_grid):
            row = [float(p), c.mse_srs[i], c.se_srs[i], c.mse_jps[i], c.se_jps[i], c.re[i]]
            yield ([H] + row) if with_H else row


def _simulate_one(args, dist, n, rho, workers, out, svg):
    curves = []
    for H in args.H:
        c = re_curve(dist, n, H, rho, args.kernel, args.p, args.reps, args.seed, workers=workers,
                     bandwidth=_mode(args.bandwidth), coupled=args.coupled)
        curves.append((H, c))
    with_H = len(args.H) > 1
    columns = (("H",) if with_H else ()) + RE_COLUMNS
    meta = _run_config(args) + [
        ("config", {"dist": dist, "n": n, "rho": rho}),
        ("bandwidth_events", {str(H): c.meta for H, c in curves}),
    ]
    saved_out = args.out
    args.out = out
    try:
        _emit(args, columns, _curve_rows(curves, with_H), meta)
    finally:
        args.out = saved_out
    if svg:
        _plot_curves(svg, [(f"H={H}", c) for H, c in curves], f"{dist}, n={n}, rho={rho}")


def cmd_simulate(args) -> int:
    if args.reps < 100:
        raise UsageError("--reps must be >= 100")
    if any(H < 2 for H in args.H):
        raise UsageError("--H values must be >= 2")
    if not 0.0 <= args.rho <= 1.0:
        raise UsageError("--rho must lie in [0, 1]")
    if args.p is None:
        args.p = list(DEFAULT_P_GRID)
    if any(not 0.0 < p < 1.0 for p in args.p) or not args.p:
        raise UsageError("--p values must lie in (0, 1)")
    workers = _workers(args)
    if args.full_grid:
        if args.out_dir is None:
            raise UsageError("--full-grid requires --out-dir")
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        args.H = [3, 5, 10]
        for dist in DIST_NAMES:
            for n in (10, 50, 300):
                for rho in (1.0, 0.9, 0.75, 0.5):
                    stem = f"{dist}_n{n}_rho{rho:g}"
                    _simulate_one(args, dist, n, rho, workers, outdir / f"{stem}.csv", outdir / f"{stem}.svg")
        return 0
    if args.n is None:
        raise UsageError("--n is required")
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    _simulate_one(args, args.dist, args.n, args.rho, workers, args.out, args.svg)
    return 0


# --- empirical ---------------------------------------------------------------------


def cmd_empirical(args) -> int:
    if args.reps < 100:
        raise UsageError("--reps must be >= 100")
    if any(n < 2 for n in args.n) or any(H < 2 for H in args.H):
        raise UsageError("--n values must be >= 2 and --H values >= 2")
    if any(not 0.0 < p < 1.0 for p in args.p):
        raise UsageError("--p values must lie in (0, 1)")
    try:
        pop = load_bodyfat(args.data)
    except (OSError, BodyfatFormatError) as exc:
        raise InputError(str(exc)) from None
    rank_by = [c.value for c in Concomitant] if args.rank_by == ["all"] else args.rank_by
    workers = _workers(args)
    rows = []
    for conc in rank_by:
        for n in args.n:
            for H in args.H:
                for r in table1(pop, n, H, conc, args.p, args.reps, args.seed, args.kernel, workers=workers,
                                bandwidth=_mode(args.bandwidth)):
                    rows.append([r.concomitant, r.n, r.H, r.p, r.mse_srs, r.se_srs, r.mse_jps, r.se_jps, r.re, r.re_se])
    _emit(args, TABLE_COLUMNS, rows, _run_config(args))
    return 0


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jpscdf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jpscdf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="evaluate a CDF estimator on a sample file")
    p.add_argument("--input", required=True, help="CSV with an 'x' column and, for JPS, a 'rank' column")
    p.add_argument("--design", choices=("srs", "jps"), default="srs")
    p.add_argument("--H", type=int)
    p.add_argument("--method", choices=("edf", "kdf"), default="kdf")
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="epanechnikov")
    p.add_argument("--bandwidth", type=_bandwidth_flag, default="auto-pointwise")
    p.add_argument("--support", choices=[s.value for s in Support], default="real")
    p.add_argument("--t", type=_float_list, help="comma-separated evaluation points")
    p.add_argument("--grid", help="evaluation grid start:stop:count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate, threads=None)

    p = sub.add_parser("moments", help="exact post-strata weight moments")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--H", type=_int_list, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments, threads=None)

    p = sub.add_parser("kernels", help="kernel constants")
    p.add_argument("--kind", choices=KERNEL_NAMES + ("all",), default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernels, threads=None)

    p = sub.add_parser("simulate", help="Monte Carlo RE curve on a synthetic parent")
    p.add_argument("--dist", choices=DIST_NAMES, default="normal")
    p.add_argument("--n", type=int)
    p.add_argument("--H", type=_int_list, default=[3])
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="epanechnikov")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=_float_list, help="comma-separated p values (default 0.01..0.99)")
    p.add_argument("--bandwidth", type=_bandwidth_flag, default="auto-pointwise")
    p.add_argument("--coupled", action="store_true", help="reuse the JPS measured values for the SRS arm")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--full-grid", action="store_true", help="all parents x n x rho, H in {3,5,10}")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("empirical", help="RE table on the bodyfat population")
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=_int_list, default=[50])
    p.add_argument("--H", type=_int_list, default=[10])
    p.add_argument("--rank-by", type=lambda s: [v.strip().lower() for v in s.split(",")], default=["bodyfat"])
    p.add_argument("--p", type=_float_list, default=[0.1, 0.25, 0.5, 0.75, 0.9])
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="epanechnikov")
    p.add_argument("--bandwidth", type=_bandwidth_flag, default="auto-pointwise")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_empirical)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "empirical":
        bad = [c for c in args.rank_by if c not in {m.value for m in Concomitant} | {"all"}]
        if bad:
            parser.error(f"unknown --rank-by value(s): {', '.join(bad)}")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"jpscdf: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, ValueError) as exc:
        print(f"jpscdf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
