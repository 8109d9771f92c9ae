"""Command-line interface: generate, measure, estimate, periodogram, lab, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import DegenerateDesign, NoSignificantPeriod, box_count_dimension, detrend, estimate_m, estimate_period, periodogram
from .estimators.spectral import SIGNIFICANCE
from .ifs import PRESETS, NodeBudgetExceeded, classify_arithmeticity, preset, rasterize, read_ifs, similarity_dimension
from .image import ImageFormatError, pad_image, read_image, write_image
from .lab import Iid, parse_error_model, simulate_lre, simulate_normality
from .pipeline import analyze, format_report, sample_step, write_result_csv
from .series import (
    BorderContactWarning,
    Explicit,
    LogArithmetic,
    Power,
    SeriesFormatError,
    build_schedule,
    measure_series,
    parse_schedule,
    read_series_csv,
    to_regression,
    validate_signs,
    write_series_csv,
)

log = logging.getLogger("fraccurv")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _index_set(text):
    try:
        J = tuple(sorted({int(t) for t in text.replace(" ", "").strip("{}").split(",") if t}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid index set {text!r}")
    if not J or any(k not in (0, 1, 2) for k in J):
        raise argparse.ArgumentTypeError("index set must be a non-empty subset of {0,1,2}")
    return J


def _schedule_arg(text):
    try:
        return parse_schedule(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _schedule_from_args(args):
    spec = args.schedule
    if spec is None:
        step = args.step
        a0 = -4.5
        n = int(math.floor(3.5 / step + 1e-9)) + 1
        spec = LogArithmetic(a0, step, n)
    if args.max_radius is not None or args.min_radius_cut is not None:
        sched = build_schedule(spec, min_radius=None)
        keep = np.ones(len(sched), dtype=bool)
        if args.max_radius is not None:
            keep &= sched.radii <= args.max_radius
        if args.min_radius_cut is not None:
            keep &= sched.radii >= args.min_radius_cut
        spec = Explicit(tuple(sched.radii[keep]))
    return build_schedule(spec, min_radius=args.min_radius)


def _add_schedule_flags(p):
    g = p.add_argument_group("radii schedule")
    g.add_argument(
        "--schedule",
        type=_schedule_arg,
        help="log:A0:A:N | power:C:DELTA:N | equal-area:N | explicit:R1,R2,... (default: x from -4.5 to -1 in steps of --step)",
    )
    g.add_argument("--step", type=float, default=0.02, help="log-radius step of the default schedule (default 0.02)")
    g.add_argument("--min-radius", type=float, default=2.0, help="smallest admissible radius in pixels (default 2.0)")
    g.add_argument("--max-radius", type=float, help="drop radii above this value")
    g.add_argument("--min-radius-cut", type=float, help="drop radii below this value")


def _add_fit_flags(p):
    g = p.add_argument_group("estimation")
    g.add_argument("--method", choices=("auto", "lre", "nre"), default="auto", help="estimator (default auto)")
    g.add_argument("--J", dest="J", type=_index_set, help="indices to use, e.g. 0,1,2 (default: all that pass the sign screen)")
    g.add_argument("--m", type=int, default=4, help="number of harmonics for NRE (default 4)")
    g.add_argument("--h0", type=float, help="known period in x units; skips period estimation")
    g.add_argument("--s", type=float, help="known dimension; only curvatures are fitted")
    g.add_argument("--mode", choices=("simultaneous", "separate"), default="simultaneous", help="NRE mode")
    g.add_argument("--period-index", type=_index_set, default=(0,), help="indices whose residuals give the period (default 0)")
    g.add_argument("--pgram-pad", type=int, default=10, help="periodogram zero-padding factor (default 10)")
    g.add_argument("--threshold", type=float, default=SIGNIFICANCE, help="peak/median ratio for a significant period (default 5)")
    g.add_argument("--majority", action="store_true", help="keep the majority sign of mixed-sign indices")


def _system(args):
    if args.config:
        return read_ifs(args.config)
    if args.preset is None:
        raise UsageError("give a preset name or --config")
    try:
        return preset(args.preset)
    except KeyError as exc:
        raise UsageError(exc.args[0])


def _print(msg=""):
    print(msg, flush=True)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args):
    sys_ = _system(args)
    img = rasterize(sys_, args.side, depth=args.depth, margin=args.margin)
    if args.pad:
        img = pad_image(img, args.pad)
    out = args.out or f"{sys_.name}-{args.side}.pbm"
    write_image(img, out, plain=args.plain)
    s = similarity_dimension(sys_)
    cls = classify_arithmeticity(sys_)
    kind = f"arithmetic, h = {cls.h:.6f}" if hasattr(cls, "h") else "non-arithmetic"
    _print(f"wrote {out}: {img.width}x{img.height}, black pixels = {img.count()}")
    _print(f"similarity dimension = {s:.6f} ({s:.3f}); {kind}")
    return EXIT_OK


def _measure(img_path, args):
    img = read_image(img_path)
    sched = _schedule_from_args(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BorderContactWarning)
        series = measure_series(img, sched)
    for w in caught:
        log.warning("%s", w.message)
    checked = validate_signs(series)
    for k in checked.excluded:
        log.warning("index k=%d violates the constant-sign assumption and is excluded", k)
    if checked.dropped:
        log.warning("%d zero samples dropped", len(checked.dropped))
    return img, series


def cmd_measure(args):
    _, series = _measure(args.image, args)
    out = args.out or str(Path(args.image).with_suffix(".series.csv"))
    write_series_csv(series, out)
    _print(f"wrote {out}: {len(series)} radii from {series.eps[0]:.4g} to {series.eps[-1]:.4g}")
    return EXIT_OK


def _estimate(series, args, image=None):
    series = validate_signs(series, majority=args.majority)
    res = analyze(
        series,
        method=args.method,
        J=args.J,
        m=args.m,
        h0=args.h0,
        s=args.s,
        mode=args.mode,
        period_index=args.period_index,
        pad=args.pgram_pad,
        threshold=args.threshold,
    )
    if image is not None:
        res.box_dimension = box_count_dimension(image, args.deltas)
    return res


def cmd_estimate(args):
    series = read_series_csv(args.series)
    image = read_image(args.image) if args.image else None
    res = _estimate(series, args, image)
    text = format_report(res)
    _print(text.rstrip())
    if args.out:
        write_result_csv(res, args.out)
    if args.report:
        Path(args.report).write_text(text)
    return EXIT_OK


def cmd_periodogram(args):
    series = validate_signs(read_series_csv(args.series))
    data = to_regression(series, args.J)
    pg = periodogram(detrend(data), pad_factor=args.pgram_pad, step=sample_step(data.x))
    m_hat = estimate_m(pg)
    m = args.m or m_hat
    try:
        h0, ratio = estimate_period(pg, m, threshold=args.threshold, return_ratio=True)
        _print(f"h0 = {h0:.6f} (peak/median {ratio:.4g}, m = {m}); m_hat = {m_hat}")
    except NoSignificantPeriod as exc:
        _print(f"no significant period: {exc}; m_hat = {m_hat}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "x_frequency", "power"))
            for t, mu, p in zip(pg.freqs, pg.x_frequencies(), pg.power):
                w.writerow(("%.17g" % t, "%.17g" % mu, "%.17g" % p))
        _print(f"wrote {args.out}")
    return EXIT_OK


def cmd_lab(args):
    family = Power(args.c, args.delta) if args.family == "power" else LogArithmetic(args.a0, args.a)
    if args.which == "lre":
        rep = simulate_lre(
            beta=args.beta,
            s=args.s_true,
            family=family,
            error=parse_error_model(args.error),
            n_values=args.n,
            trials=args.trials,
            eps=args.eps,
            seed=args.seed,
        )
        text = rep.to_csv()
        summary = f"exceedance non-increasing in n: {rep.exceedance_monotone}"
    else:
        model = parse_error_model(args.error)
        if not isinstance(model, Iid):
            raise UsageError("the normality study needs an iid error model")
        rep = simulate_normality(
            beta=args.beta,
            s=args.s_true,
            family=family,
            sigma=model.sigma,
            n=args.n[0],
            trials=args.trials,
            t_vector=args.t,
            seed=args.seed,
            innovations=args.innovations,
        )
        text = rep.to_csv()
        summary = f"largest decile gap {rep.max_decile_gap:.4f}, KS p = {rep.ks_pvalue:.4g}"
    if args.out:
        Path(args.out).write_text(text)
        _print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    _print(summary)
    return EXIT_OK


def cmd_report(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.image:
        img_path = args.image
        stem = Path(img_path).stem
    else:
        sys_ = _system(args)
        img = rasterize(sys_, args.side, margin=args.margin)
        img = pad_image(img, args.pad)
        stem = f"{sys_.name}-{args.side}"
        img_path = outdir / f"{stem}.pbm"
        write_image(img, img_path)
        _print(f"generated {img_path}: similarity dimension {similarity_dimension(sys_):.6f}")
    image, series = _measure(img_path, args)
    write_series_csv(series, outdir / f"{stem}.series.csv")
    res = _estimate(series, args, image)
    write_result_csv(res, outdir / f"{stem}.estimate.csv")
    text = format_report(res)
    (outdir / f"{stem}.report.txt").write_text(text)
    _print(text.rstrip())
    _print(f"outputs in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="fraccurv", description="Fractal dimension and curvature estimation from binary images.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="rasterize a preset or configured IFS to PBM")
    g.add_argument("preset", nargs="?", help=f"one of {', '.join(PRESETS)}")
    g.add_argument("side", type=int, help="canvas side in pixels")
    g.add_argument("--config", help="IFS text file: ratio rotation_deg reflect tx ty per line")
    g.add_argument("--out", "-o", help="output PBM path")
    g.add_argument("--margin", type=int, default=0, help="white border inside the canvas")
    g.add_argument("--pad", type=int, default=0, help="white border added around the canvas")
    g.add_argument("--depth", type=int, help="fixed recursion depth (default: sub-pixel copies)")
    g.add_argument("--plain", action="store_true", help="write plain (P1) instead of raw (P4) PBM")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("measure", help="intrinsic volumes of the parallel sets of an image")
    m.add_argument("image", help="PBM image")
    m.add_argument("--out", "-o", help="series CSV (default IMAGE.series.csv)")
    _add_schedule_flags(m)
    m.set_defaults(func=cmd_measure)

    e = sub.add_parser("estimate", help="fit dimension and curvatures to a series CSV")
    e.add_argument("series", help="series CSV from 'measure'")
    e.add_argument("--out", "-o", help="result CSV")
    e.add_argument("--report", help="write the text report here")
    e.add_argument("--image", help="PBM image for a box-counting comparison")
    e.add_argument("--deltas", type=lambda t: [int(v) for v in t.split(",")], default=[2, 4, 8, 16, 32, 64, 128])
    _add_fit_flags(e)
    e.set_defaults(func=cmd_estimate)

    q = sub.add_parser("periodogram", help="periodogram of the detrended series")
    q.add_argument("series", help="series CSV")
    q.add_argument("--J", dest="J", type=_index_set, default=(0,), help="indices to combine (default 0)")
    q.add_argument("--pgram-pad", type=int, default=10, help="zero-padding factor (default 10)")
    q.add_argument("--m", type=int, help="harmonics in the period score (default: estimated)")
    q.add_argument("--threshold", type=float, default=SIGNIFICANCE)
    q.add_argument("--out", "-o", help="CSV of t, x_frequency, power")
    q.set_defaults(func=cmd_periodogram)

    lab = sub.add_parser("lab", help="Monte Carlo studies of the linear estimator")
    lab.add_argument("which", choices=("lre", "normality"))
    lab.add_argument("--n", type=lambda t: [int(v) for v in t.split(",")], default=[50, 100, 200, 400], help="sample sizes")
    lab.add_argument("--trials", type=int, default=500)
    lab.add_argument("--error", default="iid:0.1", help="iid:SIGMA | ma:SIGMA[:WINDOW[:RHO]] | cov:PATH")
    lab.add_argument("--family", choices=("power", "log"), default="power")
    lab.add_argument("--c", type=float, default=1.0)
    lab.add_argument("--delta", type=float, default=0.4)
    lab.add_argument("--a0", type=float, default=0.0)
    lab.add_argument("--a", type=float, default=0.02)
    lab.add_argument("--beta", type=lambda t: [float(v) for v in t.split(",")], default=[-1.0, 0.5, 2.0])
    lab.add_argument("--s-true", type=float, default=1.5)
    lab.add_argument("--eps", type=lambda t: [float(v) for v in t.split(",")], default=[0.05, 0.1])
    lab.add_argument("--t", type=lambda t: [float(v) for v in t.split(",")], help="contrast vector (normality)")
    lab.add_argument("--innovations", choices=("normal", "t3"), default="normal")
    lab.add_argument("--seed", type=int, default=0)
    lab.add_argument("--out", "-o")
    lab.set_defaults(func=cmd_lab)

    r = sub.add_parser("report", help="generate (or read), measure and estimate in one go")
    r.add_argument("preset", nargs="?", help="preset name (omit with --image or --config)")
    r.add_argument("--image", help="existing PBM instead of a preset")
    r.add_argument("--config", help="IFS text file")
    r.add_argument("--side", type=int, default=3000)
    r.add_argument("--margin", type=int, default=37, help="white border inside the canvas")
    r.add_argument("--pad", type=int, default=92, help="white border added so the largest dilation stays inside")
    r.add_argument("--outdir", default="fraccurv-report")
    r.add_argument("--deltas", type=lambda t: [int(v) for v in t.split(",")], default=[2, 4, 8, 16, 32, 64, 128])
    _add_schedule_flags(r)
    _add_fit_flags(r)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fraccurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateDesign, NoSignificantPeriod, FloatingPointError, np.linalg.LinAlgError, NodeBudgetExceeded) as exc:
        print(f"fraccurv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ImageFormatError, SeriesFormatError, OSError, ValueError, KeyError) as exc:
        print(f"fraccurv: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
