"""Command-line entry point: ``elaa-detect {run,concentration,flops,ber}``."""

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import (BENCHMARKS, _write_csv, ber_sweep, load_config, run_experiment,
                      gram_concentration, verify_flops)


def _global_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out-dir", help="override the output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a dotted config key (repeatable), e.g. solver.tol=1e-6")
    p.add_argument("--workers", type=int, help="threads used to run trials")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="elaa-detect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    hint = f"JSON config path or benchmark name ({', '.join(BENCHMARKS)})"
    for name, aliases, help_ in (
            ("run", [], "convergence experiment"),
            ("concentration", ["theorem1"], "Gram-matrix concentration check"),
            ("ber", [], "BER sweep over an SNR grid")):
        p = sub.add_parser(name, aliases=aliases, parents=[common], help=help_)
        p.add_argument("config", help=hint)
    p = sub.add_parser("flops", parents=[common], help="verify per-iteration MAC counts")
    p.add_argument("--n", default="4,8,32", help="comma-separated user-antenna counts")
    p.add_argument("--iterations", type=int, default=3)
    return parser


def _config(args):
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out_dir is not None:
        overrides.append(f'output_dir="{args.out_dir}"')
    return load_config(args.config, overrides)


def _cmd_run(args):
    cfg = _config(args)
    summary = run_experiment(cfg, workers=args.workers)
    print(f"{'method':<8} {'median':>7} {'q1':>6} {'q3':>6} {'conv':>5} {'div':>4}")
    for name, st in summary.methods.items():
        fmt = lambda v: "inf" if v is None else f"{v:g}"  # noqa: E731
        print(f"{name:<8} {fmt(st['iterations_median']):>7} {fmt(st['iterations_q1']):>6} "
              f"{fmt(st['iterations_q3']):>6} {st['converged']:>5} {st['diverged']:>4}")
    for f in summary.failures:
        print(f"trial {f['trial']} failed: {f['error']}", file=sys.stderr)
    print(f"wrote {len(summary.output_files)} files to {cfg.output_dir}")
    return 0


def _cmd_concentration(args):
    cfg = _config(args)
    report = gram_concentration(cfg)
    print(f"kappa={report.kappa:g} N={report.n} trials={report.trials}")
    print(f"{'M':>6} {'mean_dev':>12} {'std_dev':>12}")
    for M, mean, std in report.rows():
        print(f"{M:>6} {mean:>12.6g} {std:>12.6g}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "concentration.csv", ("M", "mean_deviation", "std_deviation"),
               [(M, repr(m), repr(s)) for M, m, s in report.rows()])
    if not report.decreasing:
        for (m1, d1), (m2, d2) in report.violations:
            print(f"FAIL: deviation does not decrease from M={m1} ({d1:.6g}) "
                  f"to M={m2} ({d2:.6g})", file=sys.stderr)
        return 1
    print("PASS: deviation strictly decreasing in M")
    return 0


def _cmd_flops(args):
    try:
        n_grid = [int(v) for v in args.n.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("--n", f"expected comma-separated integers, got {args.n!r}") from None
    checks = verify_flops(n_grid, args.iterations, seed=args.seed or 0)
    bad = [c for c in checks if not c.ok]
    for c in checks:
        flag = "ok" if c.ok else "MISMATCH"
        print(f"{c.method.value:<8} N={c.n:<4} expected={c.expected:<8} "
              f"measured={c.measured:<8} {flag}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "flops.csv", ("method", "n", "iterations", "expected", "measured"),
                   [(c.method.value, c.n, c.iterations, c.expected, c.measured)
                    for c in checks])
    for c in bad:
        print(f"FAIL: {c.method.value} N={c.n} expected {c.expected} measured {c.measured}",
              file=sys.stderr)
    return 1 if bad else 0


def _cmd_ber(args):
    cfg = _config(args)
    rows, per_trial = ber_sweep(cfg, workers=args.workers)
    print(f"{'method':<8} {'snr_db':>6} {'mean_ber':>10} {'median_ber':>10} {'unconv':>6}")
    for method, snr, mean, med, _, flags in rows:
        print(f"{method:<8} {float(snr):>6g} {float(mean):>10.4g} {float(med):>10.4g} {flags:>6}")
    for t in per_trial:
        if t.error:
            print(f"trial {t.trial} failed: {t.error}", file=sys.stderr)
    print(f"wrote {Path(cfg.output_dir) / 'ber.csv'}")
    return 0


COMMANDS = {"run": _cmd_run, "concentration": _cmd_concentration, "theorem1": _cmd_concentration,
            "flops": _cmd_flops, "ber": _cmd_ber}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
