"""Command line: ``phasetrng {simulate,condition,analyze,test,pipeline}``.

Exit status: 0 pass, 1 randomness test failure, 2 usage or configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .battery import Criteria, evaluate_pvalues, run_battery
from .conditioning import DEFAULT_LSB
from .errors import ConfigError, TrngError
from .ingest import meta_path, read_bits
from .phase_sim import SimConfig

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _emit(report: dict, path) -> None:
    if path:
        pipeline.write_json(path, report)
    else:
        print(pipeline.to_json(report))


def cmd_simulate(args) -> int:
    config = pipeline.load_config(args.config) if args.config else SimConfig()
    overrides = {k: v for k, v in (("seed", args.seed), ("n_samples", args.n_samples)) if v is not None}
    if overrides:
        try:
            config = config.with_(**overrides)
        except TrngError as exc:
            raise ConfigError(str(exc)) from None
    summary = pipeline.simulate_to_file(config, args.output)
    print(pipeline.format_config(config), end="")
    print(f"coherence_time = {summary['coherence_time_ns']:.4f} ns")
    print(f"delay_steps = {summary['delay_steps']} (internal step {summary['internal_step_ns']:.4g} ns)")
    print(f"wrote {summary['n_samples']} samples to {args.output}")
    return EXIT_OK


def cmd_condition(args) -> int:
    summary = pipeline.condition_file(args.input, args.output, args.lsb, args.xor)
    rate = pipeline.throughput(summary["bytes_in"], summary["seconds"])
    print(
        f"{summary['bytes_in']} bytes in -> {summary['bytes_out']} bytes out "
        f"(xor={'on' if args.xor else 'off'}, lsb={args.lsb}); "
        f"conditioning rate {rate['conditioning_MBps']:.1f} MB/s"
    )
    return EXIT_OK


def _load_for_analysis(path, kind: str):
    if kind == "auto":
        kind = "bits" if meta_path(path).exists() else "samples"
    if kind == "bits":
        stream = read_bits(path)
        return stream.packed, False, stream.length_bits
    data = np.fromfile(path, dtype=np.uint8)
    if data.size == 0:
        raise TrngError(f"{path}: empty input")
    return data, True, None


def cmd_analyze(args) -> int:
    data, signed, length_bits = _load_for_analysis(args.input, args.kind)
    if args.plot_dir:
        Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
    section = pipeline.analyze(
        data,
        signed,
        entropy=args.entropy or not (args.autocorr or args.psd or args.block_entropy),
        autocorr_lag=args.autocorr,
        psd_segment=args.psd,
        block_entropy_max=args.block_entropy,
        length_bits=length_bits,
        window=args.window,
        sample_rate_hz=args.sample_rate,
        plot_dir=args.plot_dir,
    )
    report = {"schema_version": pipeline.REPORT_SCHEMA_VERSION, "command": "analyze", "input": str(args.input), **section}
    _emit(report, args.report)
    return EXIT_OK


def _criteria(args) -> Criteria:
    try:
        if args.mode == "multi":
            band = tuple(args.band) if args.band else None
            return Criteria(alpha=args.alpha, proportion_band=band)
        return Criteria(band=tuple(args.band) if args.band else (0.01, 0.99), alpha=args.alpha)
    except TrngError as exc:
        raise ConfigError(str(exc)) from None


def _read_pvalues(path) -> dict:
    named: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            named.setdefault(parts[0], []).extend(float(p) for p in parts[1:])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected 'name p1 [p2 ...]'") from None
    return named


def cmd_test(args) -> int:
    criteria = _criteria(args)
    if args.pvalues:
        report = evaluate_pvalues(_read_pvalues(args.pvalues), criteria)
    else:
        if not args.input:
            raise ConfigError("an input bitstream (or --pvalues) is required")
        stream = read_bits(args.input)
        report = run_battery(stream, mode=args.mode, criteria=criteria, k=args.k, L=args.L, tests=args.tests)
    print(report.to_table())
    if args.report:
        pipeline.write_json(args.report, report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_pipeline(args) -> int:
    config = pipeline.load_config(args.config) if args.config else SimConfig()
    if args.seed is not None or args.n_samples is not None:
        changes = {k: v for k, v in (("seed", args.seed), ("n_samples", args.n_samples)) if v is not None}
        try:
            config = config.with_(**changes)
        except TrngError as exc:
            raise ConfigError(str(exc)) from None
    criteria = _criteria(args)
    report = pipeline.run_pipeline(
        config,
        args.out_dir,
        m=args.lsb,
        xor=args.xor,
        autocorr_lag=args.autocorr,
        psd_segment=args.psd,
        block_entropy_max=args.block_entropy,
        mode=args.mode,
        k=args.k,
        L=args.L,
        criteria=criteria,
    )
    pre, post = report["entropy_comparison"]["pre"], report["entropy_comparison"]["post"]
    print(f"coherence time       : {report['simulate']['coherence_time_ns']:.4f} ns")
    print(f"{'':21}  {'pre-extraction':>16}{'post-extraction':>17}")
    for label, key in (("Shannon (bits/Byte)", "shannon_bits_per_byte"), ("min-entropy", "min_entropy_bits_per_byte")):
        print(f"{label:<21}: {pre[key]:>16.5f}{post[key]:>17.5f}")
    print(f"Gaussian-fit sigma   : {pre['gaussian_fit_sigma']:>16.3f}")
    print(f"Gaussian-fit entropy : {pre['gaussian_fit_entropy']:>16.5f}")
    tp = report["throughput"]
    print(
        f"throughput           : {tp['conditioning_MBps']:.1f} MB/s conditioning, "
        f"{tp['output_Mbps']:.0f} Mbit/s out (target {tp['target_MBps']} MB/s): "
        f"{'OK' if tp['meets_target'] else 'BELOW TARGET'}"
    )
    print(f"battery ({report['battery']['mode']}) : {'PASS' if report['pass'] else 'FAIL'}")
    if report["battery"]["failing"]:
        print("failing: " + ", ".join(report["battery"]["failing"]))
    print(f"report written to {Path(args.out_dir) / 'report.json'}")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _add_battery_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("single", "multi"), default="single")
    p.add_argument("--k", type=int, help="number of sequences (multi mode)")
    p.add_argument("--L", type=int, help="bits per sequence (multi mode)")
    p.add_argument(
        "--band", type=float, nargs=2, metavar=("LO", "HI"),
        help="single mode: open P-value band (default 0.01 0.99); "
        "multi mode: pass-proportion band (default 3-sigma binomial band)",
    )
    p.add_argument("--alpha", type=float, default=0.01, help="per-sequence significance level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasetrng", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate ADC samples of the phase-noise source")
    p.add_argument("config", nargs="?", help="key = value config file (defaults: reference setup)")
    p.add_argument("output", help="headerless signed 8-bit sample file to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-samples", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("condition", help="XOR + m-LSB extraction + repacking")
    p.add_argument("input", help="sample file")
    p.add_argument("output", help="bitstream file (a .meta sidecar is written next to it)")
    p.add_argument("--xor", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lsb", type=int, default=DEFAULT_LSB, metavar="M")
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("analyze", help="entropy, autocorrelation, PSD and block-entropy analyses")
    p.add_argument("input")
    p.add_argument("--kind", choices=("auto", "samples", "bits"), default="auto")
    p.add_argument("--entropy", action="store_true")
    p.add_argument("--autocorr", type=int, metavar="MAX_LAG")
    p.add_argument("--psd", type=int, metavar="SEGMENT")
    p.add_argument("--block-entropy", type=int, metavar="M_MAX")
    p.add_argument("--window", type=int, default=pipeline.DEFAULT_ANALYSIS_WINDOW,
                   help="values used by the FFT-based analyses")
    p.add_argument("--sample-rate", type=float, default=100e6, help="Hz, for time/frequency axes")
    p.add_argument("--plot-dir", help="write two-column plot data files here")
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("test", help="run the randomness battery")
    p.add_argument("input", nargs="?", help="bitstream file")
    _add_battery_flags(p)
    p.add_argument("--tests", nargs="+", help="subset of tests to run")
    p.add_argument("--pvalues", help="judge external P-values ('name p1 p2 ...' per line)")
    p.add_argument("--report", help="JSON report path")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("pipeline", help="simulate -> condition -> analyze -> test")
    p.add_argument("config", nargs="?")
    p.add_argument("--out-dir", default="phasetrng-run")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-samples", type=int)
    p.add_argument("--xor", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--lsb", type=int, default=DEFAULT_LSB, metavar="M")
    p.add_argument("--autocorr", type=int, default=100, metavar="MAX_LAG")
    p.add_argument("--psd", type=int, default=1024, metavar="SEGMENT")
    p.add_argument("--block-entropy", type=int, default=16, metavar="M_MAX")
    _add_battery_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"phasetrng: {exc}", file=sys.stderr)
        return EXIT_IO
    except TrngError as exc:
        print(f"phasetrng: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
