"""Command-line interface.

Subcommands: ``simulate`` (Monte Carlo sweep), ``analyze`` (closed-form
metrics and PAPR), ``reproduce`` (figure recipes), ``bench`` (kernel
benchmark).  Every flag can also be given in a ``key = value`` config file
passed with ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import analysis
from .channel import make_pdp, subblock_channel_covariance
from .codebook import ConfigurationError, FrameConfig
from .detectors import DETECTORS
from .harness import (
    FIGURES,
    ExperimentSpec,
    parse_config_file,
    reproduce_figure,
    run_sweep,
    sweep_to_csv,
    write_csv,
)
from .kernels import backend_name
from .modem import SCHEMES, ConstellationAlphabet, scheme_codebook

_MOD_ORDERS = {"bpsk": 2, "qpsk": 4}


def _add_common(p):
    p.add_argument("--config", help="key = value file mirroring these flags")
    p.add_argument("--out", default="out", help="output directory for CSV files")
    p.add_argument("--seed", type=int, default=0)


def _add_grid(p):
    p.add_argument("--snr-start", type=float, default=0.0)
    p.add_argument("--snr-stop", type=float, default=40.0)
    p.add_argument("--snr-step", type=float, default=5.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hnimsim",
        description="Link-level simulator for OFDM with hybrid number and index modulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo BER/BLER/throughput sweep")
    sim.add_argument("--scheme", choices=SCHEMES, default="hnim")
    sim.add_argument("--detector", choices=DETECTORS, default="ml")
    sim.add_argument("--mod", choices=sorted(_MOD_ORDERS), default="bpsk")
    _add_grid(sim)
    sim.add_argument("--n-fft", type=int, default=64)
    sim.add_argument("--n-cp", type=int, default=16)
    sim.add_argument("--subblock-len", type=int, default=4)
    sim.add_argument("--taps", type=int, default=10)
    sim.add_argument("--profile", choices=("uniform", "exponential"), default="uniform")
    sim.add_argument("--decay", type=float, default=1.0)
    sim.add_argument("--min-errors", type=int, default=200)
    sim.add_argument("--max-bits", type=int, default=10_000_000)
    sim.add_argument("--workers", type=int, default=1)
    _add_common(sim)

    ana = sub.add_parser("analyze", help="closed-form metrics and distributions")
    ana.add_argument("--metric", choices=("se", "rate", "abep", "ee", "papr"), required=True)
    ana.add_argument("--scheme", choices=SCHEMES, default="hnim")
    ana.add_argument("--mod", choices=sorted(_MOD_ORDERS), default="bpsk")
    _add_grid(ana)
    ana.add_argument("--taps", type=int, default=10)
    ana.add_argument("--blocks", type=int, default=10_000, help="PAPR block count")
    ana.add_argument("--oversample", type=int, default=4)
    ana.add_argument("--draws", type=int, default=10_000, help="channel draws for the empirical bound")
    _add_common(ana)

    rep = sub.add_parser("reproduce", help="run a documented figure recipe")
    rep.add_argument("--figure", choices=FIGURES, required=True)
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--min-errors", type=int, default=200)
    rep.add_argument("--max-bits", type=int, default=2_000_000)
    _add_common(rep)

    ben = sub.add_parser("bench", help="compare compiled and fallback kernels")
    ben.add_argument("--subblocks", type=int, default=200_000)
    ben.add_argument("--repeats", type=int, default=3)
    return parser


def _apply_config(args: argparse.Namespace, argv) -> argparse.Namespace:
    """Fill flags from the config file wherever the command line kept defaults."""
    if not getattr(args, "config", None):
        return args
    overrides = parse_config_file(args.config)
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv if a.startswith("--")}
    for key, value in overrides.items():
        if key in ("command", "config") or key in explicit:
            continue
        if not hasattr(args, key):
            raise ConfigurationError(f"config key {key!r} does not match any flag")
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, key, int(value))
        elif isinstance(current, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)
    return args


def _grid(args) -> tuple:
    n = int(math.floor((args.snr_stop - args.snr_start) / args.snr_step + 0.5)) + 1
    return tuple(args.snr_start + i * args.snr_step for i in range(n))


def _cmd_simulate(args) -> int:
    config = FrameConfig(
        n_fft=args.n_fft, n_cp=args.n_cp, subblock_len=args.subblock_len,
        mod_order=_MOD_ORDERS[args.mod],
    )
    spec = ExperimentSpec(
        scheme=args.scheme, detector=args.detector, config=config,
        n_taps=args.taps, profile=args.profile, decay=args.decay,
        snr_db=_grid(args), min_errors=args.min_errors, max_bits=args.max_bits,
        seed=args.seed,
    )
    sweep = run_sweep(spec, workers=args.workers)
    for metric in ("ber", "bler", "throughput"):
        print("wrote", sweep_to_csv(sweep, metric, args.out))
    ops = sweep.ops
    print(f"detector {args.detector}: {ops.metrics_per_subblock} metric scans/subblock, "
          f"{ops.mults_per_bit:.1f} complex mults/bit, {ops.asymptotic}")
    return 0


def _cmd_analyze(args) -> int:
    mod = _MOD_ORDERS[args.mod]
    config = FrameConfig(n_fft=64, n_cp=analysis.N_CP_SE, subblock_len=4, mod_order=mod)
    out = args.out
    if args.metric == "se":
        rows = [
            (i + 1, analysis.scheme_spectral_efficiency(s, config), 0.0)
            for i, s in enumerate(SCHEMES)
        ]
        path = write_csv(os.path.join(out, "se.csv"), "se", rows, ",".join(SCHEMES))
        for (i, v, _), s in zip(rows, SCHEMES):
            print(f"{s}: {v:.4f} b/s/Hz")
        print("wrote", path)
        return 0
    if args.metric == "rate":
        cb = scheme_codebook(args.scheme, config)
        alphabet = ConstellationAlphabet.for_order(mod)
        k_l = subblock_channel_covariance(make_pdp(args.taps), config)
        grid = _grid(args)
        rate = analysis.achievable_rate(config, cb, alphabet, k_l, grid)
        rows = [(s, r, 0.0) for s, r in zip(grid, rate)]
        print("wrote", write_csv(os.path.join(out, f"rate_{args.scheme}.csv"),
                                 "rate", rows, args.scheme, seed=args.seed))
        return 0
    if args.metric == "abep":
        cb = scheme_codebook("hnim", config)
        alphabet = ConstellationAlphabet.for_order(mod)
        grid = _grid(args)
        bound = analysis.abep_upper_bound(
            cb, alphabet, config, grid, make_pdp(args.taps),
            n_channel_draws=args.draws, rng=np.random.default_rng(args.seed),
        )
        rows = [(s, c, e) for s, c, e in zip(grid, bound.closed, bound.empirical)]
        path = write_csv(os.path.join(out, "abep_bound.csv"), "abep_bound", rows,
                         "hnim", seed=args.seed)
        print("# columns: snr_db, closed_form, channel_average")
        print("wrote", path)
        return 0
    if args.metric == "ee":
        rows = analysis.ee_ratios(config)
        path = os.path.join(out, "ee.csv")
        os.makedirs(out, exist_ok=True)
        with open(path, "w", encoding="ascii") as fh:
            fh.write("# metric=ee scheme=s1..s5 detector=- seed=-\n")
            fh.write("scheme,se_r,esf,ee_r\n")
            for r in rows:
                ee = "inf" if r.unbounded else f"{r.ee_r:.10g}"
                fh.write(f"{r.scheme},{r.se_r:.10g},{r.esf:.10g},{ee}\n")
                print(f"{r.scheme}: SE_r={r.se_r:.4f} ESF={r.esf:.3g} EE_r={ee}")
        print("wrote", path)
        return 0
    if args.metric == "papr":
        rng = np.random.default_rng(args.seed)
        res = analysis.papr_ccdf(args.scheme, config, args.blocks, args.oversample, rng)
        rows = list(zip(res.thresholds_db, res.ccdf, np.zeros(len(res.ccdf))))
        path = write_csv(os.path.join(out, f"papr_{args.scheme}.csv"), "papr_ccdf",
                         rows, args.scheme, seed=args.seed)
        print(f"PAPR at CCDF 1e-2: {res.threshold_at(1e-2):.2f} dB "
              f"({res.n_zero_blocks} all-zero blocks excluded)")
        print("wrote", path)
        return 0
    raise ConfigurationError(f"unknown metric {args.metric!r}")


def _cmd_reproduce(args) -> int:
    paths = reproduce_figure(
        args.figure, args.out, seed=args.seed, workers=args.workers,
        min_errors=args.min_errors, max_bits=args.max_bits,
    )
    for p in paths:
        print("wrote", p)
    return 0


def _cmd_bench(args) -> int:
    from .bench import format_report, run_benchmark

    print(f"active backend: {backend_name()}")
    print(format_report(run_benchmark(args.subblocks, args.repeats)))
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "reproduce": _cmd_reproduce,
        "bench": _cmd_bench,
    }
    try:
        args = _apply_config(args, argv)
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
