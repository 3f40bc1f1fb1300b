"""Reproducible Monte Carlo sweeps and figure-reproduction recipes.

One trial is one OFDM block.  Every trial draws its randomness from a
generator seeded with ``(master_seed, snr_index, trial_index)``, and trials
are grouped into fixed-size batches whose inclusion is decided by scanning
cumulative tallies in batch order; results are therefore a pure function of
the experiment spec at any worker count.

Per-trial draw order: payload bit pool, channel taps, noise samples.  The
bit pool has a fixed size per block so the consumed-bit count of
variable-length schemes never shifts the stream.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .channel import (
    apply_channel,
    calibrate_noise,
    draw_channel,
    make_pdp,
    subblock_channel_covariance,
)
from .codebook import ConfigurationError, FrameConfig
from .detectors import DETECTORS, count_operations, decision_bits, detect_block
from .modem import SCHEMES, ConstellationAlphabet, receive_front_end, scheme_codebook, transmit_block

__all__ = [
    "BATCH_BLOCKS",
    "ExperimentSpec",
    "PointResult",
    "SweepResult",
    "run_sweep",
    "write_csv",
    "reproduce_figure",
    "FIGURES",
    "parse_config_file",
]

BATCH_BLOCKS = 64

# Noise floor handed to the LLR detector when the channel is noise-free
# (the +inf Eb/No sentinel); metric detectors ignore it.
_DETECTION_NOISE_FLOOR = 1e-9


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a sweep depends on, including the master seed."""

    scheme: str = "hnim"
    detector: str = "ml"
    config: FrameConfig = field(default_factory=FrameConfig)
    n_taps: int = 10
    profile: str = "uniform"
    decay: float = 1.0
    snr_db: tuple = tuple(range(0, 41, 5))
    min_errors: int = 200
    max_bits: int = 10_000_000
    seed: int = 0

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.detector not in DETECTORS:
            raise ConfigurationError(f"unknown detector {self.detector!r}")
        if self.min_errors <= 0 or self.max_bits <= 0:
            raise ConfigurationError("stop rule must be positive")
        grid = list(self.snr_db)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("snr grid must be strictly increasing")
        if self.config.n_cp < self.n_taps - 1:
            raise ConfigurationError(
                f"n_cp={self.config.n_cp} cannot absorb {self.n_taps} channel taps"
            )
        make_pdp(self.n_taps, self.profile, self.decay)


@dataclass
class PointResult:
    snr_db: float
    bits_sent: int
    bit_errors: int
    block_errors: int
    subblock_errors: int
    n_blocks: int
    n_subblocks: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else 0.0

    @property
    def bler(self) -> float:
        return self.subblock_errors / self.n_subblocks if self.n_subblocks else 0.0

    @property
    def ci_halfwidth(self) -> float:
        if not self.bits_sent:
            return 0.0
        p = self.ber
        return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / self.bits_sent)


@dataclass
class SweepResult:
    spec: ExperimentSpec
    se: float
    points: list
    ops: "object" = None  # ComplexityReport for the spec's detector

    def throughput(self, point: PointResult) -> float:
        return self.se * (1.0 - point.ber)

    def detector_ops(self, point: PointResult) -> int:
        """Metric evaluations spent on one SNR point."""
        return point.n_subblocks * self.ops.metrics_per_subblock

    def rows(self, metric: str):
        """(x, value, ci_halfwidth) triples for one metric."""
        out = []
        for p in self.points:
            if metric == "ber":
                out.append((p.snr_db, p.ber, p.ci_halfwidth))
            elif metric == "bler":
                ci = 1.96 * math.sqrt(max(p.bler * (1 - p.bler), 0.0) / max(p.n_subblocks, 1))
                out.append((p.snr_db, p.bler, ci))
            elif metric == "throughput":
                out.append((p.snr_db, self.throughput(p), self.se * p.ci_halfwidth))
            else:
                raise ConfigurationError(f"unknown sweep metric {metric!r}")
        return out


class _SchemeTools:
    """Per-scheme immutable helpers shared across batches in one process."""

    def __init__(self, spec: ExperimentSpec):
        cfg = spec.config
        self.codebook = scheme_codebook(spec.scheme, cfg)
        self.alphabet = ConstellationAlphabet.for_order(cfg.mod_order)
        self.subblock_power = float(cfg.subblock_len)
        self.pdp = make_pdp(spec.n_taps, spec.profile, spec.decay)
        self.se = analysis.scheme_spectral_efficiency(spec.scheme, cfg)
        k = cfg.bits_per_symbol
        pattern_bits = self.codebook.p1 + self.codebook.p2
        self.pool_bits = cfg.n_subblocks * (pattern_bits + cfg.subblock_len * k)


_TOOLS_CACHE: dict = {}


def _tools(spec: ExperimentSpec) -> _SchemeTools:
    key = (spec.scheme, spec.config, spec.n_taps, spec.profile, spec.decay)
    if key not in _TOOLS_CACHE:
        _TOOLS_CACHE[key] = _SchemeTools(spec)
    return _TOOLS_CACHE[key]


def _subblock_bit_errors(tx_bits: np.ndarray, rx_bits: np.ndarray) -> int:
    """Mismatches over the common prefix plus transmitted bits not delivered."""
    n = min(len(tx_bits), len(rx_bits))
    errs = int(np.count_nonzero(tx_bits[:n] != rx_bits[:n]))
    return errs + max(0, len(tx_bits) - n)


def _run_batch(spec: ExperimentSpec, snr_idx: int, first_trial: int, n_trials: int) -> PointResult:
    """Simulate one batch of blocks; pure function of its arguments."""
    tools = _tools(spec)
    cfg = spec.config
    snr = spec.snr_db[snr_idx]
    noise = calibrate_noise(tools.se, snr)
    det_noise = noise.variance_freq if noise.variance_freq > 0 else (
        _DETECTION_NOISE_FLOOR * tools.subblock_power
    )
    G = cfg.n_subblocks
    L = cfg.subblock_len

    tally = PointResult(snr, 0, 0, 0, 0, 0, 0)
    y_rows = np.empty((n_trials * G, L), dtype=np.complex128)
    h_rows = np.empty((n_trials * G, L), dtype=np.complex128)
    truth_entries = np.empty(n_trials * G, dtype=np.int64)
    tx_bits_all = []

    for t in range(n_trials):
        rng = np.random.default_rng([spec.seed, snr_idx, first_trial + t])
        bits = rng.integers(0, 2, size=tools.pool_bits)
        block = transmit_block(
            bits, cfg, spec.scheme, tools.alphabet,
            codebook=tools.codebook, subblock_power=tools.subblock_power,
        )
        channel = draw_channel(spec.n_taps, tools.pdp, rng, cfg.n_fft)
        y_time = apply_channel(block.time, channel, noise, rng, n_cp=cfg.n_cp)
        y_f, _ = receive_front_end(y_time, channel, cfg)
        sl = slice(t * G, (t + 1) * G)
        y_rows[sl] = y_f.reshape(G, L)
        h_rows[sl] = channel.freq_response.reshape(G, L)
        truth_entries[sl] = block.entry_idx
        tx_bits_all.extend(block.subblock_bits)
        tally.bits_sent += block.consumed_bits

    entry_hat, sym_hat = detect_block(
        y_rows, h_rows, tools.codebook, tools.alphabet, spec.detector,
        noise_var=det_noise, subblock_power=tools.subblock_power,
        true_entries=truth_entries,
    )

    for t in range(n_trials):
        block_errs = 0
        for g in range(G):
            i = t * G + g
            rx = decision_bits(tools.codebook, tools.alphabet, int(entry_hat[i]), sym_hat[i])
            errs = _subblock_bit_errors(tx_bits_all[i], rx)
            if errs:
                tally.bit_errors += errs
                tally.subblock_errors += 1
                block_errs += errs
        if block_errs:
            tally.block_errors += 1
    tally.n_blocks = n_trials
    tally.n_subblocks = n_trials * G
    return tally


def _merge(total: PointResult, part: PointResult) -> None:
    total.bits_sent += part.bits_sent
    total.bit_errors += part.bit_errors
    total.block_errors += part.block_errors
    total.subblock_errors += part.subblock_errors
    total.n_blocks += part.n_blocks
    total.n_subblocks += part.n_subblocks


def _run_point(spec: ExperimentSpec, snr_idx: int, workers: int, pool) -> PointResult:
    total = PointResult(spec.snr_db[snr_idx], 0, 0, 0, 0, 0, 0)

    def done() -> bool:
        return total.bit_errors >= spec.min_errors or total.bits_sent >= spec.max_bits

    batch = 0
    if workers <= 1 or pool is None:
        while True:
            part = _run_batch(spec, snr_idx, batch * BATCH_BLOCKS, BATCH_BLOCKS)
            _merge(total, part)
            batch += 1
            if done():
                return total
    # Parallel: submit in waves, fold results strictly in batch order so the
    # included set of batches never depends on scheduling.
    pending: dict = {}
    next_submit = 0
    next_fold = 0
    while True:
        while next_submit < next_fold + workers:
            pending[next_submit] = pool.submit(
                _run_batch, spec, snr_idx, next_submit * BATCH_BLOCKS, BATCH_BLOCKS
            )
            next_submit += 1
        part = pending.pop(next_fold).result()
        next_fold += 1
        _merge(total, part)
        if done():
            for fut in pending.values():
                fut.cancel()
            return total


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> SweepResult:
    """Monte Carlo BER/BLER/throughput sweep over the spec's SNR grid.

    Identical spec and seed give bit-identical results at any worker count.
    """
    spec.validate()
    tools = _tools(spec)
    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
        points = [
            _run_point(spec, snr_idx, workers, pool)
            for snr_idx in range(len(spec.snr_db))
        ]
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    ops = count_operations(spec.detector, tools.codebook, tools.alphabet)
    return SweepResult(spec=spec, se=tools.se, points=points, ops=ops)


# -- CSV output ----------------------------------------------------------------


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.10g}"


def write_csv(path, metric: str, rows, scheme: str, detector: str = "-", seed: int | str = "-") -> str:
    """Write ``x,value[,ci]`` rows under the documented comment header."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# metric={metric} scheme={scheme} detector={detector} seed={seed}\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def sweep_to_csv(sweep: SweepResult, metric: str, out_dir, name: str | None = None) -> str:
    spec = sweep.spec
    name = name or f"{metric}_{spec.scheme}_{spec.detector}.csv"
    return write_csv(
        os.path.join(os.fspath(out_dir), name),
        metric, sweep.rows(metric), spec.scheme, spec.detector, spec.seed,
    )


# -- figure recipes ------------------------------------------------------------

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

_THROUGHPUT_GRID = tuple(range(0, 41, 5))
_RATE_GRID = tuple(range(-30, 51, 5))


def _sim_config(mod_order: int) -> FrameConfig:
    return FrameConfig(n_fft=64, n_cp=16, subblock_len=4, mod_order=mod_order)


def _throughput_figure(out_dir, mod_order, seed, workers, min_errors, max_bits):
    paths = []
    for scheme in SCHEMES:
        spec = ExperimentSpec(
            scheme=scheme, detector="ml", config=_sim_config(mod_order),
            snr_db=_THROUGHPUT_GRID, min_errors=min_errors, max_bits=max_bits, seed=seed,
        )
        sweep = run_sweep(spec, workers=workers)
        paths.append(sweep_to_csv(sweep, "throughput", out_dir))
    return paths


def reproduce_figure(
    figure: str,
    out_dir,
    seed: int = 1234,
    workers: int = 1,
    min_errors: int = 200,
    max_bits: int = 2_000_000,
    papr_blocks: int = 10_000,
    abep_draws: int = 10_000,
) -> list:
    """Run the documented recipe for one figure and write one CSV per curve.

    fig1: achievable-rate curves (BPSK and QPSK hybrid).
    fig2: average rate versus modulation order at subblock length 8.
    fig3: spectral- and energy-efficiency ratio bars s1..s5.
    fig4/fig5: simulated throughput under BPSK / QPSK.
    fig6: simulated BER for all detectors and baselines plus the union bound.
    fig7: PAPR CCDF for all schemes.
    """
    out_dir = os.fspath(out_dir)
    if figure == "fig1":
        paths = []
        for mod in (2, 4):
            cfg = FrameConfig(n_fft=64, n_cp=analysis.N_CP_SE, subblock_len=4, mod_order=mod)
            cb = scheme_codebook("hnim", cfg)
            alphabet = ConstellationAlphabet.for_order(mod)
            k_l = subblock_channel_covariance(make_pdp(10, "uniform"), cfg)
            rate = analysis.achievable_rate(cfg, cb, alphabet, k_l, _RATE_GRID)
            rows = [(s, r, 0.0) for s, r in zip(_RATE_GRID, rate)]
            label = "bpsk" if mod == 2 else "qpsk"
            paths.append(write_csv(
                os.path.join(out_dir, f"fig1_rate_hnim_{label}.csv"),
                "rate", rows, f"hnim_{label}", seed=seed,
            ))
        return paths
    if figure == "fig2":
        orders = (2, 4, 16, 64)
        L, n_fft = 8, 64
        curves = {
            "hnim": [analysis.hybrid_average_rate(L, m, n_fft, analysis.N_CP_SE) for m in orders],
            "snm": [
                (math.log2(L) + (L + 1) / 2 * math.log2(m)) * (n_fft / L) / (n_fft + analysis.N_CP_SE)
                for m in orders
            ],
            "im": [
                (math.floor(math.log2(math.comb(L, L // 2))) + (L // 2) * math.log2(m))
                * (n_fft / L) / (n_fft + analysis.N_CP_SE)
                for m in orders
            ],
            "ofdm": [analysis.ofdm_rate(m, n_fft, analysis.N_CP_SE) for m in orders],
        }
        paths = []
        for scheme, vals in curves.items():
            rows = [(m, v, 0.0) for m, v in zip(orders, vals)]
            paths.append(write_csv(
                os.path.join(out_dir, f"fig2_avg_rate_{scheme}.csv"),
                "avg_rate_vs_M", rows, scheme, seed=seed,
            ))
        return paths
    if figure == "fig3":
        rows = analysis.ee_ratios(_sim_config(2))
        se_rows = [(i + 1, r.se_r, 0.0) for i, r in enumerate(rows)]
        ee_rows = [(i + 1, r.ee_r, 0.0) for i, r in enumerate(rows)]
        return [
            write_csv(os.path.join(out_dir, "fig3_se_ratio.csv"), "se_r", se_rows,
                      "s1..s5", seed=seed),
            write_csv(os.path.join(out_dir, "fig3_ee_ratio.csv"), "ee_r", ee_rows,
                      "s1..s5", seed=seed),
        ]
    if figure == "fig4":
        return _throughput_figure(out_dir, 2, seed, workers, min_errors, max_bits)
    if figure == "fig5":
        return _throughput_figure(out_dir, 4, seed, workers, min_errors, max_bits)
    if figure == "fig6":
        paths = []
        cfg = _sim_config(2)
        for scheme, detectors in (
            ("hnim", ("ml", "isape", "psape", "llr")),
            ("im", ("ml",)), ("snm", ("ml",)), ("ofdm", ("ml",)),
        ):
            for det in detectors:
                spec = ExperimentSpec(
                    scheme=scheme, detector=det, config=cfg,
                    snr_db=_THROUGHPUT_GRID, min_errors=min_errors,
                    max_bits=max_bits, seed=seed,
                )
                sweep = run_sweep(spec, workers=workers)
                paths.append(sweep_to_csv(sweep, "ber", out_dir))
        cb = scheme_codebook("hnim", cfg)
        alphabet = ConstellationAlphabet.bpsk()
        bound = analysis.abep_upper_bound(
            cb, alphabet, cfg, _THROUGHPUT_GRID, make_pdp(10, "uniform"),
            n_channel_draws=abep_draws, rng=np.random.default_rng(seed),
        )
        rows = [(s, b, 0.0) for s, b in zip(bound.ebn0_db, bound.closed)]
        paths.append(write_csv(
            os.path.join(out_dir, "abep_bound.csv"), "abep_bound", rows, "hnim", seed=seed,
        ))
        return paths
    if figure == "fig7":
        paths = []
        for i, scheme in enumerate(SCHEMES):
            rng = np.random.default_rng([seed, i])
            res = analysis.papr_ccdf(scheme, _sim_config(2), papr_blocks, 4, rng)
            rows = list(zip(res.thresholds_db, res.ccdf, np.zeros(len(res.ccdf))))
            paths.append(write_csv(
                os.path.join(out_dir, f"fig7_papr_{scheme}.csv"),
                "papr_ccdf", rows, scheme, seed=seed,
            ))
        return paths
    raise ConfigurationError(f"unknown figure {figure!r}; choose from {FIGURES}")


# -- config files --------------------------------------------------------------


# dotted channel keys accepted as spellings of the matching flags
_CONFIG_KEY_ALIASES = {
    "channel.taps": "taps",
    "channel.profile": "profile",
    "channel.decay": "decay",
}


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines; keys mirror the CLI flag names.

    ``#`` starts a comment; dashes and underscores in keys are equivalent,
    and the channel parameters may also be spelled ``channel.taps``,
    ``channel.profile``, and ``channel.decay``.
    """
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            key = _CONFIG_KEY_ALIASES.get(key, key).replace("-", "_")
            out[key] = value.strip()
    return out
