"""Benchmark the compiled detection kernels against the numpy fallback."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .codebook import build_table1_codebook
from .kernels import available_backends
from .modem import ConstellationAlphabet


@dataclass(frozen=True)
class BenchRow:
    kernel: str
    backend: str
    subblocks: int
    seconds: float

    @property
    def us_per_subblock(self) -> float:
        return 1e6 * self.seconds / self.subblocks


def _workload(n_subblocks: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    cb = build_table1_codebook()
    alpha = ConstellationAlphabet.bpsk()
    L = cb.subblock_len
    y = rng.standard_normal((n_subblocks, L)) + 1j * rng.standard_normal((n_subblocks, L))
    h = rng.standard_normal((n_subblocks, L)) + 1j * rng.standard_normal((n_subblocks, L))
    scales = cb.amplitude_scales(float(L))
    entries = rng.integers(0, len(cb), size=n_subblocks).astype(np.int64)
    return y, h, cb.sap_matrix, scales, alpha.points, entries


def run_benchmark(n_subblocks: int = 200_000, repeats: int = 3) -> list[BenchRow]:
    """Time each kernel on every importable backend; best of ``repeats``."""
    y, h, saps, scales, points, entries = _workload(n_subblocks)
    rows = []
    for name, impl in available_backends().items():
        cases = {
            "decoupled_ml": lambda: impl.decoupled_ml_batch(y, h, saps, scales, points),
            "llr": lambda: impl.llr_batch(y, h, saps, scales, points, 0.1),
            "psape": lambda: impl.psape_batch(y, h, entries, saps, scales, points),
        }
        for kernel, fn in cases.items():
            best = min(_timed(fn) for _ in range(repeats))
            rows.append(BenchRow(kernel, name, n_subblocks, best))
    return rows


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def format_report(rows: list[BenchRow]) -> str:
    lines = [f"{'kernel':<14}{'backend':<10}{'us/subblock':>12}{'speedup':>9}"]
    base = {r.kernel: r.us_per_subblock for r in rows if r.backend == "fallback"}
    for r in rows:
        speed = base.get(r.kernel, float("nan")) / r.us_per_subblock
        lines.append(f"{r.kernel:<14}{r.backend:<10}{r.us_per_subblock:>12.3f}{speed:>8.1f}x")
    return "\n".join(lines)
