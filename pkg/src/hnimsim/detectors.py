"""Subblock detectors: exhaustive ML, decoupled ML, genie-aided, and LLR.

All detectors operate on the unequalized frequency-domain subblock ``y``
and the channel response ``h`` over the same bins.  Candidate vectors use
the transmitter's sqrt(P_t / I) amplitude; the all-off pattern competes
with the zero vector.

``detect_optimal_ml`` enumerates every (pattern, symbol combination)
candidate and is kept as an independent oracle.  ``detect_decoupled_ml``
scores each pattern from per-bin nearest-point residuals, which minimizes
the same metric exactly; the equivalence is enforced by tests rather than
assumed.  Ties break toward the lowest row index everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import kernels
from .codebook import Codebook, CodebookEntry, ConfigurationError, FrameConfig
from .modem import ConstellationAlphabet

__all__ = [
    "DETECTORS",
    "SubblockDecision",
    "CandidateTable",
    "build_candidate_table",
    "detect_optimal_ml",
    "detect_decoupled_ml",
    "detect_psape",
    "detect_llr",
    "detect_block",
    "count_operations",
    "ComplexityReport",
    "decision_bits",
]

DETECTORS = ("ml", "isape", "psape", "llr")


@dataclass
class SubblockDecision:
    """Detector output for one subblock."""

    entry: CodebookEntry
    symbols: np.ndarray
    bits: np.ndarray
    metric: float
    op_count: int


@dataclass(frozen=True)
class CandidateTable:
    """Exhaustive enumeration of transmit vectors for one codebook."""

    vectors: np.ndarray      # (n_cand, L) complex
    entry_idx: np.ndarray    # (n_cand,)
    sym_idx: np.ndarray      # (n_cand, L), -1 on inactive bins
    subblock_power: float

    @property
    def n_candidates(self) -> int:
        return len(self.vectors)


def build_candidate_table(
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float,
) -> CandidateTable:
    """Enumerate sum-over-entries-of-M**I candidates in row order.

    Symbol combinations iterate lexicographically over constellation
    indices, first active bin slowest, so the first global minimum found by
    a scan matches per-bin first-index tie breaking.
    """
    L = codebook.subblock_len
    M = alphabet.order
    vectors, entries, syms = [], [], []
    for e_i, entry in enumerate(codebook.entries):
        positions = [i for i, c in enumerate(entry.sap) if c]
        if not positions:
            vectors.append(np.zeros(L, dtype=np.complex128))
            entries.append(e_i)
            syms.append(np.full(L, -1, dtype=np.int8))
            continue
        scale = math.sqrt(subblock_power / entry.active_count)
        for combo in product(range(M), repeat=entry.active_count):
            vec = np.zeros(L, dtype=np.complex128)
            row = np.full(L, -1, dtype=np.int8)
            for pos, m in zip(positions, combo):
                vec[pos] = scale * alphabet.points[m]
                row[pos] = m
            vectors.append(vec)
            entries.append(e_i)
            syms.append(row)
    return CandidateTable(
        vectors=np.array(vectors),
        entry_idx=np.array(entries, dtype=np.int64),
        sym_idx=np.array(syms, dtype=np.int8),
        subblock_power=subblock_power,
    )


@lru_cache(maxsize=16)
def _candidates(codebook, alphabet, subblock_power) -> CandidateTable:
    # cached on object identity: codebooks and alphabets are immutable
    return build_candidate_table(codebook, alphabet, float(subblock_power))


def _exhaustive_ml_arrays(y, h, table: CandidateTable):
    """Vectorized scan of all candidates; returns (cand_index, metric)."""
    d = y[:, None, :] - h[:, None, :] * table.vectors[None, :, :]
    metric = (d.real**2 + d.imag**2).sum(axis=2)
    best = metric.argmin(axis=1)
    return best, metric[np.arange(len(y)), best]


def decision_bits(
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    entry_idx: int,
    sym_idx: np.ndarray,
) -> np.ndarray:
    """Recovered (p1, p2, p3) bits for one decided subblock."""
    entry = codebook.entries[entry_idx]
    parts = [np.array(entry.pattern_bits, dtype=np.int8)]
    for pos, active in enumerate(entry.sap):
        if active:
            parts.append(alphabet.bit_table[sym_idx[pos]])
    return np.concatenate(parts) if parts else np.empty(0, np.int8)


def _decision(codebook, alphabet, entry_idx, sym_row, metric, ops) -> SubblockDecision:
    entry = codebook.entries[entry_idx]
    positions = [i for i, c in enumerate(entry.sap) if c]
    symbols = alphabet.points[sym_row[positions]] if positions else np.empty(0, np.complex128)
    return SubblockDecision(
        entry=entry,
        symbols=symbols,
        bits=decision_bits(codebook, alphabet, entry_idx, sym_row),
        metric=float(metric),
        op_count=ops,
    )


def detect_optimal_ml(
    y_sub,
    h_sub,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float | None = None,
) -> SubblockDecision:
    """Joint exhaustive search over every pattern and symbol combination."""
    y = np.atleast_2d(np.asarray(y_sub, dtype=np.complex128))
    h = np.atleast_2d(np.asarray(h_sub, dtype=np.complex128))
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    table = _candidates(codebook, alphabet, subblock_power)
    best, metric = _exhaustive_ml_arrays(y, h, table)
    c = int(best[0])
    return _decision(
        codebook, alphabet, int(table.entry_idx[c]), table.sym_idx[c], metric[0],
        ops=table.n_candidates,
    )


def detect_decoupled_ml(
    y_sub,
    h_sub,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float | None = None,
) -> SubblockDecision:
    """Per-pattern sum of per-bin nearest-point residuals (the ISAPE detector)."""
    y = np.atleast_2d(np.asarray(y_sub, dtype=np.complex128))
    h = np.atleast_2d(np.asarray(h_sub, dtype=np.complex128))
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    entry, sym, metric = kernels.decoupled_ml_batch(
        np.ascontiguousarray(y), np.ascontiguousarray(h),
        codebook.sap_matrix, codebook.amplitude_scales(subblock_power),
        alphabet.points,
    )
    ops = len(codebook) * codebook.subblock_len
    return _decision(codebook, alphabet, int(entry[0]), sym[0], metric[0], ops)


def detect_psape(
    y_sub,
    h_sub,
    true_entry: CodebookEntry,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float | None = None,
) -> SubblockDecision:
    """Genie-aided detection: pattern known, symbols sliced per bin."""
    y = np.atleast_2d(np.asarray(y_sub, dtype=np.complex128))
    h = np.atleast_2d(np.asarray(h_sub, dtype=np.complex128))
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    e_i = next(i for i, e in enumerate(codebook.entries) if e.row_id == true_entry.row_id)
    sym, metric = kernels.psape_batch(
        np.ascontiguousarray(y), np.ascontiguousarray(h),
        np.array([e_i], dtype=np.int64),
        codebook.sap_matrix, codebook.amplitude_scales(subblock_power),
        alphabet.points,
    )
    return _decision(codebook, alphabet, e_i, sym[0], metric[0], ops=codebook.subblock_len)


def detect_llr(
    y_sub,
    h_sub,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    noise_var: float,
    subblock_power: float | None = None,
) -> SubblockDecision:
    """Activity log-likelihood-ratio detector.

    Because the transmit amplitude depends on the hypothesized active
    count, the per-bin ratio is evaluated with each pattern's own scaling
    and summed over that pattern's active bins; the highest score wins.
    The log-sum-exp is evaluated in max-shifted form.
    """
    if noise_var <= 0:
        raise ConfigurationError("LLR detection needs a positive noise variance")
    y = np.atleast_2d(np.asarray(y_sub, dtype=np.complex128))
    h = np.atleast_2d(np.asarray(h_sub, dtype=np.complex128))
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    entry, sym, score = kernels.llr_batch(
        np.ascontiguousarray(y), np.ascontiguousarray(h),
        codebook.sap_matrix, codebook.amplitude_scales(subblock_power),
        alphabet.points, float(noise_var),
    )
    ops = int(codebook.active_counts.sum()) * alphabet.order
    return _decision(codebook, alphabet, int(entry[0]), sym[0], score[0], ops)


def detect_block(
    y_f: np.ndarray,
    h_f: np.ndarray,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    detector: str,
    noise_var: float = 1.0,
    subblock_power: float | None = None,
    true_entries: np.ndarray | None = None,
):
    """Batched detection over subblocks; rows of y/h are one subblock each.

    Returns ``(entry_idx, sym_idx)`` arrays.  ``y_f``/``h_f`` may also be
    flat length-N vectors, reshaped by the codebook's subblock length.
    """
    L = codebook.subblock_len
    y = np.ascontiguousarray(np.asarray(y_f, dtype=np.complex128).reshape(-1, L))
    h = np.ascontiguousarray(np.asarray(h_f, dtype=np.complex128).reshape(-1, L))
    if subblock_power is None:
        subblock_power = float(L)
    scales = codebook.amplitude_scales(subblock_power)
    if detector == "ml":
        table = _candidates(codebook, alphabet, subblock_power)
        best, _ = _exhaustive_ml_arrays(y, h, table)
        return table.entry_idx[best].copy(), table.sym_idx[best].copy()
    if detector == "isape":
        entry, sym, _ = kernels.decoupled_ml_batch(
            y, h, codebook.sap_matrix, scales, alphabet.points
        )
        return entry, sym
    if detector == "psape":
        if true_entries is None:
            raise ConfigurationError("psape needs the transmitted entries")
        entries = np.ascontiguousarray(true_entries, dtype=np.int64)
        sym, _ = kernels.psape_batch(
            y, h, entries, codebook.sap_matrix, scales, alphabet.points
        )
        return entries.copy(), sym
    if detector == "llr":
        if noise_var <= 0:
            raise ConfigurationError("LLR detection needs a positive noise variance")
        entry, sym, _ = kernels.llr_batch(
            y, h, codebook.sap_matrix, scales, alphabet.points, float(noise_var)
        )
        return entry, sym
    raise ConfigurationError(f"unknown detector {detector!r}")


@dataclass(frozen=True)
class ComplexityReport:
    """Structural operation counts for one detector at one configuration."""

    detector: str
    metrics_per_subblock: int
    complex_mults_per_subblock: int
    mults_per_bit: float
    asymptotic: str


def count_operations(
    detector: str,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    config: FrameConfig | None = None,
) -> ComplexityReport:
    """Operation counts per subblock and per detected bit.

    Counting rule: one complex multiplication per evaluated product
    ``h * candidate_point``; the metric count is the number of candidate
    scans (full candidate vectors for the exhaustive search, pattern scans
    for the decoupled detectors, per-bin exponential terms for LLR).
    """
    counts = codebook.active_counts
    M = alphabet.order
    k = alphabet.bits_per_symbol
    mean_bits = codebook.p1 + codebook.p2 + counts.mean() * k
    if detector == "ml":
        metrics = int((M**counts.astype(np.float64)).sum())
        mults = int((M**counts.astype(np.float64) * counts).sum())
        asymptotic = "~O(G M^(n/2))"
    elif detector == "isape":
        metrics = len(codebook)
        mults = int(counts.sum()) * M
        asymptotic = "~O(G)"
    elif detector == "psape":
        metrics = 1
        mults = int(round(counts.mean() * M))
        asymptotic = "~O(G)"
    elif detector == "llr":
        metrics = int(counts.sum()) * M
        mults = int(counts.sum()) * M
        asymptotic = "~O(M)"
    else:
        raise ConfigurationError(f"unknown detector {detector!r}")
    return ComplexityReport(
        detector=detector,
        metrics_per_subblock=metrics,
        complex_mults_per_subblock=mults,
        mults_per_bit=mults / mean_bits,
        asymptotic=asymptotic,
    )
