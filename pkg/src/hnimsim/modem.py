"""Transmit and receive signal chains.

The transmitter consumes bits from a queue: per subblock it takes the
pattern bits, maps them through the active codebook, then takes as many
symbol bits as the mapped pattern carries.  Active subcarriers are scaled
by sqrt(P_t / I) so every subblock with at least one active subcarrier
transmits the same power P_t; the all-off pattern transmits nothing (the
saved energy is not redistributed).

Transforms are unitary in both directions, so time and frequency noise
variances coincide and Parseval bookkeeping is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .codebook import (
    Codebook,
    ConfigurationError,
    FrameConfig,
    build_table1_codebook,
    im_codebook,
    ofdm_codebook,
    snm_codebook,
)

__all__ = [
    "SCHEMES",
    "ConstellationAlphabet",
    "SubblockBits",
    "SubblockPayload",
    "TxBlock",
    "scheme_codebook",
    "split_bits",
    "build_subblock",
    "assemble_and_modulate",
    "receive_front_end",
    "build_baseline_block",
    "transmit_block",
]

SCHEMES = ("hnim", "im", "snm", "ofdm")


class ConstellationAlphabet:
    """Unit-energy, Gray-labeled constellation.

    ``points[v]`` is the symbol whose bit label is the binary expansion of
    ``v``, leftmost bit first.
    """

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=np.complex128)
        self.order = len(self.points)
        self.bits_per_symbol = int(math.log2(self.order))
        if 2**self.bits_per_symbol != self.order:
            raise ConfigurationError("constellation size must be a power of two")
        # label lookup table: row v = bits of symbol index v
        self.bit_table = np.array(
            [[(v >> (self.bits_per_symbol - 1 - i)) & 1 for i in range(self.bits_per_symbol)]
             for v in range(self.order)],
            dtype=np.int8,
        )

    @classmethod
    def bpsk(cls) -> "ConstellationAlphabet":
        # bit 0 -> +1, bit 1 -> -1
        return cls(np.array([1.0 + 0.0j, -1.0 + 0.0j]))

    @classmethod
    def qpsk(cls) -> "ConstellationAlphabet":
        # Gray: first bit selects I sign, second bit selects Q sign
        pts = np.array(
            [(1 - 2 * b0) + 1j * (1 - 2 * b1) for b0 in (0, 1) for b1 in (0, 1)]
        ) / np.sqrt(2.0)
        return cls(pts)

    @classmethod
    def for_order(cls, mod_order: int) -> "ConstellationAlphabet":
        if mod_order == 2:
            return cls.bpsk()
        if mod_order == 4:
            return cls.qpsk()
        raise ConfigurationError(f"unsupported modulation order {mod_order}")

    def bits_to_index(self, bits) -> int:
        v = 0
        for b in bits:
            v = (v << 1) | int(b)
        return v

    def index_to_bits(self, index: int) -> np.ndarray:
        return self.bit_table[index].copy()


@dataclass(frozen=True)
class SubblockBits:
    """Per-subblock bit groups as consumed from the stream."""

    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray

    @property
    def all_bits(self) -> np.ndarray:
        return np.concatenate([self.p1, self.p2, self.p3])


@dataclass(frozen=True)
class SubblockPayload:
    entry: "object"
    symbols: np.ndarray
    p3_bits: np.ndarray


@dataclass
class TxBlock:
    """One transmitted OFDM block plus the per-subblock ground truth."""

    freq: np.ndarray
    time: np.ndarray
    consumed_bits: int
    entry_idx: np.ndarray        # (G,) index into the scheme codebook
    sym_idx: np.ndarray          # (G, L) constellation indices, -1 inactive
    subblock_bits: list = field(default_factory=list)  # (G,) arrays of tx bits


def scheme_codebook(scheme: str, config: FrameConfig) -> Codebook:
    """Pattern table used by a scheme at the configured subblock length."""
    L = config.subblock_len
    if scheme == "hnim":
        if L == 4:
            return build_table1_codebook()
        raise ConfigurationError("hybrid codebook is defined for L=4; "
                                 "use generate_generic_codebook for other sizes")
    if scheme == "im":
        return im_codebook(L)
    if scheme == "snm":
        return snm_codebook(L)
    if scheme == "ofdm":
        return ofdm_codebook(L)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


class _BitQueue:
    def __init__(self, bits):
        self._bits = np.asarray(bits, dtype=np.int8).ravel()
        self.position = 0

    def take(self, n: int) -> np.ndarray:
        if self.position + n > len(self._bits):
            raise ConfigurationError(
                f"bit stream exhausted: need {n} more bits at offset {self.position}"
            )
        out = self._bits[self.position : self.position + n]
        self.position += n
        return out


def split_bits(bits, config: FrameConfig, scheme: str, codebook: Codebook | None = None):
    """Partition an incoming bit stream into per-subblock groups.

    Returns ``(groups, consumed)``.  For the hybrid and number-only schemes
    the symbol-bit count of each group depends on the pattern its leading
    bits map to, so the total consumed count is data dependent.  For plain
    OFDM the groups are per-subcarrier, one symbol label each.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if codebook is None:
        codebook = scheme_codebook(scheme, config)
    queue = _BitQueue(bits)
    k = config.bits_per_symbol
    groups = []
    if scheme == "ofdm":
        for _ in range(config.n_fft):
            groups.append(
                SubblockBits(np.empty(0, np.int8), np.empty(0, np.int8), queue.take(k))
            )
        return groups, queue.position
    for _ in range(config.n_subblocks):
        p1 = queue.take(codebook.p1)
        p2 = queue.take(codebook.p2)
        entry = codebook.map_bits(p1, p2)
        p3 = queue.take(entry.active_count * k)
        groups.append(SubblockBits(p1, p2, p3))
    return groups, queue.position


def build_subblock(
    group: SubblockBits,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float,
):
    """Map one bit group to its length-L frequency-domain vector.

    Active positions carry constellation points scaled by sqrt(P_t / I);
    inactive positions are exactly zero.  The all-off pattern yields the
    zero vector.
    """
    entry = codebook.map_bits(group.p1, group.p2)
    k = alphabet.bits_per_symbol
    if len(group.p3) != entry.active_count * k:
        raise ConfigurationError(
            f"row {entry.row_id} expects {entry.active_count * k} symbol bits, "
            f"got {len(group.p3)}"
        )
    vec = np.zeros(codebook.subblock_len, dtype=np.complex128)
    if entry.active_count == 0:
        return SubblockPayload(entry, np.empty(0, np.complex128), group.p3), vec
    scale = math.sqrt(subblock_power / entry.active_count)
    labels = group.p3.reshape(entry.active_count, k)
    idx = labels.dot(1 << np.arange(k - 1, -1, -1)).astype(np.int64)
    symbols = alphabet.points[idx]
    positions = np.nonzero(np.array(entry.sap))[0]
    vec[positions] = scale * symbols
    return SubblockPayload(entry, symbols, group.p3), vec


def assemble_and_modulate(subblock_vectors, config: FrameConfig) -> np.ndarray:
    """Concatenate subblocks, apply the unitary inverse transform, prepend CP."""
    x_f = np.concatenate([np.asarray(v, dtype=np.complex128) for v in subblock_vectors])
    if len(x_f) != config.n_fft:
        raise ConfigurationError(
            f"subblock vectors cover {len(x_f)} bins, expected {config.n_fft}"
        )
    x_t = np.fft.ifft(x_f) * math.sqrt(config.n_fft)
    if config.n_cp:
        return np.concatenate([x_t[-config.n_cp :], x_t])
    return x_t.copy()


def receive_front_end(
    y_time: np.ndarray,
    channel: ChannelRealization,
    config: FrameConfig,
    eq_floor: float = 1e-12,
):
    """CP removal, unitary forward transform, one-tap zero forcing.

    Returns ``(y_f, y_eq)``; ``y_f`` is kept unequalized for the metric
    detectors.  Bins where |h| falls below ``eq_floor`` are divided by the
    floor magnitude instead (the channel draw makes exact zeros a
    probability-zero event).
    """
    y = np.asarray(y_time, dtype=np.complex128)
    if len(y) != config.n_fft + config.n_cp:
        raise ConfigurationError(
            f"time block has {len(y)} samples, expected {config.n_fft + config.n_cp}"
        )
    y_f = np.fft.fft(y[config.n_cp :]) / math.sqrt(config.n_fft)
    h = channel.freq_response
    mag = np.abs(h)
    safe = np.where(mag < eq_floor, eq_floor * np.exp(1j * np.angle(h)), h)
    return y_f, y_f / safe


def transmit_block(
    bits,
    config: FrameConfig,
    scheme: str,
    alphabet: ConstellationAlphabet,
    codebook: Codebook | None = None,
    subblock_power: float | None = None,
) -> TxBlock:
    """Full transmitter: split, map, scale, assemble, modulate.

    Plain OFDM is framed as G all-active subblocks, which is exactly the
    conventional chain but keeps one code path for all schemes.
    """
    if codebook is None:
        codebook = scheme_codebook(scheme, config)
    if subblock_power is None:
        subblock_power = float(config.subblock_len)
    L = config.subblock_len
    G = config.n_subblocks
    k = config.bits_per_symbol
    queue = _BitQueue(bits)

    entry_lookup = {(e.p1_bits, e.p2_bits): i for i, e in enumerate(codebook.entries)}
    entry_idx = np.zeros(G, dtype=np.int64)
    sym_idx = np.full((G, L), -1, dtype=np.int8)
    sub_bits = []
    vectors = []
    for g in range(G):
        if scheme == "ofdm":
            p1 = np.empty(0, np.int8)
            p2 = np.empty(0, np.int8)
            p3 = queue.take(L * k)
        else:
            p1 = queue.take(codebook.p1)
            p2 = queue.take(codebook.p2)
            entry = codebook.map_bits(p1, p2)
            p3 = queue.take(entry.active_count * k)
        group = SubblockBits(p1, p2, p3)
        payload, vec = build_subblock(group, codebook, alphabet, subblock_power)
        e_i = entry_lookup[(payload.entry.p1_bits, payload.entry.p2_bits)]
        entry_idx[g] = e_i
        if payload.entry.active_count:
            labels = p3.reshape(payload.entry.active_count, k)
            idx = labels.dot(1 << np.arange(k - 1, -1, -1))
            positions = np.nonzero(np.array(payload.entry.sap))[0]
            sym_idx[g, positions] = idx
        sub_bits.append(group.all_bits)
        vectors.append(vec)

    time = assemble_and_modulate(vectors, config)
    freq = np.concatenate(vectors)
    return TxBlock(
        freq=freq,
        time=time,
        consumed_bits=queue.position,
        entry_idx=entry_idx,
        sym_idx=sym_idx,
        subblock_bits=sub_bits,
    )


def build_baseline_block(
    bits,
    config: FrameConfig,
    scheme: str,
    alphabet: ConstellationAlphabet | None = None,
) -> tuple[np.ndarray, int]:
    """Frequency-domain block for one of the baseline schemes.

    Returns ``(x_f, consumed)``.  The per-subblock power rule matches the
    hybrid chain.
    """
    if scheme not in ("im", "snm", "ofdm"):
        raise ConfigurationError(f"unknown baseline scheme {scheme!r}")
    if alphabet is None:
        alphabet = ConstellationAlphabet.for_order(config.mod_order)
    block = transmit_block(bits, config, scheme, alphabet)
    return block.freq, block.consumed_bits
