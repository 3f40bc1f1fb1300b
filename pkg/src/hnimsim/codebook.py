"""Bits-to-subcarrier-activation-pattern codebooks.

A codebook maps a pair of bit groups (number bits, index bits) to a binary
activation pattern over one subblock of L subcarriers, together with the
number of active subcarriers I implied by that pattern.  The hybrid scheme
uses the 16-entry reference table for L=4 (:func:`build_table1_codebook`);
the baseline schemes (index-only, number-only, plain OFDM) reuse the same
entry structure with one of the two bit groups empty, so a single detector
implementation can search any of them.

Two structural properties matter for detection and analysis and are checked
by :func:`validate_codebook`:

* injectivity in both directions (distinct bit pairs and distinct patterns),
* equiprobable subcarrier activation (ESA): every subcarrier position is
  active in exactly half of the entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "ConfigurationError",
    "IllegalPatternError",
    "FrameConfig",
    "CodebookEntry",
    "Codebook",
    "CodebookValidation",
    "build_table1_codebook",
    "validate_codebook",
    "generate_generic_codebook",
    "im_codebook",
    "snm_codebook",
    "ofdm_codebook",
]


class ConfigurationError(ValueError):
    """Inconsistent frame, codebook, or experiment parameters."""


class IllegalPatternError(KeyError):
    """Activation pattern not present in the codebook."""


@dataclass(frozen=True)
class FrameConfig:
    """Block-structure and modulation parameters.

    ``n_fft = subblock_len * n_subblocks`` always holds; ``n_subblocks`` is
    derived.  ``n_cp`` defaults to 16 so a 10-tap channel fits inside the
    cyclic prefix; spectral-efficiency bookkeeping uses ``n_cp_se = 8``
    (see :mod:`hnimsim.analysis`).
    """

    n_fft: int = 64
    n_cp: int = 16
    subblock_len: int = 4
    mod_order: int = 2
    p1: int = 2
    p2: int = 2

    def __post_init__(self):
        if self.n_fft <= 0 or self.subblock_len <= 0:
            raise ConfigurationError("n_fft and subblock_len must be positive")
        if self.n_fft % self.subblock_len:
            raise ConfigurationError(
                f"n_fft={self.n_fft} is not a multiple of subblock_len={self.subblock_len}"
            )
        if self.n_cp < 0:
            raise ConfigurationError("n_cp must be nonnegative")
        if self.mod_order < 2 or self.mod_order & (self.mod_order - 1):
            raise ConfigurationError("mod_order must be a power of two >= 2")
        if self.p1 < 0 or self.p2 < 0:
            raise ConfigurationError("p1 and p2 must be nonnegative")

    @property
    def n_subblocks(self) -> int:
        return self.n_fft // self.subblock_len

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.mod_order))


@dataclass(frozen=True)
class CodebookEntry:
    """One codebook row: bit groups, activation pattern, active count."""

    row_id: int
    p1_bits: tuple[int, ...]
    p2_bits: tuple[int, ...]
    sap: tuple[int, ...]
    active_count: int

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.sap):
            raise ConfigurationError(f"row {self.row_id}: pattern entries must be 0/1")
        if self.active_count != sum(self.sap):
            raise ConfigurationError(
                f"row {self.row_id}: active_count {self.active_count} != pattern weight {sum(self.sap)}"
            )

    @property
    def pattern_bits(self) -> tuple[int, ...]:
        """Concatenated (p1, p2) label, leftmost bit first."""
        return self.p1_bits + self.p2_bits


class Codebook:
    """Ordered, immutable collection of entries with both lookup directions."""

    def __init__(self, entries: list[CodebookEntry], subblock_len: int):
        if not entries:
            raise ConfigurationError("codebook must contain at least one entry")
        for e in entries:
            if len(e.sap) != subblock_len:
                raise ConfigurationError(
                    f"row {e.row_id}: pattern length {len(e.sap)} != L={subblock_len}"
                )
        self.entries = tuple(entries)
        self.subblock_len = subblock_len
        self.p1 = len(entries[0].p1_bits)
        self.p2 = len(entries[0].p2_bits)
        self._by_bits = {(e.p1_bits, e.p2_bits): e for e in entries}
        self._by_sap = {e.sap: e for e in entries}
        # Array views consumed by the batched detection kernels.
        self.sap_matrix = np.array([e.sap for e in entries], dtype=np.uint8)
        self.active_counts = np.array([e.active_count for e in entries], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def map_bits(self, p1_bits, p2_bits) -> CodebookEntry:
        """Return the entry addressed by the two bit groups."""
        p1_bits = tuple(int(b) for b in p1_bits)
        p2_bits = tuple(int(b) for b in p2_bits)
        if len(p1_bits) != self.p1 or len(p2_bits) != self.p2:
            raise ConfigurationError(
                f"expected bit groups of length ({self.p1}, {self.p2}), "
                f"got ({len(p1_bits)}, {len(p2_bits)})"
            )
        try:
            return self._by_bits[(p1_bits, p2_bits)]
        except KeyError:
            raise ConfigurationError(f"no entry for bits {p1_bits} {p2_bits}") from None

    def demap_sap(self, sap) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Inverse of :meth:`map_bits` over the codebook's patterns."""
        key = tuple(int(c) for c in sap)
        if len(key) != self.subblock_len:
            raise ConfigurationError(
                f"pattern length {len(key)} != L={self.subblock_len}"
            )
        try:
            e = self._by_sap[key]
        except KeyError:
            raise IllegalPatternError(f"illegal pattern {key}") from None
        return e.p1_bits, e.p2_bits

    def amplitude_scales(self, subblock_power: float) -> np.ndarray:
        """Per-entry amplitude sqrt(P_t / I); zero for the all-off entry."""
        counts = self.active_counts
        scales = np.zeros(len(counts), dtype=np.float64)
        active = counts > 0
        scales[active] = np.sqrt(subblock_power / counts[active])
        return scales

    def mean_active_count(self) -> float:
        return float(self.active_counts.mean())

    # -- line-oriented text serialization -----------------------------------

    def to_text(self) -> str:
        """One row per entry: ``g p1_bits p2_bits sap I`` (bits as 0/1 chars).

        Empty bit groups are written as ``-`` so the format round-trips for
        the baseline pattern tables as well.
        """
        lines = []
        for e in self.entries:
            p1 = "".join(map(str, e.p1_bits)) or "-"
            p2 = "".join(map(str, e.p2_bits)) or "-"
            sap = "".join(map(str, e.sap))
            lines.append(f"{e.row_id} {p1} {p2} {sap} {e.active_count}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Codebook":
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            g, p1, p2, sap, count = line.split()
            entries.append(
                CodebookEntry(
                    row_id=int(g),
                    p1_bits=tuple() if p1 == "-" else tuple(int(b) for b in p1),
                    p2_bits=tuple() if p2 == "-" else tuple(int(b) for b in p2),
                    sap=tuple(int(c) for c in sap),
                    active_count=int(count),
                )
            )
        return cls(entries, subblock_len=len(entries[0].sap))

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "Codebook":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read())


# Reference table for L=4, two number bits and two index bits per subblock.
# Rows 13..16 deliberately break the plain count mapping (their I differs
# from the number-bit value) so that every subcarrier position stays active
# in exactly half of the entries.
_TABLE1_ROWS = [
    # g, p1,     p2,     pattern,      I
    (1, (0, 0), (0, 0), (1, 0, 0, 0), 1),
    (2, (0, 0), (0, 1), (0, 1, 0, 0), 1),
    (3, (0, 0), (1, 0), (0, 0, 1, 0), 1),
    (4, (0, 0), (1, 1), (0, 0, 0, 1), 1),
    (5, (0, 1), (0, 0), (1, 1, 0, 0), 2),
    (6, (0, 1), (0, 1), (1, 0, 1, 0), 2),
    (7, (0, 1), (1, 0), (1, 0, 0, 1), 2),
    (8, (0, 1), (1, 1), (0, 1, 0, 1), 2),
    (9, (1, 0), (0, 0), (1, 1, 1, 0), 3),
    (10, (1, 0), (0, 1), (1, 0, 1, 1), 3),
    (11, (1, 0), (1, 0), (1, 1, 0, 1), 3),
    (12, (1, 0), (1, 1), (0, 1, 1, 1), 3),
    (13, (1, 1), (0, 0), (0, 0, 0, 0), 0),
    (14, (1, 1), (0, 1), (0, 0, 1, 1), 2),
    (15, (1, 1), (1, 0), (0, 1, 1, 0), 2),
    (16, (1, 1), (1, 1), (1, 1, 1, 1), 4),
]


def build_table1_codebook() -> Codebook:
    """Return the 16-entry hybrid codebook for L=4 exactly as tabulated."""
    entries = [
        CodebookEntry(g, p1, p2, sap, count) for g, p1, p2, sap, count in _TABLE1_ROWS
    ]
    return Codebook(entries, subblock_len=4)


@dataclass
class CodebookValidation:
    """Structural check report; ``ok`` is the conjunction of all checks."""

    injective_bits: bool
    injective_saps: bool
    activation_counts: tuple[int, ...]
    esa_ok: bool
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.injective_bits and self.injective_saps and self.esa_ok


def validate_codebook(codebook: Codebook) -> CodebookValidation:
    """Check bidirectional injectivity and equiprobable activation.

    Failures are reported, never raised, so callers can inspect partially
    broken codebooks.
    """
    problems = []

    bit_pairs = [(e.p1_bits, e.p2_bits) for e in codebook]
    injective_bits = len(set(bit_pairs)) == len(bit_pairs)
    if not injective_bits:
        problems.append("duplicate (p1, p2) bit pairs")

    saps = [e.sap for e in codebook]
    injective_saps = len(set(saps)) == len(saps)
    if not injective_saps:
        seen, dupes = set(), set()
        for s in saps:
            if s in seen:
                dupes.add(s)
            seen.add(s)
        problems.append(f"duplicate patterns: {sorted(dupes)}")

    counts = tuple(int(c) for c in codebook.sap_matrix.sum(axis=0))
    target = len(codebook) // 2
    esa_ok = len(codebook) % 2 == 0 and all(c == target for c in counts)
    if not esa_ok:
        problems.append(
            f"activation counts {counts} differ from ESA target {target} per position"
        )

    return CodebookValidation(
        injective_bits=injective_bits,
        injective_saps=injective_saps,
        activation_counts=counts,
        esa_ok=esa_ok,
        problems=tuple(problems),
    )


def _exceptional_group_patterns(L, deficits, used, rng):
    """Pick L unused patterns whose column sums equal ``deficits`` exactly.

    Mirrors the reference table's last group: the remaining activation
    budget is split into one empty pattern, one all-on pattern, and L-2
    half-weight patterns, then assigned greedily against the per-position
    deficits.  Returns None when the greedy pass fails for this draw.
    """
    remaining = deficits.copy()
    chosen = []
    budget = int(remaining.sum())
    weights = [0, L] + [L // 2] * (L - 2)
    if sum(weights) != budget:
        return None
    rng.shuffle(weights)
    for w in sorted(weights, reverse=True):
        if w == 0:
            pattern = (0,) * L
        else:
            order = np.lexsort((rng.random(L), -remaining))
            pattern = tuple(1 if i in set(order[:w]) else 0 for i in range(L))
        if pattern in used or pattern in chosen:
            return None
        if any(remaining[i] < pattern[i] for i in range(L)):
            return None
        remaining -= np.array(pattern)
        chosen.append(pattern)
    if remaining.any():
        return None
    return chosen


def generate_generic_codebook(L: int, seed: int, attempts: int = 2000) -> Codebook:
    """Construct an injective, ESA-satisfying codebook for any power-of-two L.

    Construction rule (deterministic given ``seed``): number-bit value v in
    0..L-2 gets L distinct weight-(v+1) patterns chosen to keep per-position
    activation counts balanced; the last group reuses the reference table's
    trick and absorbs the leftover activation budget with one empty, one
    full, and L-2 half-weight patterns.  Randomized draws with validation
    and retry; raises ConfigurationError when no assignment is found.

    The L=4 reference table remains the authoritative codebook; other sizes
    are extensions built by this rule.
    """
    if L < 2 or L & (L - 1):
        raise ConfigurationError("L must be a power of two >= 2")
    m = int(math.log2(L))
    n_entries = L * L
    target = n_entries // 2

    master = np.random.default_rng(seed)
    for _ in range(attempts):
        rng = np.random.default_rng(master.integers(0, 2**63))
        counts = np.zeros(L, dtype=np.int64)
        used: set[tuple[int, ...]] = set()
        groups: list[list[tuple[int, ...]]] = []
        ok = True
        for v in range(L - 1):
            w = v + 1
            pool = list(combinations(range(L), w))
            rng.shuffle(pool)
            group = []
            for _ in range(L):
                # favor under-activated positions to stay repairable
                def score(c):
                    return sum(counts[i] for i in c) + rng.random()

                pool.sort(key=score)
                for cand in pool:
                    pattern = tuple(1 if i in cand else 0 for i in range(L))
                    if pattern not in used:
                        pool.remove(cand)
                        used.add(pattern)
                        counts += np.array(pattern)
                        group.append(pattern)
                        break
                else:
                    ok = False
                    break
            if not ok:
                break
            groups.append(group)
        if not ok:
            continue

        deficits = target - counts
        if deficits.min() < 0:
            continue
        last = _exceptional_group_patterns(L, deficits, used, rng)
        if last is None:
            continue
        groups.append(last)

        entries = []
        g = 1
        for v, group in enumerate(groups):
            for j, pattern in enumerate(group):
                p1 = tuple(int(b) for b in format(v, f"0{m}b"))
                p2 = tuple(int(b) for b in format(j, f"0{m}b"))
                entries.append(CodebookEntry(g, p1, p2, pattern, sum(pattern)))
                g += 1
        cb = Codebook(entries, subblock_len=L)
        if validate_codebook(cb).ok:
            return cb

    raise ConfigurationError(
        f"no ESA-satisfying codebook found for L={L} under the documented rule"
    )


# -- baseline pattern tables -------------------------------------------------


def im_codebook(L: int, n_active: int | None = None) -> Codebook:
    """Index-modulation pattern table: fixed activation count per subblock.

    The first 2**floor(log2 C(L, K)) patterns in lexicographic combination
    order are addressable by the index bits.
    """
    K = L // 2 if n_active is None else n_active
    if not 1 <= K <= L:
        raise ConfigurationError(f"n_active={K} outside 1..{L}")
    n_index_bits = int(math.floor(math.log2(math.comb(L, K))))
    patterns = list(combinations(range(L), K))[: 2**n_index_bits]
    entries = []
    for j, cand in enumerate(patterns):
        sap = tuple(1 if i in cand else 0 for i in range(L))
        p2 = tuple(int(b) for b in format(j, f"0{n_index_bits}b"))
        entries.append(CodebookEntry(j + 1, (), p2, sap, K))
    return Codebook(entries, subblock_len=L)


def snm_codebook(L: int) -> Codebook:
    """Number-modulation pattern table: count bits, leftmost-first placement."""
    if L < 2 or L & (L - 1):
        raise ConfigurationError("L must be a power of two >= 2")
    m = int(math.log2(L))
    entries = []
    for v in range(L):
        count = v + 1
        sap = tuple(1 if i < count else 0 for i in range(L))
        p1 = tuple(int(b) for b in format(v, f"0{m}b"))
        entries.append(CodebookEntry(v + 1, p1, (), sap, count))
    return Codebook(entries, subblock_len=L)


def ofdm_codebook(L: int) -> Codebook:
    """Degenerate single-entry table: every subcarrier modulated."""
    return Codebook([CodebookEntry(1, (), (), (1,) * L, L)], subblock_len=L)
