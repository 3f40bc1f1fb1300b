"""Closed-form performance metrics and distribution estimates.

Spectral efficiency and rate formulas, the pairwise-error-probability and
union-bound chain, energy-efficiency ratios, and the empirical PAPR CCDF.

Spectral-efficiency bookkeeping follows the reference comparison setup
(``N_CP_SE = 8`` cyclic-prefix samples); bit-error simulations run with a
longer prefix so the 10-tap channel stays inside it, and the nominal SE is
what enters noise calibration and throughput scaling for every scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy.special import erfc

from .channel import calibrate_noise
from .codebook import Codebook, ConfigurationError, FrameConfig
from .detectors import build_candidate_table
from .modem import ConstellationAlphabet, scheme_codebook, transmit_block

__all__ = [
    "N_CP_SE",
    "ABEP_RHO",
    "ABEP_ETA",
    "q_function",
    "q_exponential_approx",
    "log2_binom_real",
    "SpectralEfficiencyReport",
    "spectral_efficiency",
    "pattern_bits_per_block",
    "hybrid_average_rate",
    "ofdm_rate",
    "scheme_spectral_efficiency",
    "rate_crossover_check",
    "RealizationSet",
    "enumerate_subblock_realizations",
    "achievable_rate",
    "PepResult",
    "conditional_pep",
    "unconditional_pep_closed",
    "unconditional_pep_empirical",
    "draw_subblock_gains",
    "AbepBound",
    "abep_upper_bound",
    "EeRow",
    "ee_ratios",
    "PaprResult",
    "papr_db",
    "papr_ccdf",
]

# Cyclic-prefix length used for spectral-efficiency comparisons.
N_CP_SE = 8

# Two-term exponential approximation of the Gaussian tail.
ABEP_RHO = (1.0 / 12.0, 1.0 / 4.0)
ABEP_ETA = (1.0 / 2.0, 2.0 / 3.0)

# The union bound must dominate the simulated maximum-likelihood detector,
# whose pairwise error probability between candidates a distance d apart is
# Q(sqrt(d^2 / (2 N_o))).  conditional_pep exposes the convention without
# the 1/2, which undershoots the simulated detector at high SNR, so the
# bound evaluates the detection-consistent exponent.
_PEP_ARGUMENT_SCALE = 0.5


def q_function(x):
    """Gaussian tail probability."""
    return 0.5 * erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))


def q_exponential_approx(x):
    """Two-term exponential approximation of the Gaussian tail."""
    x = np.asarray(x, dtype=np.float64)
    return sum(r * np.exp(-e * x**2) for r, e in zip(ABEP_RHO, ABEP_ETA))


def log2_binom_real(n: float, k: float) -> float:
    """Binomial coefficient in bits, continued to real arguments."""
    return (lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)) / math.log(2.0)


# -- spectral efficiency -------------------------------------------------------


def pattern_bits_per_block(active_counts, subblock_len: int, mod_order: int) -> float:
    """Idealized bits carried by one block with the given realized counts.

    Index bits are counted as log2 C(L, I); with the fixed-length table this
    matches only some counts, so this is the formula value, not the stream
    consumption.
    """
    k = math.log2(mod_order)
    total = 0.0
    for count in active_counts:
        total += math.log2(subblock_len) + log2_binom_real(subblock_len, count) + count * k
    return total


def hybrid_average_rate(subblock_len: int, mod_order: int, n_fft: int, n_cp: int) -> float:
    """Average rate with I averaged to (L+1)/2 active subcarriers."""
    i_avg = (subblock_len + 1) / 2.0
    bits = (
        math.log2(subblock_len)
        + log2_binom_real(subblock_len, i_avg)
        + i_avg * math.log2(mod_order)
    )
    return n_fft * bits / (subblock_len * (n_fft + n_cp))


def ofdm_rate(mod_order: int, n_fft: int, n_cp: int) -> float:
    """Rate of the conventional chain with every subcarrier modulated."""
    return n_fft * math.log2(mod_order) / (n_fft + n_cp)


@dataclass(frozen=True)
class SpectralEfficiencyReport:
    """Bits per block and b/s/Hz for one codebook and modulation order."""

    mean_bits_per_block: float
    se_mean: float
    se_average_rate: float
    se_ofdm: float


def spectral_efficiency(
    config: FrameConfig,
    codebook: Codebook,
    n_cp: int | None = None,
) -> SpectralEfficiencyReport:
    """Codebook-mean spectral efficiency plus the comparison formulas."""
    n_cp = N_CP_SE if n_cp is None else n_cp
    k = config.bits_per_symbol
    bits_per_subblock = codebook.p1 + codebook.p2 + codebook.mean_active_count() * k
    mean_bits = config.n_subblocks * bits_per_subblock
    return SpectralEfficiencyReport(
        mean_bits_per_block=mean_bits,
        se_mean=mean_bits / (config.n_fft + n_cp),
        se_average_rate=hybrid_average_rate(
            config.subblock_len, config.mod_order, config.n_fft, n_cp
        ),
        se_ofdm=ofdm_rate(config.mod_order, config.n_fft, n_cp),
    )


def scheme_spectral_efficiency(
    scheme: str, config: FrameConfig, n_cp: int | None = None
) -> float:
    """Nominal average spectral efficiency of a scheme in b/s/Hz.

    This is the value used for noise calibration and throughput scaling.
    Conventional OFDM follows the all-subcarriers formula.
    """
    n_cp = N_CP_SE if n_cp is None else n_cp
    if scheme == "ofdm":
        return ofdm_rate(config.mod_order, config.n_fft, n_cp)
    cb = scheme_codebook(scheme, config)
    k = config.bits_per_symbol
    bits = config.n_subblocks * (cb.p1 + cb.p2 + cb.mean_active_count() * k)
    return bits / (config.n_fft + n_cp)


def rate_crossover_check(subblock_len: int, mod_order: int) -> bool:
    """Whether the hybrid average rate meets or beats plain OFDM.

    Evaluated with I averaged to (L+1)/2; the non-integer binomial uses the
    log-gamma continuation.
    """
    if subblock_len < 2 or subblock_len & (subblock_len - 1):
        raise ConfigurationError("subblock_len must be a power of two")
    i_avg = (subblock_len + 1) / 2.0
    k = math.log2(mod_order)
    lhs = math.log2(subblock_len) + log2_binom_real(subblock_len, i_avg) + i_avg * k
    return lhs >= subblock_len * k


# -- achievable rate -----------------------------------------------------------


def _codebook_se(codebook: Codebook, alphabet: ConstellationAlphabet, config: FrameConfig) -> float:
    """Mean-bits spectral efficiency of an arbitrary pattern table."""
    bits = codebook.p1 + codebook.p2 + codebook.mean_active_count() * alphabet.bits_per_symbol
    return bits * (config.n_fft / codebook.subblock_len) / (config.n_fft + N_CP_SE)


@dataclass(frozen=True)
class RealizationSet:
    """All transmit vectors of one subblock with their probabilities."""

    vectors: np.ndarray      # (n, L) complex
    probs: np.ndarray        # (n,)
    entry_idx: np.ndarray    # (n,)
    labels: tuple            # (n,) int8 arrays: pattern bits then symbol bits


def enumerate_subblock_realizations(
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    subblock_power: float | None = None,
) -> RealizationSet:
    """Candidate vectors weighted by 2**-(p1+p2) * M**-I.

    The weights reduce to a uniform 1/2**p when every pattern carries the
    same symbol count.
    """
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    table = build_candidate_table(codebook, alphabet, subblock_power)
    counts = codebook.active_counts[table.entry_idx]
    probs = (1.0 / len(codebook)) * alphabet.order ** (-counts.astype(np.float64))
    labels = []
    for c in range(table.n_candidates):
        entry = codebook.entries[table.entry_idx[c]]
        parts = [np.array(entry.pattern_bits, dtype=np.int8)]
        for pos, active in enumerate(entry.sap):
            if active:
                parts.append(alphabet.bit_table[table.sym_idx[c, pos]])
        labels.append(np.concatenate(parts))
    return RealizationSet(
        vectors=table.vectors,
        probs=probs,
        entry_idx=table.entry_idx,
        labels=tuple(labels),
    )


def achievable_rate(
    config: FrameConfig,
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    k_l: np.ndarray,
    ebn0_db_grid,
    se: float | None = None,
    subblock_power: float | None = None,
    max_realizations: int = 4096,
) -> np.ndarray:
    """Achievable rate versus Eb/No from the pairwise determinant bound.

    For realizations j, w the channel-averaged likelihood ratio is
    1 / det(I + K_L U_{j,w}) with U_{j,w} the outer product of the
    difference vector over 2 N_o; the resulting per-subcarrier mutual
    information is scaled by N_F / (N_F + N_CP) so the curve runs from 0 at
    vanishing SNR to the average spectral efficiency at high SNR.
    """
    rs = enumerate_subblock_realizations(codebook, alphabet, subblock_power)
    n = len(rs.probs)
    if n > max_realizations:
        raise ConfigurationError(
            f"{n} realizations exceed the cap {max_realizations}"
        )
    if se is None:
        se = _codebook_se(codebook, alphabet, config)
    entropy = float(-(rs.probs * np.log2(rs.probs)).sum())
    # quad[j, w] = (v_j - v_w) K (v_j - v_w)^H, real and >= 0 for PSD K
    q = rs.vectors @ np.asarray(k_l, dtype=np.complex128) @ rs.vectors.conj().T
    diag = np.real(np.diag(q))
    quad = np.maximum(diag[:, None] + diag[None, :] - 2.0 * np.real(q), 0.0)

    cp_factor = config.n_fft / (config.n_fft + config.n_cp)
    out = np.empty(len(list(ebn0_db_grid)), dtype=np.float64)
    for i, ebn0 in enumerate(ebn0_db_grid):
        no = calibrate_noise(se, ebn0).variance_freq
        if no == 0:
            out[i] = cp_factor * entropy / config.subblock_len
            continue
        g = 1.0 / (1.0 + quad / (2.0 * no))
        inner = g @ rs.probs
        penalty = float((rs.probs * np.log2(inner / rs.probs)).sum())
        out[i] = cp_factor * (entropy - penalty) / config.subblock_len
    return out


# -- pairwise error probability and the union bound ---------------------------


@dataclass(frozen=True)
class PepResult:
    exact: float
    approx: float


def _normalized_codeword(c) -> np.ndarray:
    sap = np.asarray(getattr(c, "sap", c), dtype=np.float64)
    weight = sap.sum()
    return sap / math.sqrt(weight) if weight > 0 else sap


def conditional_pep(
    c_g,
    c_hat,
    h_sub: np.ndarray,
    subblock_power: float,
    noise_var: float,
) -> PepResult:
    """Pairwise codeword error probability conditioned on the channel.

    Returns the Gaussian tail Q(sqrt(P_t/N_o * sum R Delta)) and its
    two-term exponential approximation, with per-bin channel power
    R(l) = |h(l)|^2 and Delta the squared difference of the
    1/sqrt(I)-normalized codewords.  Note the exponent carries P_t/N_o
    directly; the union bound uses the ML-consistent halved exponent (see
    module constant).
    """
    u_a = _normalized_codeword(c_g)
    u_b = _normalized_codeword(c_hat)
    if np.array_equal(np.asarray(getattr(c_g, "sap", c_g)), np.asarray(getattr(c_hat, "sap", c_hat))):
        raise ConfigurationError("pairwise error needs two distinct codewords")
    r = np.abs(np.asarray(h_sub, dtype=np.complex128)) ** 2
    delta = np.abs(u_a - u_b) ** 2
    ratio = subblock_power / noise_var
    exact = float(q_function(math.sqrt(ratio * float((r * delta).sum()))))
    approx = float(
        sum(
            rho * np.exp(-eta * ratio * r * delta).prod()
            for rho, eta in zip(ABEP_RHO, ABEP_ETA)
        )
    )
    return PepResult(exact=exact, approx=approx)


def unconditional_pep_closed(delta_profile, pt_over_no: float) -> float:
    """Channel-averaged pairwise error probability, closed form.

    Per-bin averaging of the exponential approximation under independent
    unit-mean Rayleigh-squared gains: E[exp(-a R)] = 1 / (1 + a).
    """
    delta = np.asarray(delta_profile, dtype=np.float64)
    total = 0.0
    for rho, eta in zip(ABEP_RHO, ABEP_ETA):
        total += rho / np.prod(1.0 + eta * _PEP_ARGUMENT_SCALE * pt_over_no * delta)
    return float(total)


def unconditional_pep_empirical(delta_profile, pt_over_no: float, gains: np.ndarray) -> float:
    """Channel-averaged pairwise error probability from drawn channels.

    ``gains`` holds per-draw squared channel magnitudes, shape (draws, L);
    the exact Gaussian tail is averaged over the draws.
    """
    delta = np.asarray(delta_profile, dtype=np.float64)
    arg = np.sqrt(_PEP_ARGUMENT_SCALE * pt_over_no * (gains @ delta))
    return float(q_function(arg).mean())


def draw_subblock_gains(
    pdp: np.ndarray, config: FrameConfig, n_draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Squared channel magnitudes over one subblock, (n_draws, L)."""
    pdp = np.asarray(pdp, dtype=np.float64)
    n_taps = len(pdp)
    sigma = np.sqrt(pdp / 2.0)
    taps = sigma * rng.standard_normal((n_draws, n_taps)) + 1j * sigma * rng.standard_normal(
        (n_draws, n_taps)
    )
    bins = np.arange(config.subblock_len)
    dft = np.exp(-2j * np.pi * bins[:, None] * np.arange(n_taps)[None, :] / config.n_fft)
    h = taps @ dft.T
    return np.abs(h) ** 2


def _label_error_matrix(labels) -> np.ndarray:
    """Bit errors charged when realization w is detected instead of j.

    Pattern bits compare positionally; symbol bits compare over the common
    prefix and transmitted bits past the detected length count as lost.
    """
    n = len(labels)
    lens = np.array([len(b) for b in labels])
    width = int(lens.max())
    padded = np.full((n, width), -1, dtype=np.int8)
    for i, b in enumerate(labels):
        padded[i, : len(b)] = b
    e = np.zeros((n, n), dtype=np.float64)
    for j in range(n):
        both = (padded[j] >= 0) & (padded >= 0)
        mism = (padded[j][None, :] != padded) & both
        lost = np.maximum(lens[j] - lens, 0)
        e[j] = mism.sum(axis=1) + lost
    return e


@dataclass(frozen=True)
class AbepBound:
    """Union bound on the bit error rate, per Eb/No point."""

    ebn0_db: np.ndarray
    closed: np.ndarray
    empirical: np.ndarray | None


def abep_upper_bound(
    codebook: Codebook,
    alphabet: ConstellationAlphabet,
    config: FrameConfig,
    ebn0_db_grid,
    pdp: np.ndarray,
    se: float | None = None,
    subblock_power: float | None = None,
    n_channel_draws: int = 0,
    rng: np.random.Generator | None = None,
    pair_chunk: int = 512,
) -> AbepBound:
    """Union bound over all realization pairs, weighted by bit errors.

    Per transmitted realization j the pairwise terms sum over every other
    realization w (symbol realizations included, since distinct symbols on
    one pattern are confusable); each term is weighted by the bit-error
    count of that confusion and normalized by j's own bit count, and
    realizations enter with their occurrence probabilities.

    The closed form averages each bin independently (exact for one-bin
    differences); with ``n_channel_draws`` > 0 the exact Gaussian tail is
    also averaged over drawn channels.
    """
    if subblock_power is None:
        subblock_power = float(codebook.subblock_len)
    if se is None:
        se = _codebook_se(codebook, alphabet, config)
    rs = enumerate_subblock_realizations(codebook, alphabet, subblock_power)
    n = len(rs.probs)
    delta = (
        np.abs(rs.vectors[:, None, :] - rs.vectors[None, :, :]) ** 2 / subblock_power
    )  # (n, n, L)
    e_bits = _label_error_matrix(rs.labels)
    p_bits = np.array([len(b) for b in rs.labels], dtype=np.float64)
    weight = (rs.probs / p_bits)[:, None] * e_bits
    np.fill_diagonal(weight, 0.0)

    ebn0 = np.asarray(list(ebn0_db_grid), dtype=np.float64)
    closed = np.empty(len(ebn0))
    for i, point in enumerate(ebn0):
        a = _PEP_ARGUMENT_SCALE * subblock_power / calibrate_noise(se, point).variance_freq
        pep = np.zeros((n, n))
        for rho, eta in zip(ABEP_RHO, ABEP_ETA):
            pep += rho / np.prod(1.0 + eta * a * delta, axis=2)
        closed[i] = float((weight * pep).sum())

    empirical = None
    if n_channel_draws > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        gains = draw_subblock_gains(pdp, config, n_channel_draws, rng)
        flat_delta = delta.reshape(n * n, -1)
        flat_weight = weight.reshape(-1)
        empirical = np.zeros(len(ebn0))
        for i, point in enumerate(ebn0):
            a = _PEP_ARGUMENT_SCALE * subblock_power / calibrate_noise(se, point).variance_freq
            total = 0.0
            for start in range(0, n * n, pair_chunk):
                stop = min(start + pair_chunk, n * n)
                args = np.sqrt(a * (gains @ flat_delta[start:stop].T))
                total += float(q_function(args).mean(axis=0) @ flat_weight[start:stop])
            empirical[i] = total
    return AbepBound(ebn0_db=ebn0, closed=closed, empirical=empirical)


# -- energy efficiency ---------------------------------------------------------


@dataclass(frozen=True)
class EeRow:
    scheme: str
    se_r: float
    esf: float
    ee_r: float
    unbounded: bool


def efficiency_row(
    scheme: str, bits_per_block: float, activation_fraction: float, config: FrameConfig
) -> EeRow:
    """SE and EE ratios of one scheme against the conventional reference.

    A scheme activating no subcarriers saves all the energy (ESF = 1); its
    ratio is reported as unbounded rather than dividing by zero.
    """
    reference_se = math.log2(config.mod_order)
    se_r = bits_per_block / (config.n_fft + N_CP_SE) / reference_se
    esf = 1.0 - activation_fraction
    unbounded = math.isclose(esf, 1.0)
    ee = math.inf if unbounded else se_r / (1.0 - esf)
    return EeRow(scheme, se_r, esf, ee, unbounded)


def ee_ratios(config: FrameConfig, im_activation_ratios=(0.25, 0.5)) -> list[EeRow]:
    """Spectral- and energy-efficiency ratios relative to conventional OFDM.

    The reference is the comparison table's conventional-OFDM entry, which
    counts log2(M) b/s/Hz.  The energy saving factor is the average
    inactive-subcarrier fraction (defining it as the active fraction would
    make the ratio shrink for sparser schemes, the opposite of a saving).
    """
    from .codebook import im_codebook  # local import to avoid cycle at module load

    k = config.bits_per_symbol
    L = config.subblock_len
    rows = []

    hnim = scheme_codebook("hnim", config)
    rows.append(efficiency_row(
        "hnim", config.n_subblocks * (hnim.p1 + hnim.p2 + hnim.mean_active_count() * k),
        hnim.mean_active_count() / L, config))
    snm = scheme_codebook("snm", config)
    rows.append(efficiency_row(
        "snm", config.n_subblocks * (snm.p1 + snm.mean_active_count() * k),
        snm.mean_active_count() / L, config))
    for ar in im_activation_ratios:
        n_active = max(1, int(round(ar * L)))
        im = im_codebook(L, n_active)
        rows.append(efficiency_row(
            f"im_ar{ar:g}", config.n_subblocks * (im.p2 + n_active * k),
            n_active / L, config))
    # the reference scheme itself: ratio one by definition
    rows.append(efficiency_row(
        "ofdm", (config.n_fft + N_CP_SE) * math.log2(config.mod_order), 1.0, config))
    return rows


# -- PAPR ----------------------------------------------------------------------


def papr_db(time_samples: np.ndarray) -> float:
    """Peak-to-average power ratio of a sample vector, in dB."""
    p = np.abs(np.asarray(time_samples)) ** 2
    mean = p.mean()
    if mean == 0:
        return float("-inf")
    return float(10.0 * np.log10(p.max() / mean))


@dataclass(frozen=True)
class PaprResult:
    papr_db: np.ndarray
    n_zero_blocks: int
    thresholds_db: np.ndarray
    ccdf: np.ndarray

    def threshold_at(self, prob: float) -> float:
        """PAPR level exceeded with the given probability."""
        return float(np.quantile(self.papr_db, 1.0 - prob))


def papr_ccdf(
    scheme: str,
    config: FrameConfig,
    n_blocks: int,
    oversample: int,
    rng: np.random.Generator,
    thresholds_db: np.ndarray | None = None,
) -> PaprResult:
    """Empirical PAPR distribution over random blocks.

    The ratio is computed on the oversampled data portion (no cyclic
    prefix); blocks with zero transmit energy are excluded from the
    statistic and counted separately.
    """
    alphabet = ConstellationAlphabet.for_order(config.mod_order)
    n = config.n_fft
    k = config.bits_per_symbol
    pool_bits = config.n_subblocks * (4 + config.subblock_len * k) + n * k
    values = []
    n_zero = 0
    half = n // 2
    for _ in range(n_blocks):
        bits = rng.integers(0, 2, size=pool_bits)
        block = transmit_block(bits, config, scheme, alphabet)
        x_f = block.freq
        if not np.any(x_f):
            n_zero += 1
            continue
        padded = np.concatenate([x_f[:half], np.zeros(n * (oversample - 1), complex), x_f[half:]])
        x_t = np.fft.ifft(padded)
        values.append(papr_db(x_t))
    papr = np.array(values)
    if thresholds_db is None:
        thresholds_db = np.arange(4.0, 13.05, 0.1)
    thresholds_db = np.asarray(thresholds_db, dtype=np.float64)
    ccdf = np.array([(papr > t).mean() for t in thresholds_db])
    return PaprResult(
        papr_db=papr, n_zero_blocks=n_zero, thresholds_db=thresholds_db, ccdf=ccdf
    )
