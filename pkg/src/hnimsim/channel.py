"""Frequency-selective Rayleigh channel, noise calibration, channel statistics.

Noise is generated in the time domain; because both transforms are unitary
the frequency-domain variance equals the time-domain variance, so one
number describes both.

Calibration convention (shared by every scheme): with unit average transmit
power per time-domain sample, the energy per information bit is 1/SE, hence
``N_o = 10**(-ebn0_db / 10) / SE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import ConfigurationError, FrameConfig

__all__ = [
    "ChannelRealization",
    "NoiseSpec",
    "uniform_pdp",
    "exponential_pdp",
    "make_pdp",
    "draw_channel",
    "apply_channel",
    "calibrate_noise",
    "subblock_channel_covariance",
]


@dataclass(frozen=True)
class ChannelRealization:
    """Tap vector, its response over the FFT grid, and the tap variances."""

    taps: np.ndarray
    freq_response: np.ndarray
    pdp: np.ndarray


@dataclass(frozen=True)
class NoiseSpec:
    """Calibrated noise level; time and frequency variances coincide."""

    ebn0_db: float
    variance_time: float

    @property
    def variance_freq(self) -> float:
        return self.variance_time


def uniform_pdp(n_taps: int) -> np.ndarray:
    return np.full(n_taps, 1.0 / n_taps)


def exponential_pdp(n_taps: int, decay: float = 1.0) -> np.ndarray:
    """Exponentially decaying profile, normalized to unit total power."""
    p = np.exp(-decay * np.arange(n_taps))
    return p / p.sum()


def make_pdp(n_taps: int, profile: str = "uniform", decay: float = 1.0) -> np.ndarray:
    if profile == "uniform":
        return uniform_pdp(n_taps)
    if profile == "exponential":
        return exponential_pdp(n_taps, decay)
    raise ConfigurationError(f"unknown power delay profile {profile!r}")


def draw_channel(n_taps: int, pdp: np.ndarray, rng: np.random.Generator, n_fft: int) -> ChannelRealization:
    """Draw symbol-spaced Rayleigh taps with per-tap variance ``pdp[l]``."""
    if n_taps < 1:
        raise ConfigurationError("n_taps must be >= 1")
    pdp = np.asarray(pdp, dtype=np.float64)
    if len(pdp) != n_taps:
        raise ConfigurationError(f"pdp length {len(pdp)} != n_taps {n_taps}")
    sigma = np.sqrt(pdp / 2.0)
    taps = sigma * rng.standard_normal(n_taps) + 1j * sigma * rng.standard_normal(n_taps)
    return ChannelRealization(taps=taps, freq_response=np.fft.fft(taps, n_fft), pdp=pdp)


def apply_channel(
    x_time: np.ndarray,
    channel: ChannelRealization,
    noise: NoiseSpec,
    rng: np.random.Generator,
    n_cp: int | None = None,
) -> np.ndarray:
    """Linear convolution with the taps plus complex AWGN per sample.

    The cyclic prefix must cover the channel memory (``n_cp >= n_taps - 1``),
    otherwise the one-tap equalizer model breaks; that is rejected up front
    rather than silently producing inter-symbol interference.
    """
    n_taps = len(channel.taps)
    if n_cp is not None and n_cp < n_taps - 1:
        raise ConfigurationError(
            f"cyclic prefix {n_cp} shorter than channel memory {n_taps - 1}"
        )
    x = np.asarray(x_time, dtype=np.complex128)
    y = np.convolve(x, channel.taps)[: len(x)]
    if noise.variance_time > 0:
        s = math.sqrt(noise.variance_time / 2.0)
        y = y + s * (rng.standard_normal(len(y)) + 1j * rng.standard_normal(len(y)))
    return y


def calibrate_noise(se: float, ebn0_db: float) -> NoiseSpec:
    """Noise variance for a target Eb/No at a given spectral efficiency.

    ``ebn0_db = inf`` is the noise-free sentinel.
    """
    if se <= 0:
        raise ConfigurationError("spectral efficiency must be positive")
    if math.isinf(ebn0_db):
        return NoiseSpec(ebn0_db=ebn0_db, variance_time=0.0)
    eb = 1.0 / se
    return NoiseSpec(ebn0_db=ebn0_db, variance_time=eb * 10.0 ** (-ebn0_db / 10.0))


def subblock_channel_covariance(pdp: np.ndarray, config: FrameConfig) -> np.ndarray:
    """Closed-form covariance of the frequency response over one subblock.

    With unit-power taps at delays l, ``K[a, b] = sum_l pdp[l] *
    exp(-2j*pi*(a-b)*l / n_fft)``; the result is Hermitian Toeplitz and does
    not depend on which contiguous subblock is taken.
    """
    pdp = np.asarray(pdp, dtype=np.float64)
    L = config.subblock_len
    lags = np.arange(L)
    taps = np.arange(len(pdp))
    row = (pdp[None, :] * np.exp(-2j * np.pi * lags[:, None] * taps[None, :] / config.n_fft)).sum(axis=1)
    k = np.empty((L, L), dtype=np.complex128)
    for a in range(L):
        for b in range(L):
            k[a, b] = row[a - b] if a >= b else np.conj(row[b - a])
    return k
