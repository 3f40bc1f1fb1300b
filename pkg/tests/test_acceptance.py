"""Acceptance criteria for the whole package, one test per criterion.

Each test prints one PASS line when its assertions hold; criterion 2's
companion xfail documents the comparison table's conventional-OFDM cell,
which the all-subcarriers formula does not reproduce.
"""

import math

import numpy as np
import pytest

from hnimsim import analysis as an
from hnimsim.channel import make_pdp, subblock_channel_covariance
from hnimsim.codebook import FrameConfig, build_table1_codebook, validate_codebook
from hnimsim.detectors import build_candidate_table, detect_block
from hnimsim.harness import ExperimentSpec, run_sweep, sweep_to_csv
from hnimsim.modem import ConstellationAlphabet, scheme_codebook, transmit_block

from test_codebook import REFERENCE_ROWS

SCHEMES = ("hnim", "im", "snm", "ofdm")
DETECTORS = ("ml", "isape", "psape", "llr")
SIM_CONFIG = FrameConfig(n_fft=64, n_cp=16, subblock_len=4, mod_order=2)
SE_CONFIG = FrameConfig(n_fft=64, n_cp=8, subblock_len=4, mod_order=2)


def _report(num, text):
    print(f"ACCEPTANCE {num:02d} PASS - {text}")


def test_acceptance_01_codebook_fidelity():
    cb = build_table1_codebook()
    assert len(cb) == 16
    for entry, (g, p1, p2, sap, count) in zip(cb, REFERENCE_ROWS):
        assert (entry.row_id, entry.p1_bits, entry.p2_bits, entry.sap,
                entry.active_count) == (g, p1, p2, sap, count)
    report = validate_codebook(cb)
    assert report.ok and report.activation_counts == (8, 8, 8, 8)
    for e in cb:
        assert cb.demap_sap(cb.map_bits(e.p1_bits, e.p2_bits).sap) == (e.p1_bits, e.p2_bits)
    _report(1, "reference table reproduced, ESA 8/16 per position, round-trip holds")


def test_acceptance_02_spectral_efficiency_table():
    bits = {
        s: an.scheme_spectral_efficiency(s, SE_CONFIG) * (64 + 8) for s in SCHEMES
    }
    assert bits["hnim"] == pytest.approx(96.0, abs=1e-9)
    assert bits["snm"] == pytest.approx(72.0, abs=1e-9)
    assert bits["im"] == pytest.approx(64.0, abs=1e-9)
    assert bits["ofdm"] == pytest.approx(64.0, abs=1e-9)
    gain = bits["hnim"] / bits["snm"]
    assert gain == pytest.approx(1.3333, abs=5e-5)
    _report(2, "bits/block 96/72/64 and hybrid gain 1.3333 reproduced")


@pytest.mark.xfail(
    strict=True,
    reason="comparison table prints 72 bits/block for conventional OFDM; the "
    "all-subcarriers formula gives 64 and the implementation follows it",
)
def test_acceptance_02_xfail_conventional_ofdm_table_cell():
    bits = an.scheme_spectral_efficiency("ofdm", SE_CONFIG) * (64 + 8)
    assert bits == pytest.approx(72.0, abs=1e-9)


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("detector", DETECTORS)
def test_acceptance_03_noiseless_loopback(scheme, detector):
    spec = ExperimentSpec(
        scheme=scheme, detector=detector, config=SIM_CONFIG,
        snr_db=(math.inf,), min_errors=1, max_bits=100_000, seed=31,
    )
    sweep = run_sweep(spec)
    point = sweep.points[0]
    assert point.bits_sent >= 100_000
    assert point.bit_errors == 0 and point.ber == 0.0


@pytest.mark.parametrize("detector", DETECTORS)
def test_acceptance_03_all_off_pattern_path(detector):
    # a block made entirely of the all-off pattern survives the loop
    cb = scheme_codebook("hnim", SIM_CONFIG)
    alphabet = ConstellationAlphabet.bpsk()
    bits = np.tile([1, 1, 0, 0], 16)
    block = transmit_block(bits, SIM_CONFIG, "hnim", alphabet)
    assert not np.any(block.freq)
    h = np.ones(64, complex)
    entry, _ = detect_block(
        block.freq, h, cb, alphabet, detector,
        noise_var=1e-9 * 4.0, true_entries=block.entry_idx,
    )
    assert np.all(entry == 12)  # row 13
    _report(3, f"noiseless loopback exact for every scheme ({detector} shown), "
               "all-off pattern included")


def test_acceptance_04_detector_oracle_equivalence():
    rng = np.random.default_rng(41)
    cb = build_table1_codebook()
    alphabet = ConstellationAlphabet.bpsk()
    table = build_candidate_table(cb, alphabet, 4.0)
    n = 10_000
    pick = rng.integers(0, table.n_candidates, size=n)
    x = table.vectors[pick]
    h = (rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))) / math.sqrt(2)
    noise_var = 10 ** (-10.0 / 10)
    y = x * h + math.sqrt(noise_var / 2) * (
        rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
    )
    e_ml, s_ml = detect_block(y, h, cb, alphabet, "ml")
    e_dc, s_dc = detect_block(y, h, cb, alphabet, "isape")
    assert np.array_equal(e_ml, e_dc) and np.array_equal(s_ml, s_dc)
    assert table.n_candidates == 81
    _report(4, "decoupled detector identical to the 81-candidate search on 1e4 "
               "noisy subblocks at 10 dB")


def test_acceptance_05_abep_bound_validity_and_tightness():
    grid = (20.0, 25.0, 30.0)
    spec = ExperimentSpec(
        scheme="hnim", detector="ml", config=SIM_CONFIG, snr_db=grid,
        min_errors=200, max_bits=8_000_000, seed=51,
    )
    sweep = run_sweep(spec)
    sim = np.array([p.ber for p in sweep.points])
    assert all(p.bit_errors >= 200 for p in sweep.points)
    cb = build_table1_codebook()
    bound = an.abep_upper_bound(
        cb, ConstellationAlphabet.bpsk(), SIM_CONFIG, grid, make_pdp(10),
        n_channel_draws=10_000, rng=np.random.default_rng(52),
    )
    assert np.all(sim <= 1.1 * bound.empirical)
    assert bound.empirical[-1] / sim[-1] <= 10.0
    _report(5, f"union bound dominates simulation at {grid} dB "
               f"(bound/sim at 30 dB = {bound.empirical[-1] / sim[-1]:.2f})")


def test_acceptance_06_detector_ordering():
    grid = (0.0, 10.0, 20.0)
    runs = {}
    for det in ("psape", "isape"):
        spec = ExperimentSpec(
            scheme="hnim", detector=det, config=SIM_CONFIG, snr_db=grid,
            min_errors=600, max_bits=3_000_000, seed=61,
        )
        runs[det] = run_sweep(spec).points
    separated = 0
    for a, b in zip(runs["psape"], runs["isape"]):
        assert a.ber <= b.ber
        if a.ber + a.ci_halfwidth < b.ber - b.ci_halfwidth:
            separated += 1
    assert separated >= 1

    bers = {}
    for det in ("llr", "ml"):
        spec = ExperimentSpec(
            scheme="hnim", detector=det, config=SIM_CONFIG, snr_db=(20.0,),
            min_errors=1500, max_bits=4_000_000, seed=62,
        )
        bers[det] = run_sweep(spec).points[0].ber
    rel = abs(bers["llr"] - bers["ml"]) / bers["ml"]
    assert rel <= 0.10
    _report(6, f"genie detector dominates ({separated}/3 points CI-separated); "
               f"LLR within {rel:.1%} of optimal ML at 20 dB")


def test_acceptance_07_throughput_saturation_and_ordering():
    targets = {"hnim": 4 / 3, "snm": 1.0, "im": 8 / 9, "ofdm": 8 / 9}
    top = {}
    for scheme in SCHEMES:
        spec = ExperimentSpec(
            scheme=scheme, detector="ml", config=SIM_CONFIG,
            snr_db=(0.0, 10.0, 20.0, 30.0, 40.0),
            min_errors=100, max_bits=400_000, seed=71,
        )
        sweep = run_sweep(spec)
        top[scheme] = sweep.throughput(sweep.points[-1])
        assert abs(top[scheme] - targets[scheme]) / targets[scheme] <= 0.02
    assert all(top["hnim"] > top[s] for s in ("snm", "im", "ofdm"))
    _report(7, "throughput saturates to 1.3333/1.0/0.8889 within 2% and the "
               "hybrid dominates every baseline")


def test_acceptance_08_achievable_rate_limits():
    cb = build_table1_codebook()
    k_l = subblock_channel_covariance(make_pdp(10), SE_CONFIG)
    grid = list(range(-30, 51, 5))
    rate = an.achievable_rate(SE_CONFIG, cb, ConstellationAlphabet.bpsk(), k_l, grid)
    eta = an.scheme_spectral_efficiency("hnim", SE_CONFIG)
    assert abs(rate[0]) < 0.01 * eta
    assert rate[-1] == pytest.approx(eta, rel=0.01)
    assert np.all(np.diff(rate) >= -1e-12)
    _report(8, f"rate runs from {rate[0]:.4f} to {rate[-1]:.4f} "
               f"(eta = {eta:.4f}), monotone across the grid")


def test_acceptance_09_energy_efficiency_table():
    rows = {r.scheme: r for r in an.ee_ratios(SE_CONFIG)}
    assert (rows["hnim"].se_r, rows["hnim"].esf, rows["hnim"].ee_r) == pytest.approx(
        (1.3333, 0.5, 2.6667), abs=5e-5)
    assert (rows["ofdm"].se_r, rows["ofdm"].esf, rows["ofdm"].ee_r) == pytest.approx(
        (1.0, 0.0, 1.0))
    assert (rows["im_ar0.5"].se_r, rows["im_ar0.5"].esf, rows["im_ar0.5"].ee_r) == \
        pytest.approx((0.8889, 0.5, 1.7778), abs=5e-5)
    assert rows["hnim"].ee_r > rows["im_ar0.5"].ee_r > rows["ofdm"].ee_r
    _report(9, "efficiency ratios (1.3333, 0.5, 2.6667)/(1,0,1)/(0.8889, 0.5, 1.7778) "
               "with the expected ordering")


def test_acceptance_10_papr_band():
    thresholds = {}
    for i, scheme in enumerate(SCHEMES):
        rng = np.random.default_rng([101, i])
        res = an.papr_ccdf(scheme, SIM_CONFIG, 10_000, 4, rng)
        thresholds[scheme] = res.threshold_at(1e-2)
    width = max(thresholds.values()) - min(thresholds.values())
    assert width <= 1.0
    _report(10, f"PAPR at CCDF 1e-2 spans {width:.2f} dB across schemes "
                f"({', '.join(f'{s}={v:.2f}' for s, v in thresholds.items())})")


def test_acceptance_11_rate_crossover():
    assert an.rate_crossover_check(4, 2) is True
    assert an.rate_crossover_check(4, 4) is True
    assert an.rate_crossover_check(8, 2) is True
    assert an.rate_crossover_check(8, 64) is False
    _report(11, "average-rate crossover holds for (4,2),(4,4),(8,2) and fails for (8,64)")


def test_acceptance_12_determinism_across_workers(tmp_path):
    spec = ExperimentSpec(
        scheme="hnim", detector="isape", config=SIM_CONFIG, snr_db=(0.0, 10.0),
        min_errors=150, max_bits=120_000, seed=121,
    )
    blobs = []
    for workers in (1, 2):
        sweep = run_sweep(spec, workers=workers)
        path = sweep_to_csv(sweep, "ber", tmp_path, f"workers{workers}.csv")
        blobs.append(open(path, "rb").read())
    assert blobs[0] == blobs[1]
    _report(12, "byte-identical sweep CSVs at one and two workers")
