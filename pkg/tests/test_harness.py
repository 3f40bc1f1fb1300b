"""Sweep determinism, tallies, CSV output, config files, and the CLI."""

import math
import os

import pytest

from hnimsim import cli
from hnimsim.codebook import ConfigurationError, FrameConfig
from hnimsim.harness import (
    BATCH_BLOCKS,
    ExperimentSpec,
    parse_config_file,
    reproduce_figure,
    run_sweep,
    sweep_to_csv,
    write_csv,
)

FAST = dict(min_errors=50, max_bits=40_000)


def _spec(**kw):
    base = dict(scheme="hnim", detector="ml", snr_db=(0.0, 10.0), seed=21, **FAST)
    base.update(kw)
    return ExperimentSpec(**base)


class TestDeterminism:
    def test_same_seed_identical(self):
        a = run_sweep(_spec())
        b = run_sweep(_spec())
        for pa, pb in zip(a.points, b.points):
            assert (pa.bits_sent, pa.bit_errors, pa.block_errors) == (
                pb.bits_sent, pb.bit_errors, pb.block_errors)

    def test_seed_changes_results(self):
        a = run_sweep(_spec())
        b = run_sweep(_spec(seed=22))
        assert any(pa.bit_errors != pb.bit_errors for pa, pb in zip(a.points, b.points))

    def test_worker_count_invariance(self, tmp_path):
        files = []
        for workers, name in ((1, "w1"), (2, "w2")):
            sweep = run_sweep(_spec(), workers=workers)
            files.append(sweep_to_csv(sweep, "ber", tmp_path, name + ".csv"))
        assert open(files[0], "rb").read() == open(files[1], "rb").read()


class TestTallies:
    def test_conservation(self):
        sweep = run_sweep(_spec())
        for p in sweep.points:
            assert p.bit_errors <= p.bits_sent
            assert p.subblock_errors <= p.n_subblocks
            assert p.block_errors <= p.n_blocks
            assert p.n_subblocks == p.n_blocks * 16
            assert p.n_blocks % BATCH_BLOCKS == 0

    def test_stop_rule_stops_on_errors(self):
        sweep = run_sweep(_spec(snr_db=(0.0,), min_errors=10, max_bits=10**9))
        p = sweep.points[0]
        assert p.bit_errors >= 10
        # one batch was enough at 0 dB
        assert p.n_blocks == BATCH_BLOCKS

    def test_stop_rule_stops_on_bits(self):
        sweep = run_sweep(_spec(snr_db=(math.inf,), min_errors=1, max_bits=5000))
        p = sweep.points[0]
        assert p.bit_errors == 0 and p.bits_sent >= 5000

    def test_noise_free_sentinel_all_schemes(self):
        for scheme in ("hnim", "im", "snm", "ofdm"):
            sweep = run_sweep(_spec(scheme=scheme, detector="llr",
                                    snr_db=(math.inf,), min_errors=1, max_bits=4000))
            assert sweep.points[0].ber == 0.0

    def test_throughput_bounded_by_se(self):
        sweep = run_sweep(_spec())
        for p in sweep.points:
            assert 0.0 <= p.ber <= 1.0
            assert sweep.throughput(p) <= sweep.se + 1e-12


class TestSpecValidation:
    def test_bad_grid(self):
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(snr_db=(10.0, 10.0)))
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(snr_db=()))

    def test_cp_shorter_than_channel(self):
        cfg = FrameConfig(n_cp=4)
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(config=cfg))

    def test_unknown_ids(self):
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(scheme="gim"))
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(detector="sphere"))

    def test_nonpositive_stop_rule(self):
        with pytest.raises(ConfigurationError):
            run_sweep(_spec(min_errors=0))


class TestCsv:
    def test_header_and_rows(self, tmp_path):
        sweep = run_sweep(_spec())
        path = sweep_to_csv(sweep, "ber", tmp_path)
        lines = open(path).read().splitlines()
        assert lines[0] == "# metric=ber scheme=hnim detector=ml seed=21"
        assert len(lines) == 3
        snr, value, ci = lines[1].split(",")
        assert float(snr) == 0.0 and 0 <= float(value) <= 1 and float(ci) >= 0

    def test_infinity_written_readably(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", "ber", [(math.inf, 0.0, 0.0)], "hnim")
        assert "inf,0,0" in open(path).read()


class TestConfigFile:
    def test_parse_and_normalize(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text(
            "# comment line\n"
            "scheme = snm\n"
            "snr-start = 5\n"
            "max_bits = 9000   # inline comment\n"
            "\n"
        )
        cfg = parse_config_file(p)
        assert cfg == {"scheme": "snm", "snr_start": "5", "max_bits": "9000"}

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("scheme snm\n")
        with pytest.raises(ConfigurationError):
            parse_config_file(p)

    def test_cli_reads_config(self, tmp_path, capsys):
        p = tmp_path / "run.cfg"
        p.write_text(
            "scheme = im\nsnr-start = 0\nsnr-stop = 10\nsnr-step = 10\n"
            "min-errors = 20\nmax-bits = 20000\nseed = 9\n"
        )
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", str(p), "--out", str(out)])
        assert rc == 0
        text = open(out / "ber_im_ml.csv").read()
        assert "scheme=im" in text and "seed=9" in text

    def test_explicit_flags_override_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("scheme = im\nseed = 9\n")
        out = tmp_path / "out"
        rc = cli.main([
            "simulate", "--config", str(p), "--scheme", "snm",
            "--snr-start", "0", "--snr-stop", "0", "--snr-step", "5",
            "--min-errors", "20", "--max-bits", "20000", "--out", str(out),
        ])
        assert rc == 0
        assert os.path.exists(out / "ber_snm_ml.csv")

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("turbo = on\n")
        rc = cli.main(["simulate", "--config", str(p)])
        assert rc == 2


class TestCli:
    def test_analyze_se(self, tmp_path, capsys):
        rc = cli.main(["analyze", "--metric", "se", "--out", str(tmp_path)])
        assert rc == 0
        assert "1.3333" in capsys.readouterr().out
        assert os.path.exists(tmp_path / "se.csv")

    def test_analyze_rate(self, tmp_path):
        rc = cli.main([
            "analyze", "--metric", "rate", "--scheme", "hnim",
            "--snr-start", "-10", "--snr-stop", "30", "--snr-step", "20",
            "--out", str(tmp_path),
        ])
        assert rc == 0
        lines = open(tmp_path / "rate_hnim.csv").read().splitlines()
        assert len(lines) == 4

    def test_analyze_papr(self, tmp_path, capsys):
        rc = cli.main([
            "analyze", "--metric", "papr", "--scheme", "ofdm",
            "--blocks", "300", "--out", str(tmp_path),
        ])
        assert rc == 0
        assert "PAPR at CCDF 1e-2" in capsys.readouterr().out

    def test_analyze_abep(self, tmp_path):
        rc = cli.main([
            "analyze", "--metric", "abep", "--snr-start", "10", "--snr-stop", "30",
            "--snr-step", "10", "--draws", "500", "--out", str(tmp_path),
        ])
        assert rc == 0
        lines = open(tmp_path / "abep_bound.csv").read().splitlines()
        assert len(lines) == 4

    def test_error_reported_as_exit_code(self, tmp_path, capsys):
        rc = cli.main([
            "simulate", "--n-cp", "4", "--out", str(tmp_path),
            "--min-errors", "5", "--max-bits", "1000",
        ])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestReproduce:
    def test_fig3_files(self, tmp_path):
        paths = reproduce_figure("fig3", tmp_path)
        assert sorted(os.path.basename(p) for p in paths) == [
            "fig3_ee_ratio.csv", "fig3_se_ratio.csv"]
        lines = open(paths[1]).read().splitlines()
        assert len(lines) == 6  # header + five bars

    def test_fig2_files(self, tmp_path):
        paths = reproduce_figure("fig2", tmp_path)
        assert len(paths) == 4
        for p in paths:
            assert len(open(p).read().splitlines()) == 5

    def test_unknown_figure(self, tmp_path):
        with pytest.raises(ConfigurationError):
            reproduce_figure("fig9", tmp_path)


class TestOpsAccounting:
    def test_sweep_carries_detector_ops(self):
        sweep = run_sweep(_spec(detector="ml", snr_db=(0.0,)))
        assert sweep.ops.metrics_per_subblock == 81
        p = sweep.points[0]
        assert sweep.detector_ops(p) == p.n_subblocks * 81

    def test_channel_key_aliases(self, tmp_path):
        p = tmp_path / "alias.cfg"
        p.write_text("channel.taps = 6\nchannel.profile = exponential\nchannel.decay = 0.4\n")
        cfg = parse_config_file(p)
        assert cfg == {"taps": "6", "profile": "exponential", "decay": "0.4"}
