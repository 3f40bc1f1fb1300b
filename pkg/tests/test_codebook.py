"""Codebook construction, lookup, validation, and serialization."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hnimsim.codebook import (
    Codebook,
    CodebookEntry,
    ConfigurationError,
    FrameConfig,
    IllegalPatternError,
    build_table1_codebook,
    generate_generic_codebook,
    im_codebook,
    ofdm_codebook,
    snm_codebook,
    validate_codebook,
)

# Expected contents of the built-in 16-row lookup table.
REFERENCE_ROWS = [
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


@pytest.fixture(scope="module")
def table1():
    return build_table1_codebook()


class TestTable1:
    def test_all_rows_exact(self, table1):
        assert len(table1) == 16
        for entry, (g, p1, p2, sap, count) in zip(table1, REFERENCE_ROWS):
            assert (entry.row_id, entry.p1_bits, entry.p2_bits, entry.sap,
                    entry.active_count) == (g, p1, p2, sap, count)

    @pytest.mark.parametrize(
        "row_id,sap,count",
        [(7, (1, 0, 0, 1), 2), (13, (0, 0, 0, 0), 0), (16, (1, 1, 1, 1), 4)],
    )
    def test_named_rows(self, table1, row_id, sap, count):
        e = table1.entries[row_id - 1]
        assert e.sap == sap and e.active_count == count

    def test_active_count_multiset(self, table1):
        counts = sorted(e.active_count for e in table1)
        assert counts == [0] + [1] * 4 + [2] * 6 + [3] * 4 + [4]
        assert table1.mean_active_count() == 2.0

    @pytest.mark.parametrize(
        "p1,p2,sap,count",
        [
            ((0, 0), (1, 1), (0, 0, 0, 1), 1),
            ((1, 0), (0, 1), (1, 0, 1, 1), 3),
            ((1, 1), (1, 0), (0, 1, 1, 0), 2),
        ],
    )
    def test_map_bits(self, table1, p1, p2, sap, count):
        e = table1.map_bits(p1, p2)
        assert e.sap == sap and e.active_count == count

    @pytest.mark.parametrize(
        "sap,p1,p2",
        [
            ((0, 1, 0, 1), (0, 1), (1, 1)),
            ((0, 0, 1, 1), (1, 1), (0, 1)),
            ((1, 1, 1, 0), (1, 0), (0, 0)),
        ],
    )
    def test_demap_sap(self, table1, sap, p1, p2):
        assert table1.demap_sap(sap) == (p1, p2)

    def test_roundtrip_both_directions(self, table1):
        for e in table1:
            assert table1.map_bits(*table1.demap_sap(e.sap)).sap == e.sap
            assert table1.demap_sap(table1.map_bits(e.p1_bits, e.p2_bits).sap) == (
                e.p1_bits, e.p2_bits)

    def test_map_bits_length_mismatch(self, table1):
        with pytest.raises(ConfigurationError):
            table1.map_bits((0, 1, 0), (0, 0))

    def test_table1_uses_every_pattern(self, table1):
        # all 2**4 patterns appear, so demapping any binary vector succeeds
        assert sorted(e.sap for e in table1) == sorted(
            tuple((v >> (3 - i)) & 1 for i in range(4)) for v in range(16))

    def test_demap_illegal_pattern(self):
        cb = im_codebook(4)  # only four of the sixteen patterns are legal
        with pytest.raises(IllegalPatternError):
            cb.demap_sap((1, 1, 1, 1))

    def test_demap_wrong_length(self, table1):
        with pytest.raises(ConfigurationError):
            table1.demap_sap((1, 0, 0))

    def test_amplitude_scales(self, table1):
        scales = table1.amplitude_scales(4.0)
        assert scales[12] == 0.0  # all-off row
        assert scales[0] == pytest.approx(2.0)  # I=1: sqrt(4/1)
        assert scales[15] == pytest.approx(1.0)  # I=4


class TestValidation:
    def test_table1_passes(self, table1):
        report = validate_codebook(table1)
        assert report.ok and report.injective_bits and report.injective_saps
        assert report.activation_counts == (8, 8, 8, 8)
        assert report.problems == ()

    def test_duplicate_sap_detected(self, table1):
        rows = list(table1.entries)
        # duplicate of row 9's pattern in place of row 16
        rows[15] = CodebookEntry(16, (1, 1), (1, 1), (1, 1, 1, 0), 3)
        report = validate_codebook(Codebook(rows, 4))
        assert not report.injective_saps and not report.ok

    def test_esa_failure_reported(self):
        rows = [
            CodebookEntry(1, (0,), (0,), (1, 0, 0, 0), 1),
            CodebookEntry(2, (0,), (1,), (1, 1, 0, 0), 2),
            CodebookEntry(3, (1,), (0,), (1, 0, 1, 0), 2),
            CodebookEntry(4, (1,), (1,), (1, 0, 0, 1), 2),
        ]
        report = validate_codebook(Codebook(rows, 4))
        assert report.injective_saps and not report.esa_ok and not report.ok
        assert report.activation_counts == (4, 1, 1, 1)


class TestGenericCodebook:
    @pytest.mark.parametrize("L", [2, 4, 8])
    def test_valid_for_powers_of_two(self, L):
        cb = generate_generic_codebook(L, seed=7)
        assert len(cb) == L * L
        report = validate_codebook(cb)
        assert report.ok
        assert report.activation_counts == tuple([L * L // 2] * L)

    def test_l2_structure(self):
        # only four length-2 patterns exist, so the codebook uses them all
        cb = generate_generic_codebook(2, seed=0)
        assert sorted(e.sap for e in cb) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_deterministic_given_seed(self):
        a = generate_generic_codebook(8, seed=3)
        b = generate_generic_codebook(8, seed=3)
        assert a.to_text() == b.to_text()

    def test_rejects_bad_length(self):
        with pytest.raises(ConfigurationError):
            generate_generic_codebook(6, seed=0)

    def test_no_silent_fallback_when_search_exhausted(self):
        with pytest.raises(ConfigurationError):
            generate_generic_codebook(4, seed=1, attempts=0)


class TestSerialization:
    def test_roundtrip_bit_exact(self, table1, tmp_path):
        path = tmp_path / "table1.txt"
        table1.save(path)
        loaded = Codebook.load(path)
        assert loaded.to_text() == table1.to_text()
        for a, b in zip(loaded, table1):
            assert a == b

    def test_text_row_format(self, table1):
        first = table1.to_text().splitlines()[0]
        assert first == "1 00 00 1000 1"

    def test_baseline_tables_roundtrip(self):
        for cb in (im_codebook(4), snm_codebook(4), ofdm_codebook(4)):
            again = Codebook.from_text(cb.to_text())
            assert again.to_text() == cb.to_text()


class TestBaselineTables:
    def test_im_lexicographic_patterns(self):
        cb = im_codebook(4)
        assert [e.sap for e in cb] == [
            (1, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0)]
        assert all(e.active_count == 2 for e in cb)

    def test_snm_leftmost_placement(self):
        cb = snm_codebook(4)
        assert [e.sap for e in cb] == [
            (1, 0, 0, 0), (1, 1, 0, 0), (1, 1, 1, 0), (1, 1, 1, 1)]
        assert cb.mean_active_count() == 2.5

    def test_ofdm_single_entry(self):
        cb = ofdm_codebook(4)
        assert len(cb) == 1 and cb.entries[0].active_count == 4


class TestFrameConfig:
    def test_defaults_consistent(self):
        cfg = FrameConfig()
        assert cfg.n_subblocks == 16 and cfg.bits_per_symbol == 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_fft": 60, "subblock_len": 8},
            {"mod_order": 3},
            {"mod_order": 1},
            {"n_cp": -1},
            {"p1": -2},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigurationError):
            FrameConfig(**kwargs)


@given(st.integers(0, 15))
def test_roundtrip_property_table1(value):
    cb = build_table1_codebook()
    p1 = ((value >> 3) & 1, (value >> 2) & 1)
    p2 = ((value >> 1) & 1, value & 1)
    entry = cb.map_bits(p1, p2)
    assert cb.demap_sap(entry.sap) == (p1, p2)


@given(st.sampled_from([2, 4, 8]), st.integers(0, 30))
def test_generic_codebook_roundtrip_property(L, seed):
    cb = generate_generic_codebook(L, seed=seed)
    for e in cb:
        assert cb.demap_sap(e.sap) == (e.p1_bits, e.p2_bits)
