import csv
import io
from math import log2

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fcwave.complexity import (
    ComplexityReport,
    blocks_per_symbol,
    fc_muls,
    ofdm_muls,
    split_radix_muls,
    table_csv,
    table_rows,
    td_filter_muls,
)
from fcwave.fcfb import FcConfig
from fcwave.ofdm import table_numerology

# reference rates: (allocation, overlap) -> muls per QAM symbol
FC_TABLE = {
    ("1 PRB", 0.5): 1441.83, ("1 PRB", 0.25): 979.83,
    ("4 PRBs", 0.5): 360.46, ("4 PRBs", 0.25): 244.96,
    ("50 PRBs", 0.5): 64.11, ("50 PRBs", 0.25): 46.89,
    ("12x4 PRBs", 0.5): 61.51, ("12x4 PRBs", 0.25): 44.75,
}


@pytest.fixture(scope="module")
def rows():
    return {(r["allocation"], r["overlap"]): r for r in table_rows()}


@pytest.mark.parametrize("n,expected", [(1, 0), (2, 0), (4, 0), (8, 4), (16, 20), (64, 196), (1024, 7172)])
def test_split_radix_counts(n, expected):
    assert split_radix_muls(n) == expected


@pytest.mark.parametrize("n", [0, 3, 12, 600])
def test_split_radix_rejects_non_powers(n):
    with pytest.raises(ValueError):
        split_radix_muls(n)


@given(st.integers(3, 14))
def test_split_radix_matches_formula(k):
    n = 2**k
    assert split_radix_muls(n) == n * (k - 3) + 4


def test_td_four_prb_uf_ofdm():
    num, L = table_numerology(4)
    r = td_filter_muls(L, num.L_CP, 1024, 73, num.n_active)
    assert round(r.muls_per_qam_symbol) == 128


def test_td_four_prb_long_fir():
    num, L = table_numerology(4)
    assert round(td_filter_muls(L, num.L_CP, 1024, 512, num.n_active).muls_per_qam_symbol) == 285


def test_td_one_prb_f_ofdm():
    num, L = table_numerology(1)
    r = td_filter_muls(L, num.L_CP, 1024, 512, num.n_active)
    assert r.muls_per_qam_symbol == pytest.approx(1139.0, abs=0.5)
    assert sum(r.breakdown.values()) == pytest.approx(r.muls_per_qam_symbol)
    assert r.breakdown["cp"] == 0


def test_td_degenerate_filter_is_pure_ifft():
    r = td_filter_muls(64, 5, 1024, 0, 48, mixing=False)
    assert r.muls_per_qam_symbol == pytest.approx((64 * (log2(64) - 3) + 4) / 48)


@pytest.mark.parametrize("key", sorted(FC_TABLE))
def test_fc_within_tolerance(rows, key):
    assert rows[key]["fc_muls"] == pytest.approx(FC_TABLE[key], rel=0.15)


@pytest.mark.parametrize("alloc", ["1 PRB", "4 PRBs", "50 PRBs", "12x4 PRBs"])
def test_overlap_reduction(rows, alloc):
    cut = 1 - rows[(alloc, 0.25)]["fc_muls"] / rows[(alloc, 0.5)]["fc_muls"]
    assert abs(cut - 0.30) <= 0.05


@pytest.mark.parametrize("alloc,ratio", [("1 PRB", 2.41), ("50 PRBs", 5.36)])
def test_ratio_vs_ofdm(rows, alloc, ratio):
    assert rows[(alloc, 0.5)]["fc_vs_ofdm"] == pytest.approx(ratio, rel=0.15)


def test_ratio_definition():
    num, L = table_numerology(4)
    cfg = FcConfig.from_overlap(1024, L, 0.5)
    r = fc_muls(cfg, num)
    assert r.ratio_vs_plain_ofdm == pytest.approx(r.muls_per_qam_symbol / ofdm_muls(num.n_active))
    assert sum(r.breakdown.values()) == pytest.approx(r.muls_per_qam_symbol)


def test_subband_split_only_changes_long_transform(rows):
    wide, split = rows[("50 PRBs", 0.5)], rows[("12x4 PRBs", 0.5)]
    assert abs(split["fc_muls"] / wide["fc_muls"] - 1) < 0.1


def test_more_subbands_amortize_long_transform():
    num, L = table_numerology(4)
    cfg = FcConfig.from_overlap(1024, L, 0.5)
    per = [fc_muls(cfg, num, n_subbands=k) for k in (1, 2, 6, 12)]
    long_part = [r.breakdown["long_idft"] for r in per]
    assert np.all(np.diff(long_part) < 0)
    for r in per:
        assert r.breakdown["short_dft"] == pytest.approx(per[0].breakdown["short_dft"])


def test_blocks_per_symbol_is_slot_average():
    num, L = table_numerology(4)
    cfg = FcConfig.from_overlap(1024, L, 0.5)
    b = blocks_per_symbol(num, cfg.L_S)
    assert b * num.symbols_per_slot * cfg.L_S == num.slot_length


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        ComplexityReport(-1.0, 1.0)
    with pytest.raises(ValueError):
        ComplexityReport(1.0, 1.0, {"filter": -2.0})


def test_table_csv_layout():
    rows = table_rows(overlaps=(0.5,), fir_lengths=(73,))
    text = table_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert list(parsed[0]) == ["allocation", "overlap", "fc_muls", "fc_vs_ofdm", "td_nfir73_muls"]
    assert [p["allocation"] for p in parsed] == ["1 PRB", "4 PRBs", "50 PRBs", "12x4 PRBs"]
    assert float(parsed[0]["fc_muls"]) == pytest.approx(rows[0]["fc_muls"], abs=0.005)
