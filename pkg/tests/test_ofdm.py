import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcwave.ofdm import (NUMEROLOGIES, AllocationError, OfdmNumerology, WolaParams, cp_ofdm_demodulate,
                         cp_ofdm_modulate, dft_despread, dft_spread, f_ofdm_filter, fir_response,
                         pre_equalizer, rc_ramp, subcarrier_offsets, table_numerology, uf_ofdm_filter,
                         wola_rx_demodulate, wola_tx)

from conftest import crandn


def qpsk(rng, *shape):
    return (rng.choice([-1, 1], shape) + 1j * rng.choice([-1, 1], shape)) / np.sqrt(2)


def test_cp_is_tail_copy():
    num = OfdmNumerology(4, 1, 1)
    y = cp_ofdm_modulate(np.ones((1, 1)), num)
    x = np.fft.ifft([1, 0, 0, 0])
    np.testing.assert_allclose(y, [x[3], x[0], x[1], x[2], x[3]])


def test_table_row_one_prb():
    num, L = table_numerology(1)
    assert (num.L_OFDM, num.L_CP, num.n_active, L) == (128, 9, 12, 128)
    assert num.symbol_length == 137
    y = cp_ofdm_modulate(np.ones((3, 12)), num, first_index=1)
    assert len(y) == 3 * 137
    # the first symbol of every group carries the extra CP samples
    assert num.cp_lengths(8).tolist() == [10] + [9] * 6 + [10]


@pytest.mark.parametrize("row", NUMEROLOGIES)
def test_roundtrip_every_table_row(row, rng):
    scs, n_act = row[0], row[1]
    num, L = table_numerology(n_act // 12, scs)
    assert num.n_active == n_act and num.L_OFDM == row[3] and num.L_CP == row[4] and L == row[5]
    q = qpsk(rng, 2 * num.symbols_per_slot + 1, n_act)
    y = cp_ofdm_modulate(q, num)
    assert len(y) == len(q) * num.symbol_length + 3 * num.first_cp_extension
    np.testing.assert_allclose(cp_ofdm_demodulate(y, num), q, atol=1e-12)


def test_allocation_errors():
    with pytest.raises(AllocationError):
        OfdmNumerology(64, 4, 65)
    with pytest.raises(AllocationError):
        cp_ofdm_modulate(np.ones((1, 5)), OfdmNumerology(64, 4, 6))
    with pytest.raises(AllocationError):
        table_numerology(1, scs_exp=3)


def test_active_bins_contiguous():
    np.testing.assert_array_equal(subcarrier_offsets(4), [-2, -1, 0, 1])


def test_window_offset_derotation(rng):
    num = OfdmNumerology(64, 8, 24)
    q = qpsk(rng, 5, 24)
    y = cp_ofdm_modulate(q, num)
    a = cp_ofdm_demodulate(y, num, window_offset=0)
    b = cp_ofdm_demodulate(y, num, window_offset=4)
    np.testing.assert_allclose(a, b, atol=1e-12)
    with pytest.raises(ValueError):
        cp_ofdm_demodulate(y, num, window_offset=9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n_taps=st.integers(1, 9), wo=st.integers(0, 8))
def test_cp_property_channel_dft(seed, n_taps, wo):
    rng = np.random.default_rng(seed)
    num = OfdmNumerology(64, 8, 40)
    taps = crandn(rng, n_taps)
    q = qpsk(rng, 4, 40)
    y = np.convolve(cp_ofdm_modulate(q, num), taps)
    wo = min(wo, num.L_CP - (n_taps - 1))
    z = cp_ofdm_demodulate(y, num, n_symbols=4, window_offset=wo)
    k = subcarrier_offsets(40)
    H = np.fft.fft(taps, 64)[k % 64]
    np.testing.assert_allclose(z, q * H, atol=1e-9)


def test_dft_spread():
    rng = np.random.default_rng(0)
    q = qpsk(rng, 12)
    np.testing.assert_allclose(dft_despread(dft_spread(q)), q, atol=1e-14)
    f = dft_spread(np.ones(12))
    assert np.count_nonzero(np.abs(f) > 1e-12) == 1


def _papr_db(x):
    return 10 * np.log10(np.maximum(np.abs(x) ** 2, 1e-300) / np.mean(np.abs(x) ** 2))


def test_dft_spread_lowers_papr():
    rng = np.random.default_rng(7)
    num = OfdmNumerology(128, 9, 12)
    q = qpsk(rng, 4000, 12)
    up = 8  # oversample so peaks are not missed
    numo = OfdmNumerology(128 * up, 0, 12)
    plain = cp_ofdm_modulate(q, numo)
    spread = cp_ofdm_modulate(dft_spread(q), numo)
    p_plain = np.quantile(_papr_db(plain), 1 - 1e-3)
    p_spread = np.quantile(_papr_db(spread), 1 - 1e-3)
    assert p_plain - p_spread >= 1.0
    assert num.n_active == 12


def test_wola_lengths():
    num = OfdmNumerology(1024, 72, 600)
    p = WolaParams(72)
    assert p.N_EXT == 72
    assert p.tx_window_length(num) == 1024 + 72 + 72
    assert p.rx_window_length(num) == 1024 + 72
    r = rc_ramp(72)
    np.testing.assert_allclose(r + r[::-1], 1.0)


def test_wola_zero_slope_is_identity(rng):
    num = OfdmNumerology(256, 18, 120, first_cp_extension=2)
    q = qpsk(rng, 9, 120)
    x = wola_tx(q, num, WolaParams(0))
    np.testing.assert_allclose(x, cp_ofdm_modulate(q, num), atol=1e-14)
    np.testing.assert_allclose(wola_rx_demodulate(x, num, WolaParams(0), 9), q, atol=1e-12)


def test_wola_tx_window_inside_cp_margin(rng):
    num = OfdmNumerology(1024, 72, 600)
    q = qpsk(rng, 14, 600)
    x = wola_tx(q, num, WolaParams(36))
    z = wola_rx_demodulate(x, num, WolaParams(0), 14)
    evm = 10 * np.log10(np.mean(np.abs(z - q) ** 2))
    assert evm <= -40


def test_wola_full_cp_slope_accepted(rng):
    num = OfdmNumerology(1024, 72, 600)
    q = qpsk(rng, 4, 600)
    x = wola_tx(q, num, WolaParams(72))
    z = wola_rx_demodulate(x, num, WolaParams(72), 4)
    assert z.shape == q.shape
    with pytest.raises(ValueError):
        wola_tx(q, num, WolaParams(73))


def _edge_bins(h, db):
    f = np.linspace(-60, 60, 24001)
    H = 20 * np.log10(np.abs(fir_response(h, f, 1024)))
    inside = f[H >= db]
    return inside.min(), inside.max(), f, H


def test_f_ofdm_filter():
    h0 = f_ofdm_filter(48, 0)
    h4 = f_ofdm_filter(48, 4)
    assert len(h0) == 512
    assert abs(h0.sum() - 1) < 1e-12
    lo0, hi0, _, _ = _edge_bins(h0, -6.02)
    lo4, hi4, _, _ = _edge_bins(h4, -6.02)
    assert abs((hi4 - lo4) - (hi0 - lo0) - 4) < 0.1
    H = np.abs(fir_response(h0, [24.0, -24.0], 1024))
    np.testing.assert_allclose(20 * np.log10(H), -6.02, atol=0.3)


@pytest.mark.parametrize("att,n", [(75, 73), (37, 37), (37, 73)])
def test_uf_ofdm_filter(att, n):
    h = uf_ofdm_filter(att, n)
    assert len(h) == n
    np.testing.assert_allclose(h, h[::-1])
    f = np.linspace(0, 512, 1 << 16)
    H = 20 * np.log10(np.abs(fir_response(h, f, 1024)))
    # first null, then the sidelobes
    first_min = np.argmax(np.diff(H) > 0)
    assert abs(H[first_min:].max() - H[0] + att) < 0.5


def test_pre_equalizer_inverts_magnitude():
    h = f_ofdm_filter(48, 0)
    f = subcarrier_offsets(48)
    np.testing.assert_allclose(pre_equalizer(h, f, 1024) * np.abs(fir_response(h, f, 1024)), 1.0)
