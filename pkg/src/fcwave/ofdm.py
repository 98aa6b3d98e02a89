"""CP-OFDM modulation, DFT spreading and the reference subband waveforms.

The reference processors (WOLA windowing, Hann-windowed sinc f-OFDM filters
and Dolph-Chebyshev CP-UF-OFDM filters) are time-domain comparisons for the
fast-convolution scheme.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import windows

__all__ = [
    "OfdmNumerology",
    "AllocationError",
    "NUMEROLOGIES",
    "table_numerology",
    "subcarrier_offsets",
    "cp_ofdm_modulate",
    "cp_ofdm_demodulate",
    "dft_spread",
    "dft_despread",
    "WolaParams",
    "rc_ramp",
    "wola_tx",
    "wola_rx_demodulate",
    "f_ofdm_filter",
    "uf_ofdm_filter",
    "fir_response",
    "pre_equalizer",
]


class AllocationError(ValueError):
    """Requested subcarrier allocation does not fit the transform."""


@dataclass(frozen=True)
class OfdmNumerology:
    """CP-OFDM parameters of one subband at its own sampling rate.

    ``first_cp_extension`` lengthens the CP of the first symbol of every
    group of ``symbols_per_slot`` symbols.
    """

    L_OFDM: int
    L_CP: int
    n_active: int
    scs_exp: int = 0
    first_cp_extension: int = 0
    symbols_per_slot: int = 7

    def __post_init__(self):
        if self.L_OFDM <= 0 or self.L_CP < 0:
            raise AllocationError("L_OFDM must be positive and L_CP non-negative")
        if not 0 < self.n_active <= self.L_OFDM:
            raise AllocationError(f"{self.n_active} active subcarriers do not fit L_OFDM={self.L_OFDM}")
        if self.first_cp_extension < 0:
            raise AllocationError("first CP extension must be non-negative")

    @property
    def symbol_length(self):
        return self.L_OFDM + self.L_CP

    @property
    def slot_length(self):
        return self.symbols_per_slot * self.symbol_length + self.first_cp_extension

    @property
    def scs_hz(self):
        return 15e3 * 2 ** self.scs_exp

    def cp_lengths(self, n_symbols, first_index=0):
        """CP length of symbols ``first_index .. first_index + n_symbols - 1``."""
        idx = first_index + np.arange(n_symbols)
        return self.L_CP + self.first_cp_extension * (idx % self.symbols_per_slot == 0)

    def symbol_starts(self, n_symbols, first_index=0):
        """Start sample of each symbol relative to the start of symbol ``first_index``."""
        lengths = self.cp_lengths(n_symbols, first_index) + self.L_OFDM
        return np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(int)

    def high_rate(self, N, L):
        """High-rate ``(N_OFDM, N_CP)`` after FC interpolation by ``N / L``."""
        rate = Fraction(N, L)
        return rate * self.L_OFDM, rate * self.L_CP


# rows: (scs_exp, n_active, N, L_OFDM, L_CP, L)
NUMEROLOGIES = (
    (0, 12, 1024, 128, 9, 128),
    (0, 48, 1024, 128, 9, 128),
    (0, 600, 1024, 1024, 72, 1024),
    (1, 12, 1024, 128, 9, 256),
    (1, 24, 1024, 128, 9, 256),
    (1, 300, 1024, 512, 36, 1024),
)


def table_numerology(n_prb, scs_exp=0, extended_first_cp=True):
    """Numerology and short FC length for a row of the 10 MHz example table.

    Returns ``(numerology, L)``. Allocations not listed use the row with the
    same transform lengths (narrow rows for up to 4 PRBs, else the full-band
    row).
    """
    n_active = 12 * n_prb
    rows = [r for r in NUMEROLOGIES if r[0] == scs_exp]
    if not rows:
        raise AllocationError(f"no tabulated numerology for SCS exponent {scs_exp}")
    exact = [r for r in rows if r[1] == n_active]
    row = exact[0] if exact else (rows[0] if n_active <= rows[1][1] else rows[-1])
    _, _, N, L_OFDM, L_CP, L = row
    if n_active > L_OFDM:
        raise AllocationError(f"{n_prb} PRBs do not fit L_OFDM={L_OFDM}")
    # one extra 8-sample CP (high rate) per half subframe keeps blocks aligned
    ext = 8 * L // N if extended_first_cp else 0
    return OfdmNumerology(L_OFDM, L_CP, n_active, scs_exp, ext, 7 * 2 ** scs_exp), L


def subcarrier_offsets(n_active):
    """Signed DFT-bin offsets of the active subcarriers, contiguous around DC."""
    return np.arange(n_active) - n_active // 2


def _active_bins(num):
    return subcarrier_offsets(num.n_active) % num.L_OFDM


def cp_ofdm_modulate(qam, num, first_index=0):
    """CP-OFDM modulate ``qam`` of shape ``(..., n_symbols, n_active)``.

    Uses the unnormalized inverse DFT convention (``1/L_OFDM`` on the
    inverse), so :func:`cp_ofdm_demodulate` is the exact inverse.
    """
    qam = np.asarray(qam, dtype=complex)
    if qam.shape[-1] != num.n_active:
        raise AllocationError(f"expected {num.n_active} symbols per OFDM symbol, got {qam.shape[-1]}")
    n_sym = qam.shape[-2]
    grid = np.zeros(qam.shape[:-1] + (num.L_OFDM,), dtype=complex)
    grid[..., _active_bins(num)] = qam
    body = np.fft.ifft(grid, axis=-1)
    cps = num.cp_lengths(n_sym, first_index)
    if np.all(cps == cps[0]):
        cp = cps[0]
        sym = np.concatenate([body[..., num.L_OFDM - cp :], body], axis=-1) if cp else body
        return sym.reshape(qam.shape[:-2] + (n_sym * (num.L_OFDM + cp),))
    parts = [np.concatenate([body[..., s, num.L_OFDM - cp :], body[..., s, :]], axis=-1)
             for s, cp in enumerate(cps)]
    return np.concatenate(parts, axis=-1)


def cp_ofdm_demodulate(stream, num, n_symbols=None, window_offset=0, first_index=0, start=0):
    """Demodulate a CP-OFDM stream into ``(..., n_symbols, n_active)`` symbols.

    Parameters
    ----------
    window_offset : int
        How many samples the FFT window is advanced into the CP from its
        end-of-CP position; ``0 <= window_offset <= L_CP``. The resulting
        linear phase slope is removed.
    start : int
        Stream sample where symbol ``first_index`` begins.
    """
    stream = np.asarray(stream, dtype=complex)
    if not 0 <= window_offset <= num.L_CP:
        raise ValueError(f"window_offset={window_offset} outside [0, L_CP={num.L_CP}]")
    if n_symbols is None:
        n_symbols = 0
        while start + num.symbol_starts(n_symbols + 1, first_index)[-1] + num.symbol_length + (
            num.first_cp_extension if (first_index + n_symbols) % num.symbols_per_slot == 0 else 0
        ) <= stream.shape[-1]:
            n_symbols += 1
    starts = start + num.symbol_starts(n_symbols, first_index) + num.cp_lengths(n_symbols, first_index)
    idx = (starts - window_offset)[:, None] + np.arange(num.L_OFDM)
    if n_symbols and idx.max() >= stream.shape[-1]:
        raise ValueError("stream too short for the requested symbols")
    spec = np.fft.fft(stream[..., idx], axis=-1)
    k = subcarrier_offsets(num.n_active)
    out = spec[..., _active_bins(num)]
    if window_offset:
        out = out * np.exp(2j * np.pi * k * window_offset / num.L_OFDM)
    return out


def dft_spread(qam, axis=-1):
    """Unitary size-K DFT precoding of each block of ``K`` QAM symbols."""
    return np.fft.fft(np.asarray(qam, dtype=complex), axis=axis, norm="ortho")


def dft_despread(freq, axis=-1):
    return np.fft.ifft(np.asarray(freq, dtype=complex), axis=axis, norm="ortho")


@dataclass(frozen=True)
class WolaParams:
    """Weighted overlap-add parameters; the extension equals the slope length."""

    N_WS: int

    @property
    def N_EXT(self):
        return self.N_WS

    def tx_window_length(self, num):
        return num.L_OFDM + num.L_CP + self.N_WS

    def rx_window_length(self, num):
        return num.L_OFDM + self.N_WS


def rc_ramp(n):
    """Rising raised-cosine edge; ``rc_ramp(n) + rc_ramp(n)[::-1] == 1``."""
    if n == 0:
        return np.zeros(0)
    return 0.5 * (1 - np.cos(np.pi * (np.arange(n) + 0.5) / n))


def wola_tx(qam, num, params, first_index=0):
    """WOLA CP-OFDM transmitter for ``qam`` of shape ``(n_symbols, n_active)``.

    Each symbol is cyclically extended by ``N_EXT`` samples after its end,
    windowed with raised-cosine edges of ``N_WS`` samples and overlap-added so
    the extension overlaps the next symbol's CP start; symbol timing is that
    of plain CP-OFDM.
    """
    qam = np.asarray(qam, dtype=complex)
    n_sym = qam.shape[0]
    ws = params.N_WS
    grid = np.zeros((n_sym, num.L_OFDM), dtype=complex)
    grid[:, _active_bins(num)] = qam
    body = np.fft.ifft(grid, axis=-1)
    cps = num.cp_lengths(n_sym, first_index)
    starts = num.symbol_starts(n_sym, first_index)
    total = starts[-1] + cps[-1] + num.L_OFDM + ws
    out = np.zeros(total, dtype=complex)
    ramp = rc_ramp(ws)
    for s in range(n_sym):
        cp = cps[s]
        if ws > cp:
            raise ValueError(f"window slope {ws} exceeds CP length {cp}")
        ext = np.concatenate([body[s, num.L_OFDM - cp :], body[s], body[s, :ws]])
        w = np.ones(len(ext))
        if ws:
            w[:ws] = ramp
            w[-ws:] = ramp[::-1]
        out[starts[s] : starts[s] + len(ext)] += ext * w
    return out


def wola_rx_demodulate(stream, num, params, n_symbols, first_index=0, start=0):
    """WOLA receiver: centered window of ``L_OFDM + N_WS`` samples, folded, then FFT."""
    stream = np.asarray(stream, dtype=complex)
    ws = params.N_WS
    if ws > num.L_CP:
        raise ValueError(f"window slope {ws} exceeds CP length {num.L_CP}")
    ramp = rc_ramp(ws)
    cps = num.cp_lengths(n_symbols, first_index)
    starts = start + num.symbol_starts(n_symbols, first_index)
    L = num.L_OFDM
    out = np.empty((n_symbols, num.n_active), dtype=complex)
    k = subcarrier_offsets(num.n_active)
    for s in range(n_symbols):
        cp = cps[s]
        s0 = (cp - ws) // 2
        seg = stream[starts[s] + s0 : starts[s] + s0 + L + ws].copy()
        if ws:
            seg[:ws] *= ramp
            seg[L:] *= ramp[::-1]
            seg[:ws] += seg[L:]
        spec = np.fft.fft(seg[:L])[_active_bins(num)]
        out[s] = spec * np.exp(2j * np.pi * k * (cp - s0) / L)
    return out


def f_ofdm_filter(n_subcarriers, tone_offset=0, n_fir=512, n_fft=1024, center_bin=0.0):
    """Hann-windowed sinc subband filter.

    The sinc passband spans ``n_subcarriers + tone_offset`` subcarrier
    spacings of an ``n_fft``-point OFDM grid; the taps are normalized to unit
    DC gain before modulation to ``center_bin``.
    """
    width = (n_subcarriers + tone_offset) / n_fft
    n = np.arange(n_fir) - (n_fir - 1) / 2
    h = width * np.sinc(width * n) * windows.hann(n_fir, sym=True)
    h = h / h.sum()
    return h * np.exp(2j * np.pi * center_bin * n / n_fft) if center_bin else h


def uf_ofdm_filter(stopband_atten_db, n_fir, n_fft=1024, center_bin=0.0):
    """Dolph-Chebyshev FIR with the given sidelobe attenuation, unit DC gain."""
    with warnings.catch_warnings():
        # the low-attenuation warning concerns spectral analysis, not FIR design
        warnings.simplefilter("ignore", UserWarning)
        h = windows.chebwin(n_fir, at=stopband_atten_db)
    h = h / h.sum()
    n = np.arange(n_fir) - (n_fir - 1) / 2
    return h * np.exp(2j * np.pi * center_bin * n / n_fft) if center_bin else h


def fir_response(h, freqs_bins, n_fft):
    """Frequency response of centered taps ``h`` at ``freqs_bins`` of an ``n_fft`` grid."""
    h = np.asarray(h)
    n = np.arange(len(h)) - (len(h) - 1) / 2
    f = np.asarray(freqs_bins, dtype=float)[..., None]
    return np.exp(-2j * np.pi * f * n / n_fft) @ h


def pre_equalizer(h, freqs_bins, n_fft):
    """Per-subcarrier amplitude inversion of a filter response."""
    return 1.0 / np.abs(fir_response(h, freqs_bins, n_fft))
