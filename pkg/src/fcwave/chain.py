"""Per-subband CP-OFDM transmit and receive chains on an absolute time axis.

A chain is either FC filtered (the subband passes through one branch of the
synthesis or analysis bank) or plain, in which case the CP-OFDM numerology
is given directly at the high rate and the subband is moved to its center bin
with a mixer. In both cases every OFDM symbol carries a phase correction so
that subcarrier phases are referenced to the symbol's own FFT window; a
filtered end can therefore be paired with a plain end.

Amplitudes follow the high-rate convention: an FC transmit chain scales its
low-rate samples by ``L / N`` so a unit QAM symbol has the same high-rate
amplitude as in a plain ``N_OFDM``-point CP-OFDM signal, and an FC receive
chain undoes it. Matched FC chains see no net scaling.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .fcfb import AnalysisEngine, FcConfigError, SynthesisEngine, WeightMask, _diagonal
from .ofdm import cp_ofdm_demodulate, cp_ofdm_modulate, subcarrier_offsets

__all__ = ["SubbandChain"]


def _unit_phase(num, den):
    """``exp(2j pi num / den)`` with the integer reduction done exactly."""
    num = np.asarray(num, dtype=object) % den
    return np.exp(2j * np.pi * num.astype(float) / den)


class SubbandChain:
    """CP-OFDM chain of one subband at one end of a link.

    Parameters
    ----------
    num : OfdmNumerology
        Numerology at the subband's own rate (the high rate when ``fc`` is None).
    fc : FcConfig, optional
        FC branch; its ``center`` is the long-transform bin of the DC subcarrier.
    mask : WeightMask or ndarray, optional
        FC weights; defaults to a rectangular mask over the active bins.
    center : int
        DC bin of a plain chain on an ``N``-point grid.
    N : int, optional
        Grid size of a plain chain; defaults to ``num.L_OFDM``.
    window_offset : int
        Receiver FFT window advance into the CP (0 = end of CP).
    """

    def __init__(self, num, fc=None, mask=None, center=0, N=None, window_offset=0):
        self.num = num
        self.fc = fc
        self.window_offset = int(window_offset)
        if fc is not None:
            if mask is None:
                mask = WeightMask.rectangular(fc.L, num.n_active * fc.L // num.L_OFDM)
            self.diagonal = _diagonal(mask, fc.L)
            self.mask = mask
            self.N = fc.N
            self.center = fc.center
            self.rate = fc.rate
            self.hop = fc.N_S
        else:
            self.mask = None
            self.diagonal = None
            self.N = int(N or num.L_OFDM)
            self.center = int(center) % self.N
            self.rate = Fraction(1)
            self.hop = 1
        if (self.rate * num.L_OFDM).denominator != 1 or (self.rate * num.L_CP).denominator != 1:
            raise FcConfigError("OFDM symbol does not map to an integer number of high-rate samples")

    # timing, in samples at the chain's own rate
    def symbol_start(self, s):
        num = self.num
        s = np.asarray(s)
        slot, within = np.divmod(s, num.symbols_per_slot)
        return slot * num.slot_length + within * num.symbol_length + (within > 0) * num.first_cp_extension

    def fft_start(self, s):
        return self.symbol_start(s) + self._cp(s)

    def _cp(self, s):
        s = np.asarray(s)
        return self.num.L_CP + self.num.first_cp_extension * (s % self.num.symbols_per_slot == 0)

    def to_high(self, n):
        """Convert a chain-rate sample index to the high rate (exact)."""
        out = Fraction(int(n)) * self.rate
        if out.denominator != 1:
            raise FcConfigError(f"sample {n} is not on the high-rate grid")
        return int(out)

    def frequencies(self):
        """Long-bin frequency (float) of every active subcarrier."""
        spacing = self.N / (self.num.L_OFDM * self.rate)
        return self.center + subcarrier_offsets(self.num.n_active) * float(spacing)

    def _symbol_phase(self, s):
        # exp(2j pi center * t_fft / N) with t_fft the high-rate FFT window start
        low = self.fft_start(s).astype(object)
        if self.fc is not None:
            return _unit_phase(self.center * low, self.fc.L)
        return _unit_phase(self.center * low, self.N)

    def check_start(self, t0):
        if t0 % self.hop:
            raise FcConfigError(f"stream start {t0} is not a multiple of the block hop {self.hop}")
        return int(Fraction(t0) / self.rate)

    def tx(self, qam, first_symbol=0, t0=None, diagonal=None):
        """Transmit ``qam`` of shape ``(..., n_symbols, n_active)``.

        Returns the high-rate stream starting at absolute sample ``t0``
        (default: the latest block boundary at or before the first symbol).
        ``diagonal`` overrides the chain's FC weights.
        """
        qam = np.asarray(qam, dtype=complex)
        n_sym = qam.shape[-2]
        idx = first_symbol + np.arange(n_sym)
        comp = np.conj(self._symbol_phase(idx))[:, None]
        low = cp_ofdm_modulate(qam * comp, self.num, first_index=first_symbol)
        start = int(self.symbol_start(first_symbol))
        if t0 is None:
            t0 = self.to_high(start) // self.hop * self.hop
        t0_low = self.check_start(t0)
        pad = start - t0_low
        if pad < 0:
            raise ValueError("stream start lies after the first symbol")
        low = np.concatenate([np.zeros(low.shape[:-1] + (pad,), dtype=complex), low], axis=-1)
        if self.fc is not None:
            diag = self.diagonal if diagonal is None else diagonal
            eng = SynthesisEngine([self.fc], [diag], first_block=t0_low // self.fc.L_S)
            head = eng.process([low / float(self.rate)])
            return np.concatenate([head, eng.flush()], axis=-1)
        n = t0 + np.arange(low.shape[-1], dtype=object)
        return low * _unit_phase(self.center * n, self.N)

    def rx(self, stream, t0, first_symbol, n_symbols, diagonals=None):
        """Demodulate ``n_symbols`` symbols from a high-rate stream starting at ``t0``.

        ``diagonals`` (FC chains only) evaluates several weight diagonals in
        one pass; the result then gains a leading axis.
        """
        stream = np.asarray(stream, dtype=complex)
        t0_low = self.check_start(t0)
        if self.fc is not None:
            diags = [self.diagonal] if diagonals is None else list(diagonals)
            eng = AnalysisEngine([self.fc] * len(diags), diags, first_block=t0 // self.fc.N_S)
            head = eng.process(stream)
            tail = eng.flush()
            lows = np.stack([np.concatenate([a, b], axis=-1) for a, b in zip(head, tail)])
            lows *= float(self.rate)
        else:
            if diagonals is not None:
                raise FcConfigError("a plain chain has no weights")
            n = t0 + np.arange(stream.shape[-1], dtype=object)
            lows = (stream * np.conj(_unit_phase(self.center * n, self.N)))[None]
        start = int(self.symbol_start(first_symbol)) - t0_low
        syms = cp_ofdm_demodulate(lows, self.num, n_symbols, self.window_offset,
                                  first_index=first_symbol, start=start)
        idx = first_symbol + np.arange(n_symbols)
        syms = syms * self._symbol_phase(idx)[:, None]
        return syms[0] if diagonals is None else syms
