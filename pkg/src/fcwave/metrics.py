"""Transmultiplexer responses and the passband/leakage quality measures.

The end-to-end response from every transmit subcarrier to every receive
subcarrier is obtained by driving unit QAM symbols through the actual
transmit and receive chains, one OFDM symbol position at a time over one
period of the frame structure. Because the chains are linear in each weight
diagonal, the responses are stored as Gram matrices over a basis of weight
diagonals; any set of transition weights is then evaluated as a small
quadratic form.
"""

from __future__ import annotations

import csv
import hashlib
import json
from math import gcd

import numpy as np

from .fcfb import FcConfigError, SynthesisEngine, WeightMask, _diagonal

__all__ = [
    "TmuxModel",
    "frame_period",
    "mse_to_db",
    "evm_avg",
    "evm_max",
    "sblr",
    "magnitude_response",
    "response_gram",
    "stopband_region",
    "psd_estimate",
    "metric_rows",
    "write_metric_csv",
    "config_hash",
]


def mse_to_db(mse):
    return 10 * np.log10(np.maximum(mse, 1e-300))


def frame_period(chains):
    """Symbols per period of the joint block/symbol pattern of ``chains``."""
    spp = {c.num.symbols_per_slot for c in chains}
    if len(spp) != 1:
        raise FcConfigError("chains must share the symbols-per-slot grouping")
    spp = spp.pop()
    slot_high = {c.to_high(c.num.slot_length) for c in chains}
    if len(slot_high) != 1:
        raise FcConfigError("chains must share the high-rate symbol timing")
    slot_high = slot_high.pop()
    hop = 1
    for c in chains:
        hop = hop * c.hop // gcd(hop, c.hop)
    k = hop // gcd(hop, slot_high)
    return spp * k, hop


def _basis_of(chain, variable):
    if chain.fc is None:
        return [None], None
    if variable:
        if not isinstance(chain.mask, WeightMask):
            raise FcConfigError("a designed side needs a WeightMask")
        return list(chain.mask.basis()), chain.mask.n_tbw
    return [chain.diagonal], None


class TmuxModel:
    """Exact end-to-end response model of one transmit/receive chain pair.

    Parameters
    ----------
    tx, rx : SubbandChain
        The two ends; they must share the high-rate symbol timing.
    design : {None, "tx", "rx", "both"}
        Which side's transition weights stay free. ``"both"`` ties the two
        sides to the same weights (matched filtering).
    span : int
        Symbols before and after the transmitted one that are observed.
    chunk : int, optional
        Number of subcarriers driven per batch.
    """

    def __init__(self, tx, rx, design=None, span=2, chunk=None):
        if design not in (None, "tx", "rx", "both"):
            raise ValueError(f"unknown design mode {design!r}")
        self.tx = tx
        self.rx = rx
        self.design = design
        self.span = int(span)
        self.period, self.hop = frame_period([tx, rx])
        self._tx_basis, T_tx = _basis_of(tx, design in ("tx", "both"))
        self._rx_basis, T_rx = _basis_of(rx, design in ("rx", "both"))
        if design == "both" and T_tx != T_rx:
            raise FcConfigError("matched design needs equal transition widths on both sides")
        self.n_tbw = T_tx if T_tx is not None else T_rx
        self.chunk = chunk
        f_tx = tx.frequencies()
        f_rx = rx.frequencies()
        match = np.abs(f_tx[:, None] - f_rx[None, :]) < 1e-9
        self.direct = np.where(match.any(1), match.argmax(1), -1)
        self.has_direct_rx = match.any(0)
        self._build()

    # ------------------------------------------------------------------
    def _window(self, s):
        span = self.span
        t_first = self.tx.to_high(self.tx.symbol_start(s - span - 1))
        t0 = t_first // self.hop * self.hop
        t_end = self.tx.to_high(self.tx.symbol_start(s + span + 2))
        return t0, t_end - t0

    def _responses(self, s, rows):
        """Responses ``(A, B, n_rows, 2 span + 1, n_rx)`` for TX subcarriers ``rows``."""
        n_tx = self.tx.num.n_active
        qam = np.zeros((len(rows), 1, n_tx), dtype=complex)
        qam[np.arange(len(rows)), 0, rows] = 1.0
        t0, length = self._window(s)
        out = []
        for a in self._tx_basis:
            y = self.tx.tx(qam, s, t0, diagonal=a)
            if y.shape[-1] < length:
                y = np.concatenate([y, np.zeros(y.shape[:-1] + (length - y.shape[-1],))], axis=-1)
            diags = None if self._rx_basis[0] is None else self._rx_basis
            z = self.rx.rx(y, t0, s - self.span, 2 * self.span + 1, diagonals=diags)
            out.append(z if diags is not None else z[None])
        return np.stack(out)

    def _build(self):
        P = self.period
        A, B = len(self._tx_basis), len(self._rx_basis)
        Q = A * B
        n_tx, n_rx = self.tx.num.n_active, self.rx.num.n_active
        D = 2 * self.span + 1
        self.G_rx = np.zeros((P, n_rx, Q, Q))
        self.h_rx = np.zeros((P, n_rx, Q))
        self.G_tx = np.zeros((P, n_tx, Q, Q))
        self.h_tx = np.zeros((P, n_tx, Q))
        chunk = self.chunk or max(1, int(4e6 // (Q * self._window(P)[1] + 1)))
        base = P * (1 + (self.span + 1) // P + 1)
        for j in range(P):
            s = base + j
            for lo in range(0, n_tx, chunk):
                rows = np.arange(lo, min(lo + chunk, n_tx))
                t = self._responses(s, rows).reshape(Q, len(rows), D, n_rx)
                g = np.einsum("qldk,pldk->ldkqp", t.conj(), t).real
                for d in range(D):
                    self.G_rx[(j + d - self.span) % P] += g[:, d].sum(0)
                self.G_tx[j, rows] += g.sum((1, 2))
                dk = self.direct[rows]
                ok = dk >= 0
                hd = t[:, ok, self.span, dk[ok]].real.T
                self.h_tx[j, rows[ok]] += hd
                self.h_rx[j, dk[ok]] += hd

    # ------------------------------------------------------------------
    def coefficients(self, weights=None, tx_weights=None, rx_weights=None):
        """Basis coefficient vector for the given transition weights."""
        if weights is not None:
            tx_weights = rx_weights = weights

        def side(basis, w, chain):
            if len(basis) == 1:
                return np.ones(1)
            if w is None:
                w = chain.mask.weights
            return np.concatenate([[1.0], np.asarray(w, dtype=float)])

        return np.kron(side(self._tx_basis, tx_weights, self.tx),
                       side(self._rx_basis, rx_weights, self.rx))

    def mse_grid(self, weights=None, perspective="rx", **kw):
        """MSE per (symbol position, subcarrier)."""
        k = self.coefficients(weights, **kw)
        if perspective == "rx":
            G, h, e = self.G_rx, self.h_rx, self.has_direct_rx
        elif perspective == "tx":
            G, h, e = self.G_tx, self.h_tx, self.direct >= 0
        else:
            raise ValueError(f"unknown perspective {perspective!r}")
        quad = np.einsum("...q,q->...", G @ k, k)
        return np.maximum(quad - 2 * h @ k + e, 0.0)

    def mse_per_subcarrier(self, weights=None, perspective="rx", **kw):
        """Normalized MSE per active subcarrier, averaged over symbol positions.

        The ``"rx"`` perspective collects all error landing on a receive
        subcarrier; ``"tx"`` follows the energy leaving a transmit subcarrier.
        Both have the same mean over a matched allocation.
        """
        mse = self.mse_grid(weights, perspective, **kw).mean(0)
        ref = self.has_direct_rx if perspective == "rx" else self.direct >= 0
        return mse[ref]

    def total_power(self, weights=None, **kw):
        """Sum of squared response magnitudes over all subcarrier pairs, per symbol."""
        k = self.coefficients(weights, **kw)
        return float(k @ self.G_rx.sum((0, 1)) @ k) / self.period

    def subcarrier_response(self, l, k, symbol=0, weights=None, **kw):
        """Response vector from TX subcarrier ``l`` to RX subcarrier ``k`` over the observed symbols."""
        s = self.period * (1 + (self.span + 1) // self.period + 1) + symbol % self.period
        t = self._responses(s, np.array([l]))
        coef = self.coefficients(weights, **kw)
        t = t.reshape(len(coef), 2 * self.span + 1, -1)
        return np.tensordot(coef, t, axes=1)[:, k]


def evm_avg(mse):
    """Average EVM in dB: mean of linear MSE values, then dB."""
    return float(mse_to_db(np.mean(mse)))


def evm_max(mse):
    return float(mse_to_db(np.max(mse)))


def sblr(leak_model, own_model, weights=None):
    """Subband leakage ratio in dB.

    ``leak_model`` maps TX subband m to RX subband n and ``own_model`` maps
    TX subband m to its own receiver.
    """
    if leak_model.rx is leak_model.tx:
        raise ValueError("leakage needs distinct transmit and receive subbands")
    if np.any(leak_model.direct >= 0):
        raise ValueError("leakage target overlaps the transmit subband")
    return float(mse_to_db(leak_model.total_power(weights) / own_model.total_power(weights)))


# ----------------------------------------------------------------------
def response_gram(fc, diagonals, density=16):
    """Quadratic form of the synthesis magnitude response.

    Returns ``(offsets, R)`` with long-bin frequency offsets from the subband
    center and ``R`` of shape ``(n_freq, K, K)`` such that
    ``M = c @ R @ c`` for the weight diagonal ``sum_i c_i diagonals[i]``.
    ``M`` averages the squared responses of the ``L_S`` shift-variant impulse
    responses, normalized by the squared interpolation factor.
    """
    diagonals = [_diagonal(d, fc.L) for d in diagonals]
    K = -(-fc.L // fc.L_S) + 1
    n_in = (2 * K + 1) * fc.L_S
    imp = np.zeros((fc.L_S, n_in), dtype=complex)
    imp[np.arange(fc.L_S), K * fc.L_S + np.arange(fc.L_S)] = 1.0
    nfft = int(density * fc.N)
    H = []
    for d in diagonals:
        eng = SynthesisEngine([fc], [d])
        y = np.concatenate([eng.process([imp]), eng.flush()], axis=-1)
        up = -(-y.shape[-1] // nfft)  # sample the DTFT on the nfft grid without aliasing
        H.append(np.fft.fft(y, n=up * nfft, axis=-1)[..., ::up])
    H = np.stack(H)
    I2 = float(fc.rate) ** 2
    R = np.einsum("alf,blf->fab", H, H.conj()).real / (fc.L_S * I2)
    f = np.arange(R.shape[0]) * fc.N / R.shape[0] - fc.center
    offsets = (f + fc.N / 2) % fc.N - fc.N / 2
    order = np.argsort(offsets)
    return offsets[order], R[order]


def magnitude_response(fc, mask, density=16):
    """Synthesis magnitude-squared response ``M`` (linear) vs. long-bin offset."""
    f, R = response_gram(fc, [_diagonal(mask, fc.L)], density)
    return f, R[:, 0, 0]


def stopband_region(mask, offsets):
    """Boolean selector of the stopband within ``offsets`` (long bins from center).

    The stopband starts at the first all-zero weight on each side.
    """
    lo, hi = mask.stopband_bins()
    half = mask.L // 2
    return (offsets <= lo - half) | (offsets >= hi - half)


# ----------------------------------------------------------------------
def psd_estimate(realizations, rbw_hz, fs_hz, nfft=None):
    """Averaged periodogram smoothed to a resolution bandwidth.

    Parameters
    ----------
    realizations : array_like
        ``(n_realizations, n_samples)`` complex streams.
    rbw_hz, fs_hz : float
        Resolution bandwidth of the rectangular smoothing kernel and the
        sampling rate.

    Returns
    -------
    freqs : ndarray
        Centered frequency axis in Hz.
    psd_db : ndarray
        Power per RBW in dB, scaled so the integrated PSD equals the mean
        time-domain power.
    """
    x = np.atleast_2d(np.asarray(realizations, dtype=complex))
    n = x.shape[-1]
    nfft = nfft or n
    spec = np.mean(np.abs(np.fft.fft(x, n=nfft, axis=-1)) ** 2, axis=0) / (n * nfft)
    # spec sums to mean power; smooth with a circular RBW-wide window
    width = max(1, int(round(rbw_hz / fs_hz * nfft)))
    kernel = np.zeros(nfft)
    kernel[:width] = 1.0
    kernel = np.roll(kernel, -(width // 2))
    smooth = np.real(np.fft.ifft(np.fft.fft(spec) * np.fft.fft(kernel)))
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft, 1 / fs_hz))
    return freqs, 10 * np.log10(np.maximum(np.fft.fftshift(smooth), 1e-300))


# ----------------------------------------------------------------------
def config_hash(obj):
    """Short stable hash of a JSON-serializable configuration."""
    text = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def metric_rows(cfg_hash, metrics):
    return [{"config_hash": cfg_hash, "metric": k, "value_db": float(v)} for k, v in metrics.items()]


def write_metric_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["config_hash", "metric", "value_db"])
        w.writeheader()
        w.writerows(rows)
