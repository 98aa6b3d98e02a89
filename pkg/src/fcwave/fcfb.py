"""Fast-convolution synthesis and analysis filter banks.

Two equivalent views of the same processing are provided:

* the streaming block engines (:class:`SynthesisEngine`,
  :class:`AnalysisEngine`) which run short DFT, frequency-domain weighting,
  bin mapping with per-block phase rotation, and a shared long transform with
  overlap-save framing;
* the explicit matrix model (:func:`synthesis_block`, :func:`synthesis_matrix`
  and their analysis duals) used for analysis, optimization and as a test
  oracle for the engines.

Scaling is amplitude preserving: a low-rate complex exponential inside the
passband leaves the synthesis bank with unit amplitude at the high rate, and
the analysis bank returns it with unit amplitude at the low rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .transforms import n_blocks, overlap_split

__all__ = [
    "FcConfig",
    "FcConfigError",
    "WeightMask",
    "phase_rotation",
    "block_rotation",
    "bin_map",
    "synthesis_block",
    "analysis_block",
    "synthesis_matrix",
    "analysis_matrix",
    "impulse_responses",
    "SynthesisEngine",
    "AnalysisEngine",
    "sfb_process",
    "afb_process",
    "FcSynthesisBank",
    "FcAnalysisBank",
]


class FcConfigError(ValueError):
    """A fast-convolution configuration violates a structural constraint."""


@dataclass(frozen=True)
class FcConfig:
    """Fast-convolution parameters of one subband.

    Parameters
    ----------
    N : int
        Long transform length (bins).
    N_S : int
        Non-overlapping samples per block on the high-rate side.
    L : int
        Short transform length (bins). On the analysis side this is the
        inverse transform length.
    L_S : int
        Non-overlapping samples per block on the low-rate side.
    center : int
        Long-transform bin receiving the low-rate DC bin, ``0 <= center < N``.
    """

    N: int
    N_S: int
    L: int
    L_S: int
    center: int = 0

    def __post_init__(self):
        for name in ("N", "N_S", "L", "L_S"):
            if int(getattr(self, name)) <= 0:
                raise FcConfigError(f"{name} must be positive")
        if self.N_S > self.N:
            raise FcConfigError(f"N_S={self.N_S} exceeds N={self.N}")
        if self.L_S > self.L:
            raise FcConfigError(f"L_S={self.L_S} exceeds L={self.L}")
        if self.L > self.N:
            raise FcConfigError(f"L={self.L} exceeds N={self.N}")
        if self.N * self.L_S != self.N_S * self.L:
            raise FcConfigError(
                f"rate identity N/L == N_S/L_S violated: {self.N}/{self.L} != {self.N_S}/{self.L_S}"
            )
        if self.L % 2:
            raise FcConfigError(f"L={self.L} must be even")
        step = self.N // gcd(self.N, self.N_S)
        if self.L % step:
            raise FcConfigError(f"L={self.L} must be a multiple of N/gcd(N, N_S)={step}")
        if not 0 <= self.center < self.N:
            raise FcConfigError(f"center={self.center} outside [0, {self.N})")

    @classmethod
    def from_overlap(cls, N, L, overlap, center=0):
        """Build a configuration from the overlap factor ``1 - N_S/N``."""
        overlap = Fraction(overlap).limit_denominator(4 * N)
        N_S = Fraction(N) * (1 - overlap)
        L_S = Fraction(L) * (1 - overlap)
        if N_S.denominator != 1 or L_S.denominator != 1:
            raise FcConfigError(f"overlap {overlap} gives non-integer block hop for N={N}, L={L}")
        return cls(int(N), int(N_S), int(L), int(L_S), int(center) % int(N))

    @property
    def rate(self):
        """Rate conversion factor ``N / L`` as an exact fraction."""
        return Fraction(self.N, self.L)

    @property
    def overlap(self):
        return 1 - Fraction(self.N_S, self.N)

    @property
    def lead(self):
        return overlap_split(self.L, self.L_S)[0]

    @property
    def tail(self):
        return overlap_split(self.L, self.L_S)[1]

    @property
    def N_lead(self):
        return overlap_split(self.N, self.N_S)[0]

    @property
    def N_tail(self):
        return overlap_split(self.N, self.N_S)[1]

    def with_center(self, center):
        return FcConfig(self.N, self.N_S, self.L, self.L_S, int(center) % self.N)


@dataclass(frozen=True)
class WeightMask:
    """Frequency-domain window of one subband in FFT-shifted order.

    The diagonal is laid out as zeros, the transition weights in rising
    order, ``n_active`` ones, the mirrored transition weights and zeros.
    Index ``L // 2`` holds the low-rate DC bin.
    """

    L: int
    n_active: int
    weights: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        T = len(self.weights)
        if self.n_active < 0 or self.n_active > self.L:
            raise FcConfigError(f"n_active={self.n_active} outside [0, L={self.L}]")
        if (self.L - self.n_active) // 2 < T:
            raise FcConfigError(
                f"transition band of {T} bins does not fit: n_active + 2*T = "
                f"{self.n_active + 2 * T} > L = {self.L}"
            )
        if any(not 0.0 <= w <= 1.0 for w in self.weights):
            raise FcConfigError("transition weights must lie in [0, 1]")

    @classmethod
    def rectangular(cls, L, n_active):
        return cls(L, n_active, ())

    @classmethod
    def raised_cosine(cls, L, n_active, n_tbw):
        """Sine-squared ramp ``d_i = sin^2(pi (i + 0.5) / (2 n_tbw))``."""
        i = np.arange(n_tbw)
        return cls(L, n_active, tuple(np.sin(np.pi * (i + 0.5) / (2 * n_tbw)) ** 2))

    @property
    def n_tbw(self):
        return len(self.weights)

    @property
    def first_active(self):
        """Shifted-order index of the first all-one weight."""
        return -(-(self.L - self.n_active) // 2)

    def with_weights(self, weights):
        return WeightMask(self.L, self.n_active, tuple(weights))

    def diagonal(self):
        T = self.n_tbw
        d = np.asarray(self.weights, dtype=float)
        lo = self.first_active - T
        hi = (self.L - self.n_active) // 2 - T
        return np.concatenate([np.zeros(lo), d, np.ones(self.n_active), d[::-1], np.zeros(hi)])

    def basis(self):
        """Diagonals ``B_0 .. B_T`` with ``diagonal() == B_0 + sum_i d_i B_{i+1}``."""
        T = self.n_tbw
        fa = self.first_active
        out = np.zeros((T + 1, self.L))
        out[0, fa : fa + self.n_active] = 1.0
        for i in range(T):
            out[i + 1, fa - T + i] = 1.0
            out[i + 1, fa + self.n_active + T - 1 - i] = 1.0
        return out

    def stopband_bins(self):
        """Shifted-order indices ``(lower_edge, upper_edge)`` of the first zero weights."""
        fa = self.first_active
        return fa - self.n_tbw - 1, fa + self.n_active + self.n_tbw


def _diagonal(mask, L):
    if isinstance(mask, WeightMask):
        if mask.L != L:
            raise FcConfigError(f"mask length {mask.L} does not match L={L}")
        return mask.diagonal()
    d = np.asarray(mask)
    if d.shape != (L,):
        raise FcConfigError(f"mask length {d.shape} does not match L={L}")
    return d


def phase_rotation(r, cfg):
    """Block phase rotation ``exp(2j pi r theta)`` with ``theta = c L_S / L``.

    The angle is reduced exactly with integer arithmetic so the value does not
    drift with the block index.
    """
    if r < 0:
        raise ValueError("block index must be non-negative")
    num = (int(r) * cfg.center * cfg.L_S) % cfg.L
    return np.exp(2j * np.pi * num / cfg.L)


def block_rotation(r, cfg):
    """Unit factor applied by the bin mapping of block(s) ``r``.

    This is :func:`phase_rotation` times the constant ``exp(-2j pi c N_lead / N)``
    that references the modulation to the absolute high-rate time axis.
    """
    r = np.asarray(r, dtype=np.int64)
    num = (r * cfg.center * cfg.N_S - cfg.center * cfg.N_lead) % cfg.N
    return np.exp(2j * np.pi * num / cfg.N)


def bin_map(cfg):
    """Long-transform bin of every shifted short-transform bin."""
    return (cfg.center - cfg.L // 2 + np.arange(cfg.L)) % cfg.N


def _dft_matrix(n):
    return np.fft.fft(np.eye(n), axis=0)


def synthesis_block(cfg, mask, r):
    """Explicit ``N_S x L`` synthesis sub-block of block ``r``.

    Composes short DFT, half-length circular shift, diagonal weighting,
    bin mapping with rotation, long inverse DFT and central-row selection.
    """
    d = _diagonal(mask, cfg.L)
    W_L = _dft_matrix(cfg.L)
    P = np.roll(np.eye(cfg.L), -(cfg.L // 2), axis=1)  # (P x)[k] = x[(k + L/2) mod L]
    M = np.zeros((cfg.N, cfg.L), dtype=complex)
    M[bin_map(cfg), np.arange(cfg.L)] = block_rotation(r, cfg)
    W_N_inv = np.conj(_dft_matrix(cfg.N)) / cfg.N
    S = np.eye(cfg.N)[cfg.N_lead : cfg.N_lead + cfg.N_S]
    scale = cfg.N / cfg.L
    return scale * S @ W_N_inv @ M @ np.diag(d) @ P @ W_L


def analysis_block(cfg, mask, r):
    """Explicit ``L_S x N`` analysis sub-block of block ``r``."""
    d = _diagonal(mask, cfg.L)
    W_N = _dft_matrix(cfg.N)
    Mt = np.zeros((cfg.L, cfg.N), dtype=complex)
    Mt[np.arange(cfg.L), bin_map(cfg)] = np.conj(block_rotation(r, cfg))
    P_inv = np.roll(np.eye(cfg.L), cfg.L // 2, axis=1)  # undo the half-length shift
    W_L_inv = np.conj(_dft_matrix(cfg.L)) / cfg.L
    S = np.eye(cfg.L)[cfg.lead : cfg.lead + cfg.L_S]
    scale = cfg.L / cfg.N
    return scale * S @ W_L_inv @ P_inv @ np.diag(d) @ Mt @ W_N


def synthesis_matrix(cfg, mask, n_in):
    """Dense operator mapping an ``n_in``-sample low-rate stream to the SFB output.

    The blocks ``F_r`` are placed ``N_S`` rows and ``L_S`` columns apart;
    columns that fall in the zero padding are dropped. Every block touching
    an input sample is included, so the output carries the filter tail.
    """
    R = n_blocks(n_in, cfg.L_S, cfg.lead)
    F = np.zeros((R * cfg.N_S, n_in), dtype=complex)
    for r in range(R):
        blk = synthesis_block(cfg, mask, r)
        c0 = r * cfg.L_S - cfg.lead
        lo, hi = max(c0, 0), min(c0 + cfg.L, n_in)
        F[r * cfg.N_S : (r + 1) * cfg.N_S, lo:hi] += blk[:, lo - c0 : hi - c0]
    return F


def analysis_matrix(cfg, mask, n_in):
    """Dense operator mapping an ``n_in``-sample high-rate stream to the AFB output."""
    R = n_blocks(n_in, cfg.N_S, cfg.N_lead)
    G = np.zeros((R * cfg.L_S, n_in), dtype=complex)
    for r in range(R):
        blk = analysis_block(cfg, mask, r)
        c0 = r * cfg.N_S - cfg.N_lead
        lo, hi = max(c0, 0), min(c0 + cfg.N, n_in)
        G[r * cfg.L_S : (r + 1) * cfg.L_S, lo:hi] += blk[:, lo - c0 : hi - c0]
    return G


def impulse_responses(cfg, mask, side="synthesis"):
    """The shift-variant impulse responses of one bank.

    Returns one array per input phase (``L_S`` for synthesis, ``N_S`` for
    analysis). Each response covers exactly the output rows of the blocks that
    touch the input sample, in time order.
    """
    if side == "synthesis":
        hop_in, len_in, lead_in = cfg.L_S, cfg.L, cfg.lead
        build = synthesis_block
    elif side == "analysis":
        hop_in, len_in, lead_in = cfg.N_S, cfg.N, cfg.N_lead
        build = analysis_block
    else:
        raise ValueError(f"unknown side {side!r}")
    K = -(-len_in // hop_in) + 1
    blocks = [build(cfg, mask, r) for r in range(2 * K + 1)]
    out = []
    for j in range(hop_in):
        t = K * hop_in + j
        parts = [blk[:, t - (r * hop_in - lead_in)] for r, blk in enumerate(blocks)
                 if 0 <= t - (r * hop_in - lead_in) < len_in]
        out.append(np.concatenate(parts))
    return out


def _frames(buf, length, hop, R):
    """``R`` frames of ``length`` samples, ``hop`` apart, from the buffer start."""
    return sliding_window_view(buf[..., : (R - 1) * hop + length], length, axis=-1)[..., ::hop, :]


class _Engine:
    """Shared buffering for the streaming banks."""

    def __init__(self, configs, masks, first_block=0):
        configs = list(configs)
        masks = list(masks)
        if not configs:
            raise FcConfigError("at least one subband is required")
        if len(configs) != len(masks):
            raise FcConfigError("one mask per subband is required")
        N = {c.N for c in configs}
        N_S = {c.N_S for c in configs}
        if len(N) != 1 or len(N_S) != 1:
            raise FcConfigError(f"subbands must share N and N_S, got N={sorted(N)}, N_S={sorted(N_S)}")
        self.configs = configs
        self.diagonals = [_diagonal(m, c.L) for c, m in zip(configs, masks)]
        self.N = configs[0].N
        self.N_S = configs[0].N_S
        self.maps = [bin_map(c) for c in configs]
        self.active = [np.flatnonzero(d) for d in self.diagonals]
        self.first_block = int(first_block)
        self.block = self.first_block


class SynthesisEngine(_Engine):
    """Streaming FC synthesis bank.

    Feed per-subband low-rate chunks with :meth:`process`; finish with
    :meth:`flush`. Leading axes of the chunks are batch dimensions and must be
    identical for all subbands. ``first_block`` sets the global index of
    the first block, i.e. the stream starts at absolute low-rate sample
    ``first_block * L_S`` (negative indices are allowed).
    """

    def __init__(self, configs, masks, first_block=0):
        super().__init__(configs, masks, first_block)
        self._buffers = None
        self._received = [0] * len(self.configs)

    def _init_buffers(self, batch_shape):
        self._buffers = [np.zeros(batch_shape + (c.lead,), dtype=complex) for c in self.configs]

    def _ready(self):
        counts = []
        for c, got in zip(self.configs, self._received):
            # block r needs absolute samples up to r*L_S - lead + L - 1
            counts.append(max((got - c.L + c.lead) // c.L_S + 1, 0))
        return min(counts) - (self.block - self.first_block)

    def process(self, chunks):
        chunks = [np.asarray(x, dtype=complex) for x in chunks]
        if len(chunks) != len(self.configs):
            raise FcConfigError("one input stream per subband is required")
        batch = chunks[0].shape[:-1]
        if any(x.shape[:-1] != batch for x in chunks):
            raise FcConfigError("all subband streams must share batch dimensions")
        if self._buffers is None:
            self._init_buffers(batch)
        for m, x in enumerate(chunks):
            self._buffers[m] = np.concatenate([self._buffers[m], x], axis=-1)
            self._received[m] += x.shape[-1]
        return self._run(self._ready())

    def flush(self):
        """Zero-pad every subband and emit the remaining blocks."""
        if self._buffers is None:
            return np.zeros(0, dtype=complex)
        total = max(n_blocks(got, c.L_S, c.lead) for c, got in zip(self.configs, self._received))
        R = total - (self.block - self.first_block)
        for m, c in enumerate(self.configs):
            need = (R - 1) * c.L_S + c.L if R > 0 else 0
            short = need - self._buffers[m].shape[-1]
            if short > 0:
                pad = [(0, 0)] * (self._buffers[m].ndim - 1) + [(0, short)]
                self._buffers[m] = np.pad(self._buffers[m], pad)
        return self._run(max(R, 0))

    def _run(self, R):
        batch = self._buffers[0].shape[:-1]
        if R <= 0:
            return np.zeros(batch + (0,), dtype=complex)
        r = self.block + np.arange(R)
        Y = np.zeros(batch + (R, self.N), dtype=complex)
        for m, c in enumerate(self.configs):
            frames = _frames(self._buffers[m], c.L, c.L_S, R)
            X = np.fft.fftshift(np.fft.fft(frames, axis=-1), axes=-1)
            act = self.active[m]
            w = self.diagonals[m][act] * (c.N / c.L)
            rot = block_rotation(r, c)[:, None]
            Y[..., self.maps[m][act]] += X[..., act] * w * rot
            self._buffers[m] = self._buffers[m][..., R * c.L_S :]
        self.block += R
        y = np.fft.ifft(Y, axis=-1)[..., self.configs[0].N_lead : self.configs[0].N_lead + self.N_S]
        return y.reshape(batch + (R * self.N_S,))


class AnalysisEngine(_Engine):
    """Streaming FC analysis bank; the dual of :class:`SynthesisEngine`."""

    def __init__(self, configs, masks, first_block=0):
        super().__init__(configs, masks, first_block)
        lead = overlap_split(self.N, self.N_S)[0]
        self._lead = lead
        self._buffer = None
        self._received = 0

    def process(self, chunk):
        chunk = np.asarray(chunk, dtype=complex)
        if self._buffer is None:
            self._buffer = np.zeros(chunk.shape[:-1] + (self._lead,), dtype=complex)
        self._buffer = np.concatenate([self._buffer, chunk], axis=-1)
        self._received += chunk.shape[-1]
        R = max((self._received - self.N + self._lead) // self.N_S + 1, 0) - (self.block - self.first_block)
        return self._run(R)

    def flush(self):
        if self._buffer is None:
            return [np.zeros(0, dtype=complex) for _ in self.configs]
        R = n_blocks(self._received, self.N_S, self._lead) - (self.block - self.first_block)
        need = (R - 1) * self.N_S + self.N if R > 0 else 0
        short = need - self._buffer.shape[-1]
        if short > 0:
            pad = [(0, 0)] * (self._buffer.ndim - 1) + [(0, short)]
            self._buffer = np.pad(self._buffer, pad)
        return self._run(max(R, 0))

    def _run(self, R):
        batch = self._buffer.shape[:-1]
        if R <= 0:
            return [np.zeros(batch + (0,), dtype=complex) for _ in self.configs]
        frames = _frames(self._buffer, self.N, self.N_S, R)
        Y = np.fft.fft(frames, axis=-1)
        r = self.block + np.arange(R)
        outs = []
        for m, c in enumerate(self.configs):
            Z = np.zeros(batch + (R, c.L), dtype=complex)
            act = self.active[m]
            w = self.diagonals[m][act] * (c.L / c.N)
            Z[..., act] = Y[..., self.maps[m][act]] * np.conj(block_rotation(r, c))[:, None] * w
            z = np.fft.ifft(np.fft.ifftshift(Z, axes=-1), axis=-1)[..., c.lead : c.lead + c.L_S]
            outs.append(z.reshape(batch + (R * c.L_S,)))
        self._buffer = self._buffer[..., R * self.N_S :]
        self.block += R
        return outs


def sfb_process(streams, configs, masks):
    """Synthesize one high-rate stream from per-subband low-rate streams."""
    eng = SynthesisEngine(configs, masks)
    head = eng.process(streams)
    return np.concatenate([head, eng.flush()], axis=-1)


def afb_process(stream, configs, masks):
    """Split a high-rate stream into per-subband low-rate streams."""
    eng = AnalysisEngine(configs, masks)
    head = eng.process(stream)
    tail = eng.flush()
    return [np.concatenate([a, b], axis=-1) for a, b in zip(head, tail)]


class FcSynthesisBank(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the FC synthesis bank.

    ``transform`` takes a list with one low-rate stream per subband and
    returns the combined high-rate stream.
    """

    def __init__(self, configs=None, masks=None):
        self.configs = configs
        self.masks = masks

    def fit(self, X=None, y=None):
        if not self.configs:
            raise FcConfigError("at least one subband is required")
        _Engine(self.configs, self.masks)
        self.n_subbands_ = len(self.configs)
        self.rate_ = [c.rate for c in self.configs]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_subbands_")
        if len(X) != self.n_subbands_:
            raise ValueError(f"expected {self.n_subbands_} subband streams, got {len(X)}")
        return sfb_process(X, self.configs, self.masks)


class FcAnalysisBank(TransformerMixin, BaseEstimator):
    """Estimator wrapper around the FC analysis bank."""

    def __init__(self, configs=None, masks=None):
        self.configs = configs
        self.masks = masks

    def fit(self, X=None, y=None):
        if not self.configs:
            raise FcConfigError("at least one subband is required")
        _Engine(self.configs, self.masks)
        self.n_subbands_ = len(self.configs)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_subbands_")
        return afb_process(X, self.configs, self.masks)
