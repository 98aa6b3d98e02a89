"""DFT helpers and overlap-save block framing shared by the signal paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "BlockFrame",
    "FramingError",
    "dft",
    "idft",
    "overlap_split",
    "frame_stream",
    "segment_stream",
    "concat_overlap_save",
]


class FramingError(ValueError):
    """Raised for inconsistent block sizes or overlap parameters."""


def dft(x, axis=-1):
    """Unnormalized forward DFT, ``X[k] = sum_n x[n] exp(-2j pi k n / n_fft)``."""
    x = np.asarray(x, dtype=complex)
    if x.shape[axis] == 0:
        raise FramingError("DFT length must be at least 1")
    return np.fft.fft(x, axis=axis)


def idft(X, axis=-1):
    """Inverse of :func:`dft` (carries the ``1/n`` factor)."""
    X = np.asarray(X, dtype=complex)
    if X.shape[axis] == 0:
        raise FramingError("DFT length must be at least 1")
    return np.fft.ifft(X, axis=axis)


def overlap_split(length, hop):
    """Leading and tailing overlap of a block of ``length`` advancing by ``hop``.

    Returns ``(lead, tail)`` with ``lead = ceil((length - hop) / 2)`` and
    ``tail = floor((length - hop) / 2)``.
    """
    if hop <= 0 or hop > length:
        raise FramingError(f"hop must satisfy 0 < hop <= length, got hop={hop}, length={length}")
    overlap = length - hop
    return (overlap + 1) // 2, overlap // 2


@dataclass(frozen=True)
class BlockFrame:
    """One overlap-save input block.

    ``samples[lead:lead + hop]`` is the region whose processed output is kept.
    """

    index: int
    samples: np.ndarray
    lead: int
    tail: int

    @property
    def hop(self):
        return len(self.samples) - self.lead - self.tail


def n_blocks(n_samples, hop, lead=0):
    """Number of blocks needed for a stream of ``n_samples``.

    With ``lead = 0`` the saved regions just cover the stream. With the
    block's leading overlap as ``lead`` the count also includes the blocks
    whose input still reaches the last sample, so filter tails are kept.
    """
    return -(-(int(n_samples) + int(lead)) // int(hop))


def frame_stream(x, length, hop, n_frames=None):
    """Overlapping frames of ``x`` along the last axis as a read-only view.

    Block ``r`` starts at stream sample ``r * hop - lead``; the stream is
    zero-padded at the head by ``lead`` samples and at the tail as needed.

    Returns an array of shape ``x.shape[:-1] + (n_frames, length)``.
    """
    x = np.asarray(x)
    lead, tail = overlap_split(length, hop)
    n = x.shape[-1]
    if n_frames is None:
        n_frames = n_blocks(n, hop)
    total = (n_frames - 1) * hop + length
    pad_tail = max(total - lead - n, 0)
    pad = [(0, 0)] * (x.ndim - 1) + [(lead, pad_tail)]
    xp = np.pad(x[..., : max(total - lead, 0)], pad)
    return sliding_window_view(xp, length, axis=-1)[..., ::hop, :][..., :n_frames, :]


def segment_stream(x, L, L_S):
    """Split a stream into overlap-save :class:`BlockFrame` objects.

    >>> [list(f.samples) for f in segment_stream([1, 2, 3, 4, 5, 6], 4, 2)]
    [[0, 1, 2, 3], [2, 3, 4, 5], [4, 5, 6, 0]]
    """
    if L_S > L or L_S <= 0:
        raise FramingError(f"invalid overlap: L_S={L_S} must be in (0, L={L}]")
    x = np.asarray(x)
    if x.ndim != 1:
        raise FramingError("segment_stream expects a 1-D stream")
    lead, tail = overlap_split(L, L_S)
    frames = frame_stream(x, L, L_S)
    return [BlockFrame(r, np.array(frames[r]), lead, tail) for r in range(frames.shape[0])]


def concat_overlap_save(blocks, N_S):
    """Keep the central ``N_S`` samples of every length-``N`` block, in order.

    ``blocks`` may be a sequence of 1-D arrays or an array whose last two axes
    are ``(n_blocks, N)``; leading axes are treated as batch dimensions.
    """
    if isinstance(blocks, (list, tuple)):
        lengths = {len(b) for b in blocks}
        if len(lengths) > 1:
            raise FramingError(f"inconsistent block lengths {sorted(lengths)}")
        if not blocks:
            return np.zeros(0, dtype=complex)
        blocks = np.stack([np.asarray(b) for b in blocks])
    blocks = np.asarray(blocks)
    N = blocks.shape[-1]
    lead, _ = overlap_split(N, N_S)
    kept = blocks[..., lead : lead + N_S]
    return kept.reshape(blocks.shape[:-2] + (blocks.shape[-2] * N_S,))
