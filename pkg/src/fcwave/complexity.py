"""Real-multiplication rates of subband filtering schemes.

Counting rules: a complex by complex product costs four real
multiplications, a complex by real product two, and a length ``n``
split-radix transform ``n (log2 n - 3) + 4``. All rates are per QAM symbol.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import log2

__all__ = [
    "split_radix_muls",
    "ComplexityReport",
    "td_filter_muls",
    "fc_muls",
    "ofdm_muls",
    "blocks_per_symbol",
    "table_rows",
    "table_csv",
]


def split_radix_muls(n):
    """Real multiplications of a length-``n`` split-radix DFT."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise ValueError(f"split-radix length must be a power of two, got {n}")
    if n <= 2:
        return 0.0
    return n * (log2(n) - 3) + 4


@dataclass
class ComplexityReport:
    muls_per_qam_symbol: float
    ratio_vs_plain_ofdm: float
    breakdown: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.muls_per_qam_symbol < 0 or any(v < 0 for v in self.breakdown.values()):
            raise ValueError("multiplication counts must be non-negative")


def ofdm_muls(n_qam, L_OFDM=1024):
    """Plain CP-OFDM transmitter: one full-length IFFT per OFDM symbol."""
    return split_radix_muls(L_OFDM) / n_qam


def td_filter_muls(L, L_CP, N, N_FIR, N_SYMB, ifft=True, mixing=True, L_ref=1024):
    """Time-domain subband filtering (IFFT, CP, interpolating FIR, mixer).

    The FIR runs at the subband rate with ``N_FIR L / N`` taps, symmetric
    coefficients and separate real filters for I and Q. ``ifft`` and
    ``mixing`` switch the corresponding stages off, e.g. for a centered
    full-band filter.
    """
    stages = {
        "ifft": (L * (log2(L) - 3) + 4) / N_SYMB if ifft else 0.0,
        "cp": 0.0,
        "filter": N_FIR * L * (L + L_CP) / (N * N_SYMB),
        "mixing": 4 * (N + L_CP * N / L) / N_SYMB if mixing else 0.0,
    }
    total = sum(stages.values())
    return ComplexityReport(total, total / ofdm_muls(N_SYMB, L_ref), stages)


def blocks_per_symbol(num, L_S):
    """FC blocks per OFDM symbol, averaged over a slot (exact fraction)."""
    return Fraction(num.slot_length, num.symbols_per_slot * L_S)


def fc_muls(cfg, num, n_subbands=1, L_ref=1024):
    """FC-F-OFDM transmitter (or receiver) multiplication rate.

    Per OFDM symbol every subband runs its own IFFT; per FC block every
    subband runs a short DFT and weights its ``2 L_TBW`` transition bins
    (real weights on complex bins), and one long transform is shared by all
    subbands. The block phase rotation is folded into the bin mapping and the
    all-one passband weights are free. ``cfg`` and ``num`` describe one of
    ``n_subbands`` equal subbands.

    Parameters
    ----------
    cfg : FcConfig
    num : OfdmNumerology
    n_subbands : int
    """
    if n_subbands < 1:
        raise ValueError("at least one subband is required")
    mask_t = getattr(cfg, "n_tbw", None)
    T = 2 if mask_t is None else mask_t
    return _fc(cfg.L, cfg.L_S, cfg.N, num, T, n_subbands, L_ref)


def _fc(L, L_S, N, num, T, n_subbands, L_ref=1024):
    B = float(blocks_per_symbol(num, L_S))
    n_qam = num.n_active * n_subbands
    stages = {
        "ofdm_ifft": n_subbands * split_radix_muls(num.L_OFDM) / n_qam,
        "short_dft": B * n_subbands * split_radix_muls(L) / n_qam,
        "weights": B * n_subbands * 2 * (2 * T) / n_qam,
        "long_idft": B * split_radix_muls(N) / n_qam,
    }
    total = sum(stages.values())
    return ComplexityReport(total, total / ofdm_muls(n_qam, L_ref), stages)


# (label, n_prb per subband, n_subbands)
_CONFIGS = (("1 PRB", 1, 1), ("4 PRBs", 4, 1), ("50 PRBs", 50, 1), ("12x4 PRBs", 4, 12))


def table_rows(configs=_CONFIGS, overlaps=(0.5, 0.25), n_tbw=2, N=1024,
               fir_lengths=(73, 512)):
    """Rows of the FC vs. time-domain complexity comparison.

    Each row holds the allocation label, overlap factor, FC rate, FC rate
    relative to plain OFDM and one time-domain rate per FIR length. A
    full-band subband (``L == N``) is centered, so its time-domain rates
    count only the filter.
    """
    from .fcfb import FcConfig
    from .ofdm import table_numerology

    rows = []
    for label, n_prb, n_sub in configs:
        num, L = table_numerology(n_prb)
        full = L == N
        td = [td_filter_muls(L, num.L_CP, N, nf, num.n_active, ifft=not full, mixing=not full)
              for nf in fir_lengths]
        for lam in overlaps:
            cfg = FcConfig.from_overlap(N, L, lam)
            rep = _fc(cfg.L, cfg.L_S, cfg.N, num, n_tbw, n_sub)
            row = {
                "allocation": label,
                "overlap": float(lam),
                "fc_muls": rep.muls_per_qam_symbol,
                "fc_vs_ofdm": rep.ratio_vs_plain_ofdm,
            }
            for nf, r in zip(fir_lengths, td):
                row[f"td_nfir{nf}_muls"] = r.muls_per_qam_symbol
            rows.append(row)
    return rows


def table_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]))
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.2f}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
