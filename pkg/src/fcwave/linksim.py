"""Uncoded link and spectrum simulation.

A scenario describes one target transmitter and optional interferers. Each
transmitter sums its subband signals, passes them through an optional power
amplifier and is then mixed into the received stream with its own time and
power offset. The target subbands are detected with their own waveform
specific receivers and compared with the transmitted symbols.

Signals are simulated subframe by subframe (two slots). Every subframe is
generated on its own time axis, truncated to the subframe plus half the guard
period on each side with raised-cosine edges, and placed on a common stream
with a period of subframe length plus guard.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve

from .chain import SubbandChain
from .fcfb import FcConfig, FcConfigError, WeightMask
from .metrics import mse_to_db, psd_estimate
from .ofdm import (
    AllocationError,
    OfdmNumerology,
    WolaParams,
    dft_despread,
    dft_spread,
    f_ofdm_filter,
    pre_equalizer,
    rc_ramp,
    subcarrier_offsets,
    table_numerology,
    uf_ofdm_filter,
    wola_rx_demodulate,
    wola_tx,
)
from .rfmodels import R_LOAD, PolyPa, RappPa, apply_ibo, mean_power_dbm

__all__ = [
    "WAVEFORMS",
    "qam_alphabet",
    "Subband",
    "Transmitter",
    "LinkScenario",
    "LinkResult",
    "apply_channel",
    "exponential_channel",
    "noise_power_for_snr",
    "asynchronous_mix",
    "adjacent_center",
    "transmit",
    "run_link",
    "run_link_trials",
    "link_psd",
    "max_power_search",
]

log = logging.getLogger(__name__)

WAVEFORMS = ("fc", "cp-ofdm", "wola", "f-ofdm", "uf-ofdm")
_BITS = {"qpsk": 2, "16qam": 4, "64qam": 6, "256qam": 8}


def qam_alphabet(modulation):
    """Square QAM points with unit average energy."""
    try:
        m = 2 ** (_BITS[modulation.lower()] // 2)
    except KeyError:
        raise ValueError(f"unknown modulation {modulation!r}") from None
    lvl = np.arange(m) * 2 - (m - 1)
    pts = (lvl[:, None] + 1j * lvl[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def _detect(y, alphabet):
    # nearest point, done per axis for square QAM
    lv = np.unique(alphabet.real)
    re = np.abs(y.real[..., None] - lv).argmin(-1)
    im = np.abs(y.imag[..., None] - lv).argmin(-1)
    return re * len(lv) + im


# ----------------------------------------------------------------------
# scenario description
@dataclass
class Subband:
    """One subband signal.

    Parameters
    ----------
    n_prb : int
        Allocation in PRBs of 12 subcarriers.
    center : int
        Long-transform bin (on the ``N``-point high-rate grid) of the DC
        subcarrier.
    waveform : str
        ``"fc"`` (FC filtered CP-OFDM), ``"cp-ofdm"``, ``"wola"``,
        ``"f-ofdm"`` or ``"uf-ofdm"``.
    mask : WeightMask or sequence of float, optional
        FC weights or just the transition weights; defaults to a
        sine-squared ramp of ``n_tbw`` bins.
    wola_ws, wola_rx_ws : int
        WOLA transmit and receive window slopes (high-rate samples); the
        receive slope defaults to the transmit one.
    n_fir, uf_atten_db, tone_offset : int or float
        Filter length, Dolph-Chebyshev sidelobe level and f-OFDM passband
        extension in subcarriers. CP-UF-OFDM filters every PRB separately.
    """

    n_prb: int = 4
    center: int = 0
    waveform: str = "fc"
    scs_exp: int = 0
    modulation: str = "qpsk"
    dft_spread: bool = False
    overlap: float = 0.5
    n_tbw: int = 2
    mask: object = None
    wola_ws: int = 72
    wola_rx_ws: int | None = None
    tone_offset: int = 0
    n_fir: int = 512
    uf_atten_db: float = 37.0

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"unknown waveform {self.waveform!r}; expected one of {WAVEFORMS}")
        if self.n_prb < 1:
            raise AllocationError("a subband needs at least one PRB")
        qam_alphabet(self.modulation)


@dataclass
class Transmitter:
    """Subbands sharing one power amplifier.

    ``pa`` is ``None``, ``"rapp"``, ``"poly"`` or an amplifier object. The
    drive level is set by ``ibo_db`` relative to the amplifier's input 1 dB
    compression point. ``power_offset_db`` scales the signal at the receiver
    and ``time_offset`` delays it (high-rate samples).
    """

    subbands: list = field(default_factory=list)
    pa: object = None
    ibo_db: float = 11.6
    time_offset: int = 0
    power_offset_db: float = 0.0


@dataclass
class LinkScenario:
    target: Transmitter
    interferers: list = field(default_factory=list)
    channel_taps: tuple = (1.0,)
    snr_db: float | None = None
    rx_window: object = "end"
    guard: int = 72
    truncate: bool = True
    n_subframes: int = 10
    seed: int = 0
    equalize: bool = False
    normalize_gain: bool = True
    N: int = 1024
    keep_symbols: bool = False

    def __post_init__(self):
        if self.guard < 0:
            raise ValueError("guard period must be non-negative")
        if not self.target.subbands:
            raise ValueError("the target transmitter has no subbands")
        if self.n_subframes < 1:
            raise ValueError("at least one subframe is needed")


@dataclass
class LinkResult:
    """Per-subband detection results; EVM values in dB."""

    evm_per_subcarrier_db: list
    evm_avg_db: list
    evm_max_db: list
    ser: list
    gain: list
    tx_power_dbm: float
    n_clamped: int
    overlapping_bins: int
    symbols: list | None = None
    reference: list | None = None

    @property
    def evm_avg_total_db(self):
        lin = np.concatenate([10 ** (np.asarray(e) / 10) for e in self.evm_per_subcarrier_db])
        return float(mse_to_db(lin.mean()))

    def as_dict(self):
        return {
            "evm_avg_db": [float(v) for v in self.evm_avg_db],
            "evm_max_db": [float(v) for v in self.evm_max_db],
            "evm_avg_total_db": self.evm_avg_total_db,
            "ser": [float(v) for v in self.ser],
            "tx_power_dbm": float(self.tx_power_dbm),
            "n_clamped": int(self.n_clamped),
            "overlapping_bins": int(self.overlapping_bins),
        }


# ----------------------------------------------------------------------
# channel and mixing
def apply_channel(stream, taps=(1.0,), noise_power=0.0, seed=None):
    """Linear convolution with ``taps`` plus complex white Gaussian noise.

    ``noise_power`` is the mean squared magnitude per sample. The output has
    ``len(stream) + len(taps) - 1`` samples.
    """
    stream = np.asarray(stream, dtype=complex)
    taps = np.atleast_1d(np.asarray(taps, dtype=complex))
    out = fftconvolve(stream, taps) if len(taps) > 1 else stream * taps[0]
    if noise_power > 0:
        rng = np.random.default_rng(seed)
        out = out + np.sqrt(noise_power / 2) * (
            rng.standard_normal(out.shape) + 1j * rng.standard_normal(out.shape))
    return out


def noise_power_for_snr(stream, snr_db):
    return float(np.mean(np.abs(stream) ** 2) * 10 ** (-snr_db / 10))


def exponential_channel(rms_delay, n_taps=None, seed=None, normalize=False):
    """Random taps with an exponentially decaying power profile.

    The decay is chosen so the discrete mean power profile has an RMS delay
    spread of ``rms_delay`` samples and unit total power. Tap phases and
    Rayleigh amplitudes are random; ``normalize=True`` scales each
    realization to unit energy instead, which biases the mean profile.
    """
    if rms_delay <= 0:
        return np.ones(1, dtype=complex)
    n_taps = int(n_taps or max(2, np.ceil(10 * rms_delay)))
    n = np.arange(n_taps)

    def spread(tau):
        p = np.exp(-n / tau)
        p /= p.sum()
        m = p @ n
        return np.sqrt(p @ n**2 - m**2) - rms_delay

    hi = 1e3 * rms_delay
    if spread(hi) < 0:
        raise ValueError(f"{n_taps} taps cannot reach an RMS delay spread of {rms_delay}")
    tau = brentq(spread, 1e-6, hi)
    p = np.exp(-n / tau)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    h = np.sqrt(p / 2) * (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps))
    return h / np.linalg.norm(h) if normalize else h


def asynchronous_mix(target, interferer, offset=0, power_offset_db=0.0):
    """Add ``interferer`` delayed by ``offset`` samples and scaled by ``power_offset_db``.

    The result has the length of ``target``; a negative offset advances the
    interferer.
    """
    target = np.asarray(target, dtype=complex)
    if np.isneginf(power_offset_db):
        return target.copy()
    interferer = np.asarray(interferer, dtype=complex)
    n = len(target)
    shifted = np.zeros(n, dtype=complex)
    if offset >= 0:
        seg = interferer[: max(0, n - offset)]
        shifted[offset : offset + len(seg)] = seg
    else:
        seg = interferer[-offset : -offset + n]
        shifted[: len(seg)] = seg
    return target + shifted * 10 ** (power_offset_db / 20)


def adjacent_center(subband, n_prb, scs_exp=0, guard=0, side=1, N=1024):
    """DC bin for an ``n_prb`` subband next to ``subband``.

    The edge-most subcarrier centers of the two subbands are one 15 kHz bin
    plus ``guard`` bins apart; ``side`` is +1 (above) or -1 (below).
    """
    sp_a = 2 ** subband.scs_exp * N // 1024
    sp_b = 2 ** scs_exp * N // 1024
    off_a = subcarrier_offsets(12 * subband.n_prb) * sp_a
    off_b = subcarrier_offsets(12 * n_prb) * sp_b
    gap = N // 1024 * (1 + guard)
    if side > 0:
        return int(subband.center + off_a[-1] + gap - off_b[0]) % N
    return int(subband.center + off_a[0] - gap - off_b[-1]) % N


# ----------------------------------------------------------------------
# waveform processors
def _high_numerology(sb, N):
    num, _ = table_numerology(sb.n_prb, sb.scs_exp)
    scale = N // 1024
    L_OFDM = N // 2**sb.scs_exp
    return OfdmNumerology(L_OFDM, 72 * scale // 2**sb.scs_exp, num.n_active, sb.scs_exp,
                          8 * scale, num.symbols_per_slot)


def _window_offset(rx_window, num):
    if rx_window == "end":
        return 0
    if rx_window == "center":
        return num.L_CP // 2
    wo = int(rx_window)
    if not 0 <= wo <= num.L_CP:
        raise ValueError(f"RX window offset {wo} outside [0, {num.L_CP}]")
    return wo


class _Processor:
    """Transmit/receive pair for one subband on a subframe time axis."""

    def __init__(self, sb, N, rx_window):
        self.sb = sb
        self.N = N
        wf = sb.waveform
        if wf == "fc":
            num, L = table_numerology(sb.n_prb, sb.scs_exp)
            if L > N:
                raise FcConfigError(f"short transform {L} exceeds N={N}")
            fc = FcConfig.from_overlap(N, L, sb.overlap, sb.center)
            n_bins = num.n_active * L // num.L_OFDM
            if isinstance(sb.mask, WeightMask):
                mask = sb.mask
            elif sb.mask is not None:
                mask = WeightMask(L, n_bins, tuple(sb.mask))
            else:
                mask = WeightMask.raised_cosine(L, n_bins, sb.n_tbw)
            self.chain = SubbandChain(num, fc, mask, window_offset=_window_offset(rx_window, num))
        else:
            num = _high_numerology(sb, N)
            wo = _window_offset(rx_window, num)
            self.chain = SubbandChain(num, None, center=sb.center, N=N, window_offset=wo)
        self.num = self.chain.num
        self.hop = self.chain.hop
        self.groups = []
        if wf in ("f-ofdm", "uf-ofdm"):
            n_act = num.n_active
            if wf == "f-ofdm":
                h = f_ofdm_filter(n_act, sb.tone_offset, sb.n_fir, num.L_OFDM)
                members = [np.arange(n_act)]
            else:
                # one filter per PRB, as in resource-block filtered UF-OFDM
                h = uf_ofdm_filter(sb.uf_atten_db, sb.n_fir, num.L_OFDM)
                members = [np.arange(j, j + 12) for j in range(0, n_act, 12)]
            k = subcarrier_offsets(n_act)
            spacing = N / num.L_OFDM
            n = np.arange(len(h)) - (len(h) - 1) / 2
            for idx in members:
                mid = k[idx].mean()
                eq = pre_equalizer(h, k[idx] - mid, num.L_OFDM)
                h_mod = h * np.exp(2j * np.pi * (sb.center + mid * spacing) * n / N)
                self.groups.append((idx, eq, h_mod))
        self.wola = WolaParams(sb.wola_ws) if wf == "wola" else None
        rx_ws = sb.wola_ws if sb.wola_rx_ws is None else sb.wola_rx_ws
        self.wola_rx = WolaParams(rx_ws) if wf == "wola" else None

    @property
    def n_symbols(self):
        return 2 * self.num.symbols_per_slot

    @property
    def subframe_length(self):
        return self.chain.to_high(2 * self.num.slot_length)

    def frequencies(self):
        return self.chain.frequencies()

    def tx(self, qam, t0):
        """High-rate subframe signal starting at ``t0`` (negative)."""
        if self.wola is not None:
            idx = np.arange(qam.shape[0])
            comp = np.conj(self.chain._symbol_phase(idx))[:, None]
            y = wola_tx(qam * comp, self.num, self.wola)
            y = np.concatenate([np.zeros(-t0, dtype=complex), y])
            n = t0 + np.arange(len(y))
            return y * np.exp(2j * np.pi * ((self.sb.center * n) % self.N) / self.N)
        if not self.groups:
            return self.chain.tx(qam, 0, t0)
        y = 0
        for idx, eq, h in self.groups:
            part = np.zeros_like(qam)
            part[:, idx] = qam[:, idx] * eq
            x = self.chain.tx(part, 0, t0)
            d = (len(h) - 1) // 2
            y = y + fftconvolve(x, h)[d : d + len(x)]
        return y

    def rx(self, stream, t0):
        if self.wola is not None:
            n = t0 + np.arange(len(stream))
            base = stream * np.exp(-2j * np.pi * ((self.sb.center * n) % self.N) / self.N)
            z = wola_rx_demodulate(base, self.num, self.wola_rx, self.n_symbols, start=-t0)
            return z * self.chain._symbol_phase(np.arange(self.n_symbols))[:, None]
        if not self.groups:
            return self.chain.rx(stream, t0, 0, self.n_symbols)
        z = np.zeros((self.n_symbols, self.num.n_active), dtype=complex)
        for idx, eq, h in self.groups:
            d = len(h) - 1 - (len(h) - 1) // 2
            f = fftconvolve(stream, h)[d : d + len(stream)]
            z[:, idx] = self.chain.rx(f, t0, 0, self.n_symbols)[:, idx] * eq
        return z


def _make_pa(pa):
    if pa is None or pa == "none":
        return None
    if pa == "rapp":
        return RappPa()
    if pa == "poly":
        return PolyPa()
    return pa


def _pa_reference(pa):
    return pa.p1db_input_dbm()


def _guard_window(n_total, pre, T, guard):
    """Keep ``[-guard/2, T + guard/2)`` of a subframe axis with RC edges."""
    g1 = guard // 2
    g2 = guard - g1
    w = np.zeros(n_total)
    w[pre - g1 : pre + T + g2] = 1.0
    if g1:
        w[pre - g1 : pre] = rc_ramp(g1)
    if g2:
        w[pre + T : pre + T + g2] = rc_ramp(g2)[::-1]
    return w


def _pre(N):
    return 3 * N


def _origin(N, guard):
    return _pre(N) + guard // 2


def transmit(tx, n_subframes, N, guard, truncate, rng):
    """Generate a transmitter's stream before its amplifier.

    Returns ``(stream, processors, symbols)`` where ``symbols[i]`` holds the
    transmitted indices and points of subband ``i`` per subframe. Subframe
    ``k`` starts at stream sample ``_origin(N, guard) + k * (T + guard)``.
    """
    procs = [_Processor(sb, N, "end") for sb in tx.subbands]
    T = {p.subframe_length for p in procs}
    if len(T) != 1:
        raise FcConfigError("subbands must share the subframe length")
    T = T.pop()
    period = T + guard
    pre = _pre(N)
    tail = 3 * N
    n_total = pre + T + tail
    stream = np.zeros(n_subframes * period + pre + tail, dtype=complex)
    symbols = [[] for _ in procs]
    window = _guard_window(n_total, pre, T, guard) if truncate else None
    for k in range(n_subframes):
        sub = np.zeros(n_total, dtype=complex)
        for i, p in enumerate(procs):
            alph = qam_alphabet(p.sb.modulation)
            idx = rng.integers(0, len(alph), (p.n_symbols, p.num.n_active))
            pts = alph[idx]
            data = dft_spread(pts) if p.sb.dft_spread else pts
            y = p.tx(data, -pre)
            m = min(len(y), n_total)
            sub[:m] += y[:m]
            symbols[i].append((idx, pts))
        if window is not None:
            sub *= window
        start = k * period + guard // 2
        stream[start : start + n_total] += sub
    return stream, procs, symbols


def _drive(x, tx):
    pa = _make_pa(tx.pa)
    if pa is None:
        return x, 0, None
    y = pa(apply_ibo(x, tx.ibo_db, _pa_reference(pa)))
    return y, int(getattr(pa, "n_clamped", 0)), pa


def run_link(s: LinkScenario):
    """Simulate the scenario and detect every target subband."""
    rng = np.random.default_rng(s.seed)
    x, procs, symbols = transmit(s.target, s.n_subframes, s.N, s.guard, s.truncate, rng)
    x, n_clamped, _ = _drive(x, s.target)
    tx_power = mean_power_dbm(x) if s.target.pa is not None else float("nan")
    rx = x * 10 ** (s.target.power_offset_db / 20)
    rx = asynchronous_mix(np.zeros_like(rx), rx, s.target.time_offset)
    target_f = np.concatenate([p.frequencies() for p in procs])
    overlapping = 0
    for intf in s.interferers:
        xi, iprocs, _ = transmit(intf, s.n_subframes + 1, s.N, s.guard, s.truncate, rng)
        xi, c, _ = _drive(xi, intf)
        n_clamped += c
        rx = asynchronous_mix(rx, xi, intf.time_offset, intf.power_offset_db)
        fi = np.concatenate([p.frequencies() for p in iprocs])
        overlapping += int(np.sum(np.min(np.abs(target_f[:, None] - fi[None, :]), axis=1) < 0.5))
    if overlapping:
        log.warning("interferer overlaps %d target subcarriers", overlapping)
    sig_power = np.mean(np.abs(x) ** 2)
    noise = 0.0 if s.snr_db is None else sig_power * 10 ** (-s.snr_db / 10)
    rx = apply_channel(rx, s.channel_taps, noise, seed=rng.integers(2**63))
    T = procs[0].subframe_length
    period = T + s.guard
    pre = _pre(s.N)
    rxp = [_Processor(sb, s.N, s.rx_window) for sb in s.target.subbands]
    out = dict(evm=[], avg=[], mx=[], ser=[], gain=[], sym=[], ref=[])
    taps = np.atleast_1d(np.asarray(s.channel_taps, dtype=complex))
    rx_full = np.concatenate([rx, np.zeros(4 * s.N, dtype=complex)])
    for i, p in enumerate(rxp):
        alph = qam_alphabet(p.sb.modulation)
        z_all = []
        for k in range(s.n_subframes):
            start = _origin(s.N, s.guard) + k * period - pre
            seg = rx_full[start : start + pre + T + 3 * s.N]
            z_all.append(p.rx(seg, -pre))
        z = np.stack(z_all)
        if s.equalize:
            f = p.frequencies()
            H = np.exp(-2j * np.pi * np.outer(f, np.arange(len(taps))) / s.N) @ taps
            z = z / H
        if p.sb.dft_spread:
            z = dft_despread(z)
        idx = np.stack([a for a, _ in symbols[i]])
        ref = np.stack([b for _, b in symbols[i]])
        g = np.vdot(ref, z) / np.vdot(ref, ref) if s.normalize_gain else 1.0
        z = z / g
        err = np.abs(z - ref) ** 2
        mse = err.mean((0, 1)) / np.mean(np.abs(ref) ** 2, axis=(0, 1))
        out["evm"].append(mse_to_db(mse))
        out["avg"].append(float(mse_to_db(mse.mean())))
        out["mx"].append(float(mse_to_db(mse.max())))
        out["ser"].append(float(np.mean(_detect(z, alph) != idx)))
        out["gain"].append(complex(g))
        if s.keep_symbols:
            out["sym"].append(z)
            out["ref"].append(ref)
    return LinkResult(out["evm"], out["avg"], out["mx"], out["ser"], out["gain"], tx_power,
                      n_clamped, overlapping, out["sym"] or None, out["ref"] or None)


def run_link_trials(s: LinkScenario, seeds, threads=1):
    """Run independent trials and return them in seed order."""
    seeds = list(seeds)
    scen = [replace(s, seed=int(sd)) for sd in seeds]
    if threads <= 1:
        return [run_link(c) for c in scen]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(run_link, scen))


def link_psd(tx: Transmitter, n_realizations=100, rbw_hz=30e3, fs_hz=15.36e6, N=1024,
             guard=72, truncate=True, seed=0, n_subframes=1):
    """PSD of a transmitter's amplifier output in dBm per RBW.

    Each realization is an independent run of ``n_subframes`` subframes.
    """
    rng = np.random.default_rng(seed)
    segs = []
    for _ in range(n_realizations):
        x, _, _ = transmit(tx, n_subframes, N, guard, truncate, rng)
        x, _, _ = _drive(x, tx)
        segs.append(x)
    n = min(len(v) for v in segs)
    f, p = psd_estimate(np.stack([v[:n] for v in segs]), rbw_hz, fs_hz)
    # the estimate is in |x|^2 units; convert to dBm across the load
    return f, p - 10 * np.log10(2 * R_LOAD) + 30


def max_power_search(s: LinkScenario, evm_limit_pct=None, mask=None, ibo_range=None,
                     step_db=0.1, rbw_hz=30e3, fs_hz=15.36e6, n_psd=10):
    """Largest mean amplifier output meeting the EVM limit and spectral mask.

    The input back-off is stepped upward from the smallest value in
    ``ibo_range`` by ``step_db``; the first level where every constraint holds
    is returned. ``mask`` lists ``(f_lo_hz, f_hi_hz, limit_dbm)`` rows
    applying to ``f_lo <= |f| <= f_hi`` at the given RBW.

    Returns a dict with ``ibo_db``, ``output_dbm`` and ``binding`` (the
    constraint that failed one step earlier, or ``"pa_range"``).
    """
    pa = _make_pa(s.target.pa)
    if pa is None:
        raise ValueError("max power search needs an amplifier")
    if ibo_range is None:
        top = getattr(pa, "valid_dbm", (None, None))[1]
        ibo_min = pa.p1db_input_dbm() - top if top is not None else 0.0
        ibo_range = (ibo_min, ibo_min + 30.0)
    lo, hi = ibo_range
    n_steps = int(round((hi - lo) / step_db))
    last_fail = "pa_range"
    for i in range(n_steps + 1):
        ibo = lo + i * step_db
        tx = replace(s.target, ibo_db=ibo)
        fails = []
        if evm_limit_pct is not None:
            res = run_link(replace(s, target=tx))
            evm_pct = 100 * 10 ** (max(res.evm_avg_db) / 20)
            if evm_pct > evm_limit_pct:
                fails.append("evm")
        if mask is not None and not fails:
            f, p = link_psd(tx, n_psd, rbw_hz, fs_hz, s.N, s.guard, s.truncate, s.seed)
            for lo_f, hi_f, lim in mask:
                sel = (np.abs(f) >= lo_f) & (np.abs(f) <= hi_f)
                if np.any(p[sel] > lim):
                    fails.append(f"mask[{lo_f:g}-{hi_f:g} Hz]")
                    break
        if not fails:
            x, _, _ = transmit(tx, s.n_subframes, s.N, s.guard, s.truncate,
                               np.random.default_rng(s.seed))
            y, _, _ = _drive(x, tx)
            return {"ibo_db": round(ibo, 6), "output_dbm": mean_power_dbm(y), "binding": last_fail}
        last_fail = fails[0]
    return {"ibo_db": float("nan"), "output_dbm": float("nan"), "binding": last_fail}
