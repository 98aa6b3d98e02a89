"""Memoryless power-amplifier models and drive-level accounting.

Signals are complex envelopes in volts across a 50 ohm load; the power of a
sample is ``|x|**2 / (2 * 50)`` watts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "R_LOAD",
    "dbm_to_amplitude",
    "amplitude_to_dbm",
    "mean_power_dbm",
    "RappPa",
    "PolyPa",
    "apply_ibo",
]

log = logging.getLogger(__name__)

R_LOAD = 50.0


def amplitude_to_dbm(a):
    p_w = np.abs(a) ** 2 / (2 * R_LOAD)
    return 10 * np.log10(np.maximum(p_w, 1e-300)) + 30


def dbm_to_amplitude(p_dbm):
    return np.sqrt(2 * R_LOAD * 10 ** ((np.asarray(p_dbm, dtype=float) - 30) / 10))


def mean_power_dbm(x):
    x = np.asarray(x)
    return float(10 * np.log10(np.mean(np.abs(x) ** 2) / (2 * R_LOAD)) + 30)


def _p1db(amam, lo, hi):
    """Input amplitude where the gain drops 1 dB below its small-signal value."""
    g0 = amam(lo) / lo
    return brentq(lambda a: 20 * np.log10(amam(a) / a / g0) + 1.0, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class RappPa:
    """Modified Rapp amplifier.

    AM-AM: ``|y| = G x / (1 + |G x / V_sat|^(2p))^(1/(2p))``.
    AM-PM (radians): ``A |G x / V_sat|^q / (1 + |G x / (B V_sat)|^q)``.
    """

    G: float = 1.0
    V_sat: float = 239.6
    p: float = 3.0
    q: float = 5.0
    A: float = -0.14
    B: float = 1.2

    def am_am(self, a):
        u = np.abs(self.G * np.asarray(a, dtype=float) / self.V_sat)
        return self.G * np.abs(a) / (1 + u ** (2 * self.p)) ** (1 / (2 * self.p))

    def am_pm(self, a):
        a = np.abs(np.asarray(a, dtype=float))
        return self.A * (self.G * a / self.V_sat) ** self.q / (1 + (self.G * a / (self.B * self.V_sat)) ** self.q)

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        a = np.abs(x)
        return self.am_am(a) * np.exp(1j * (np.angle(x) + self.am_pm(a)))

    def p1db_input_dbm(self):
        return float(amplitude_to_dbm(_p1db(self.am_am, 1e-3 * self.V_sat, 10 * self.V_sat)))

    def p1db_output_dbm(self):
        a = _p1db(self.am_am, 1e-3 * self.V_sat, 10 * self.V_sat)
        return float(amplitude_to_dbm(self.am_am(a)))


P_AM = (7.9726e-12, 1.2771e-9, 8.2526e-8, 2.6615e-6, 3.9727e-5,
        2.7715e-5, -7.1100e-3, -7.9183e-2, 8.2921e-1, 27.3535)
P_PM = (9.8591e-11, 1.3544e-8, 7.2970e-7, 1.8757e-5, 1.9730e-4,
        -7.5352e-4, -3.6477e-2, -2.7752e-1, -1.6672e-2, 79.1553)


class PolyPa:
    """Order-nine polynomial amplifier defined on instantaneous input dBm.

    ``p_am`` maps input dBm to output dBm, ``p_pm`` maps input dBm to an
    output phase in degrees; both are ordered from the ninth power down.
    The model is valid for inputs in ``[-30, 9]`` dBm. Samples outside are
    evaluated at the nearest edge: below it the edge gain and phase are used
    (linear region), above it the output saturates at the edge level. Every
    clamped call is counted in ``n_clamped``.
    """

    p_am = P_AM
    p_pm = P_PM
    valid_dbm = (-30.0, 9.0)

    def __init__(self):
        self.n_clamped = 0

    def output_dbm(self, p_in_dbm):
        return np.polyval(self.p_am, np.asarray(p_in_dbm, dtype=float))

    def phase_deg(self, p_in_dbm):
        return np.polyval(self.p_pm, np.asarray(p_in_dbm, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        lo, hi = self.valid_dbm
        p = amplitude_to_dbm(x)
        pc = np.clip(p, lo, hi)
        n_out = int(np.count_nonzero(p > hi) + np.count_nonzero((p < lo) & (np.abs(x) > 0)))
        if n_out:
            self.n_clamped += n_out
            log.warning("polynomial PA: %d samples outside [%g, %g] dBm clamped", n_out, lo, hi)
        gain_db = self.output_dbm(pc) - pc
        # below the range keep the edge gain, above it hold the edge output
        out_dbm = np.where(p > hi, self.output_dbm(hi), p + gain_db)
        amp = dbm_to_amplitude(out_dbm) * (np.abs(x) > 0)
        return amp * np.exp(1j * (np.angle(x) + np.deg2rad(self.phase_deg(pc))))

    def am_am(self, a):
        return np.abs(self(np.asarray(a, dtype=complex)))

    def small_signal_gain_db(self):
        lo = self.valid_dbm[0]
        return float(self.output_dbm(lo) - lo)

    def p1db_input_dbm(self):
        g0 = self.small_signal_gain_db()
        lo, hi = self.valid_dbm
        return float(brentq(lambda p: self.output_dbm(p) - p - g0 + 1.0, lo, hi, xtol=1e-10))


def apply_ibo(x, ibo_db, reference_dbm):
    """Scale ``x`` so its mean power is ``reference_dbm - ibo_db`` dBm.

    ``ibo_db = inf`` returns an all-zero-power signal's limit, i.e. the input
    scaled to a vanishing level is not representable; use a large finite
    value for the linear region instead.
    """
    x = np.asarray(x, dtype=complex)
    if not np.isfinite(ibo_db):
        raise ValueError("input back-off must be finite")
    target = reference_dbm - ibo_db
    return x * 10 ** ((target - mean_power_dbm(x)) / 20)
