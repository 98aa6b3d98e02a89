"""Constrained design of the FC transition-band weights.

The worst-case passband EVM is minimized over the transition weights subject
to a ceiling on the synthesis magnitude response in the stopband. A bounded
Nelder-Mead search handles the few free weights; the stopband ceiling enters
as an exact penalty whose weight grows until the returned point is feasible
on a verification grid twice as dense as the design grid.
"""

from __future__ import annotations

import io
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from .chain import SubbandChain
from .fcfb import FcConfig, FcConfigError, WeightMask
from .metrics import TmuxModel, mse_to_db, response_gram, stopband_region
from .ofdm import OfdmNumerology, table_numerology

__all__ = [
    "DesignProblem",
    "DesignReport",
    "InfeasibleDesign",
    "optimize_weights",
    "WeightDesigner",
    "write_mask",
    "read_mask",
]

log = logging.getLogger(__name__)


class InfeasibleDesign(RuntimeError):
    """No transition weights in [0, 1] were found that meet the stopband ceiling.

    ``report`` carries the best point found.
    """

    def __init__(self, message, report=None, mask=None):
        super().__init__(message)
        self.report = report
        self.mask = mask


@dataclass
class DesignProblem:
    """One weight-design task.

    ``mode`` selects where the FC filtering sits: ``"both"`` (matched
    transmit and receive banks sharing the weights), ``"rx"`` (wideband
    CP-OFDM transmitter, filtered receiver) or ``"tx"`` (filtered
    transmitter, plain receiver). The first start is the sine-squared ramp
    or ``initial`` when given; the other ``n_restarts - 1`` starts perturb it
    with the ``seed``-driven generator.
    """

    num: OfdmNumerology
    fc: FcConfig
    n_tbw: int
    a_s_db: float
    mode: str = "both"
    wideband: OfdmNumerology | None = None
    density: int = 16
    n_restarts: int = 8
    max_evals: int = 2000
    f_tol_db: float = 1e-4
    x_tol: float = 1e-6
    seed: int = 0
    span: int = 2
    initial: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.n_tbw <= 7:
            raise FcConfigError(f"transition width {self.n_tbw} outside [0, 7]")
        if self.mode not in ("both", "rx", "tx"):
            raise FcConfigError(f"unknown filtering mode {self.mode!r}")
        if self.n_restarts < 1:
            raise FcConfigError("at least one start is required")

    @property
    def n_active_bins(self):
        return self.num.n_active * self.fc.L // self.num.L_OFDM

    @classmethod
    def from_table(cls, n_prb, overlap=0.5, n_tbw=2, a_s_db=10.0, mode="both", center=0,
                   scs_exp=0, **kw):
        """Problem for a row of the 10 MHz example numerologies."""
        num, L = table_numerology(n_prb, scs_exp)
        N = 1024
        fc = FcConfig.from_overlap(N, L, overlap, center)
        wide = None
        if mode == "rx":
            wide = OfdmNumerology(N, 72, 600, 0, 8, 7)
        return cls(num, fc, n_tbw, a_s_db, mode, wide, **kw)

    def chains(self, mask):
        fc_chain = SubbandChain(self.num, self.fc, mask)
        N = self.fc.N
        high = self.num.high_rate(self.fc.N, self.fc.L)
        ext_high = int(self.num.first_cp_extension * self.fc.rate)
        if self.mode == "both":
            return fc_chain, SubbandChain(self.num, self.fc, mask)
        if self.mode == "rx":
            wide = self.wideband or OfdmNumerology(int(high[0]), int(high[1]), 600, 0, ext_high,
                                                   self.num.symbols_per_slot)
            return SubbandChain(wide, None, center=0, N=N), fc_chain
        plain = OfdmNumerology(int(high[0]), int(high[1]), self.num.n_active, self.num.scs_exp,
                               ext_high, self.num.symbols_per_slot)
        return fc_chain, SubbandChain(plain, None, center=self.fc.center, N=N)


@dataclass
class DesignReport:
    weights: tuple
    evm_max_db: float
    evm_avg_db: float
    stopband_max_db: float
    stopband_max_verify_db: float
    feasible: bool
    budget_exhausted: bool
    n_evals: int
    n_starts: int
    seconds: float
    history: list = field(default_factory=list)

    def as_dict(self):
        d = dict(self.__dict__)
        d["weights"] = list(self.weights)
        d.pop("history")
        return d


class _Objective:
    """Cached quadratic forms for the EVM and stopband terms."""

    def __init__(self, problem, model):
        self.problem = problem
        self.model = model
        mask0 = WeightMask.raised_cosine(problem.fc.L, problem.n_active_bins, problem.n_tbw)
        basis = mask0.basis()
        self.f, self.R = response_gram(problem.fc, basis, problem.density)
        self.sb = stopband_region(mask0, self.f)
        fv, Rv = response_gram(problem.fc, basis, 2 * problem.density)
        sbv = stopband_region(mask0, fv)
        self.Rv = Rv[sbv]
        self.R = self.R[self.sb]
        self.limit_db = -abs(problem.a_s_db)
        self.n_evals = 0

    def stopband_db(self, d, verify=False):
        c = np.concatenate([[1.0], d])
        R = self.Rv if verify else self.R
        return float(mse_to_db(np.max(np.einsum("fab,a,b->f", R, c, c))))

    def evm(self, d):
        mse = self.model.mse_per_subcarrier(d)
        return float(mse_to_db(mse.max())), float(mse_to_db(mse.mean()))

    def __call__(self, d, mu, margin):
        self.n_evals += 1
        d = np.clip(d, 0.0, 1.0)
        excess = self.stopband_db(d) - (self.limit_db - margin)
        return self.evm(d)[0] + mu * max(excess, 0.0)


def _starts(n_tbw, n, rng, initial=None):
    if initial is not None:
        base = np.clip(np.asarray(initial, dtype=float), 0.0, 1.0)
        if base.shape != (n_tbw,):
            raise FcConfigError(f"initial weights need {n_tbw} values, got {base.shape[0]}")
    else:
        base = np.sin(np.pi * (np.arange(n_tbw) + 0.5) / (2 * n_tbw)) ** 2
    out = [base]
    for k in range(1, n):
        scale = 0.5 * k / n
        out.append(np.clip(base + rng.uniform(-scale, scale, n_tbw), 0.0, 1.0))
    return out


def optimize_weights(problem, model=None):
    """Solve the weight design; returns ``(mask, report)``.

    Raises :class:`InfeasibleDesign` when the best point found still exceeds
    the stopband ceiling (the exception carries that point's report).
    """
    t_start = time.perf_counter()
    L, n_act = problem.fc.L, problem.n_active_bins
    if problem.n_tbw == 0:
        mask = WeightMask.rectangular(L, n_act)
        model = model or TmuxModel(*problem.chains(mask), design=None, span=problem.span)
        mse = model.mse_per_subcarrier()
        from .metrics import magnitude_response

        f, M = magnitude_response(problem.fc, mask, 2 * problem.density)
        top = float(mse_to_db(M[stopband_region(mask, f)].max()))
        rep = DesignReport((), float(mse_to_db(mse.max())), float(mse_to_db(mse.mean())), top, top,
                           top <= -abs(problem.a_s_db) + 0.01, False, 0, 0,
                           time.perf_counter() - t_start)
        if not rep.feasible:
            raise InfeasibleDesign(f"rectangular mask reaches {top:.2f} dB in the stopband", rep, mask)
        return mask, rep

    mask0 = WeightMask.raised_cosine(L, n_act, problem.n_tbw)
    if model is None:
        design = {"both": "both", "rx": "rx", "tx": "tx"}[problem.mode]
        model = TmuxModel(*problem.chains(mask0), design=design, span=problem.span)
    obj = _Objective(problem, model)
    rng = np.random.default_rng(problem.seed)
    bounds = [(0.0, 1.0)] * problem.n_tbw
    opts = dict(xatol=problem.x_tol, fatol=problem.f_tol_db, maxfev=problem.max_evals)
    best, history, exhausted = None, [], False
    mu, margin = 10.0, 0.002
    starts = _starts(problem.n_tbw, problem.n_restarts, rng, problem.initial)
    for rnd in range(6):
        results = []
        for x0 in starts:
            res = minimize(obj, x0, args=(mu, margin), method="Nelder-Mead", bounds=bounds, options=opts)
            exhausted |= res.nfev >= problem.max_evals
            # polish from the returned point so the result is a settled local minimum
            res2 = minimize(obj, res.x, args=(mu, margin), method="Nelder-Mead", bounds=bounds,
                            options=opts)
            x = np.clip(res2.x if res2.fun <= res.fun else res.x, 0.0, 1.0)
            results.append((min(res.fun, res2.fun), x))
        results.sort(key=lambda r: r[0])
        fun, x = results[0]
        top_v = obj.stopband_db(x, verify=True)
        history.append({"round": rnd, "mu": mu, "margin_db": margin, "objective": fun,
                        "stopband_verify_db": top_v})
        log.debug("design round %d: mu=%g objective=%.4f stopband=%.4f", rnd, mu, fun, top_v)
        best = x
        if top_v <= obj.limit_db + 0.01:
            break
        mu *= 10.0
        margin *= 2.0
        starts = [x] + [r[1] for r in results[1:3]]
    evm_max_db, evm_avg_db = obj.evm(best)
    top = obj.stopband_db(best)
    top_v = obj.stopband_db(best, verify=True)
    feasible = top_v <= obj.limit_db + 0.01
    rep = DesignReport(tuple(float(v) for v in best), evm_max_db, evm_avg_db, top, top_v, feasible,
                       bool(exhausted), obj.n_evals, problem.n_restarts,
                       time.perf_counter() - t_start, history)
    if not feasible:
        raise InfeasibleDesign(
            f"stopband ceiling {obj.limit_db:.2f} dB not met: best design reaches {top_v:.2f} dB",
            rep, mask0.with_weights(best))
    return mask0.with_weights(best), rep


class WeightDesigner(BaseEstimator):
    """Estimator front end to :func:`optimize_weights`.

    ``fit`` runs the design; the result is in ``mask_``, ``weights_`` and
    ``report_``. ``score`` returns the negated worst-case EVM in dB.
    """

    def __init__(self, n_prb=4, overlap=0.5, n_tbw=2, a_s_db=10.0, mode="both", center=0,
                 scs_exp=0, n_restarts=8, max_evals=2000, seed=0):
        self.n_prb = n_prb
        self.overlap = overlap
        self.n_tbw = n_tbw
        self.a_s_db = a_s_db
        self.mode = mode
        self.center = center
        self.scs_exp = scs_exp
        self.n_restarts = n_restarts
        self.max_evals = max_evals
        self.seed = seed

    def _problem(self):
        return DesignProblem.from_table(self.n_prb, self.overlap, self.n_tbw, self.a_s_db, self.mode,
                                        self.center, self.scs_exp, n_restarts=self.n_restarts,
                                        max_evals=self.max_evals, seed=self.seed)

    def fit(self, X=None, y=None):
        self.problem_ = self._problem()
        self.mask_, self.report_ = optimize_weights(self.problem_)
        self.weights_ = np.asarray(self.mask_.weights)
        return self

    def score(self, X=None, y=None):
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "report_")
        return -self.report_.evm_max_db


# ----------------------------------------------------------------------
_MASK_MAGIC = "# fcwave weight mask v1"


def write_mask(path_or_buf, mask, fc=None, extra=None):
    """Write a mask as text: a ``key = value`` header then one weight per line.

    Weights use 17 significant digits so the file round-trips exactly.
    """
    lines = [_MASK_MAGIC, f"L = {mask.L}", f"n_active = {mask.n_active}", f"n_tbw = {mask.n_tbw}"]
    if fc is not None:
        lines += [f"N = {fc.N}", f"N_S = {fc.N_S}", f"L_S = {fc.L_S}", f"center = {fc.center}"]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    lines.append("weights:")
    lines += [f"{w:.17g}" for w in mask.weights]
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_buf, io.TextIOBase):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    return text


def read_mask(path_or_buf):
    """Inverse of :func:`write_mask`; returns ``(mask, header)``."""
    if isinstance(path_or_buf, io.TextIOBase):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != _MASK_MAGIC:
        raise ValueError("not a weight mask file")
    header, weights, in_w = {}, [], False
    for ln in lines[1:]:
        if not ln:
            continue
        if ln == "weights:":
            in_w = True
        elif in_w:
            weights.append(float(ln))
        else:
            k, _, v = ln.partition("=")
            header[k.strip()] = v.strip()
    mask = WeightMask(int(header["L"]), int(header["n_active"]), tuple(weights))
    if mask.n_tbw != int(header["n_tbw"]):
        raise ValueError("weight count does not match header")
    return mask, header
