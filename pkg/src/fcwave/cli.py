"""Command-line front end: ``fcwave {design,analyze,psd,linksim,complexity}``.

Every command reads one YAML config, validates it before computing anything,
writes its results into ``--out`` and a ``manifest.json`` describing the run.
Exit status is 0 when all outputs were written, 2 for configuration or
design-constraint errors and 1 for anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from ._validation import ConfigError, apply_overrides, default_threads, load_config, validate
from .fcfb import FcConfig, FcConfigError, WeightMask
from .ofdm import AllocationError

log = logging.getLogger("fcwave")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def engine_version():
    """Hash of the package sources, stable across runs of the same code."""
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


@dataclass
class RunManifest:
    command: str
    config_path: str
    out_dir: str
    seed: int
    version: str
    config_digest: str
    outputs: list

    @property
    def run_id(self):
        """Deterministic identifier: command, config content, seed, engine."""
        return hashlib.sha256(json.dumps([self.command, self.config_digest, self.seed, self.version])
                              .encode()).hexdigest()[:12]

    def write(self):
        d = asdict(self)
        d["run_id"] = self.run_id
        path = Path(self.out_dir) / "manifest.json"
        path.write_text(json.dumps(d, indent=2) + "\n")
        return path


class _Writer:
    """Collects tables and writes them as CSV files or one JSON document."""

    def __init__(self, out, fmt, manifest):
        self.out = Path(out)
        self.fmt = fmt
        self.manifest = manifest
        self.tables = {}
        self.summary = {}

    def table(self, name, rows):
        self.tables[name] = rows

    def text(self, name, content):
        path = self.out / name
        path.write_text(content)
        self.manifest.outputs.append(name)

    def close(self):
        rid = self.manifest.run_id
        if self.fmt == "csv":
            for name, rows in self.tables.items():
                fname = f"{name}.csv"
                with open(self.out / fname, "w", newline="") as fh:
                    fh.write(f"# run_id={rid} manifest=manifest.json\n")
                    if rows:
                        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                        w.writeheader()
                        w.writerows(rows)
                self.manifest.outputs.append(fname)
            if self.summary:
                self._json("summary.json", self.summary)
        else:
            self._json("results.json", {"summary": self.summary, "tables": self.tables})
        self.manifest.write()

    def _json(self, name, obj):
        doc = {"run_id": self.manifest.run_id, "manifest": "manifest.json", **obj}
        (self.out / name).write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
        self.manifest.outputs.append(name)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _f(v, digits=6):
    v = float(v)
    return round(v, digits) if np.isfinite(v) else v


# ----------------------------------------------------------------------
def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else Path(cfg.get("_base_dir", ".")) / p


def _load_mask(cfg, spec):
    """A mask entry is a mask file path or a list of transition weights."""
    from .optimizer import read_mask

    if spec is None or isinstance(spec, list):
        return spec
    try:
        return read_mask(_resolve(cfg, spec))[0]
    except OSError as e:
        raise ConfigError(f"mask file {spec}: {e.strerror}") from None


def _problem(d, seed):
    from .optimizer import DesignProblem

    p = DesignProblem.from_table(d["n_prb"], d["overlap"], d["n_tbw"], d["a_s_db"], d["mode"],
                                 d["center"], d["scs_exp"], n_restarts=d["n_restarts"],
                                 max_evals=d["max_evals"], seed=seed)
    if d["fc"]:
        keys = {"N", "N_S", "L", "L_S"}
        extra = set(d["fc"]) - keys
        if extra or not keys <= set(d["fc"]):
            raise ConfigError(f"design.fc: needs exactly the keys {sorted(keys)}")
        fc = FcConfig(*(int(d["fc"][k]) for k in ("N", "N_S", "L", "L_S")), center=d["center"])
        if fc.L * p.num.n_active % p.num.L_OFDM:
            raise FcConfigError(f"L={fc.L} maps the allocation to a fractional number of bins")
        p = replace(p, fc=fc)
    return p


def _as_weight_mask(mask, L, n_active, n_tbw):
    if isinstance(mask, WeightMask):
        return mask
    if mask is None:
        return WeightMask.raised_cosine(L, n_active, n_tbw)
    return WeightMask(L, n_active, tuple(float(w) for w in mask))


def cmd_design(cfg, w):
    from .optimizer import InfeasibleDesign, optimize_weights, write_mask

    d = cfg["design"]
    p = _problem(d, cfg["seed"])
    try:
        mask, rep = optimize_weights(p)
    except InfeasibleDesign as e:
        if e.mask is not None:
            write_mask(w.out / "mask_best_infeasible.txt", e.mask, p.fc)
        raise ConfigError(f"design.a_s_db: {e}") from None
    extra = {"a_s_db": d["a_s_db"], "mode": d["mode"], "n_prb": d["n_prb"],
             "scs_exp": d["scs_exp"], "run_id": w.manifest.run_id}
    w.text("mask.txt", write_mask(_io(), mask, p.fc, extra))
    r = rep.as_dict()
    w.summary = {k: r[k] for k in ("weights", "evm_max_db", "evm_avg_db", "stopband_max_db",
                                   "stopband_max_verify_db", "feasible", "budget_exhausted",
                                   "n_evals", "n_starts")}
    w.table("design", [{"metric": k, "value": _f(r[k]) if isinstance(r[k], float) else r[k]}
                       for k in ("evm_max_db", "evm_avg_db", "stopband_max_db",
                                 "stopband_max_verify_db", "n_evals")])
    log.info("design: EVM_max %.2f dB, stopband %.2f dB", rep.evm_max_db, rep.stopband_max_verify_db)


def _io():
    import io

    return io.StringIO()


def cmd_analyze(cfg, w):
    from .linksim import Subband, adjacent_center
    from .metrics import (TmuxModel, config_hash, evm_avg, evm_max, magnitude_response,
                          metric_rows, mse_to_db, sblr, stopband_region)
    from .optimizer import DesignProblem

    a = cfg["analyze"]
    default_mask = _load_mask(cfg, a["mask"])
    items = []
    for sb in a["subbands"]:
        p = DesignProblem.from_table(sb["n_prb"], sb["overlap"], sb["n_tbw"], 0.0, a["mode"],
                                     sb["center"], sb["scs_exp"])
        m = _load_mask(cfg, sb["mask"]) if sb["mask"] is not None else default_mask
        m = _as_weight_mask(m, p.fc.L, p.n_active_bins, sb["n_tbw"])
        if m.L != p.fc.L or m.n_active != p.n_active_bins:
            raise ConfigError(f"analyze: mask for {sb['n_prb']} PRBs must have L={p.fc.L} and "
                              f"{p.n_active_bins} active bins")
        items.append((sb, p, m))

    evm_rows, resp_rows, metrics, leak_rows = [], [], [], []
    models = []
    for i, (sb, p, m) in enumerate(items):
        tx, rx = p.chains(m)
        rx.window_offset = a["window_offset"]
        model = TmuxModel(tx, rx)
        models.append(model)
        mse = model.mse_per_subcarrier()
        offs = rx.frequencies()[model.has_direct_rx]
        for k, (f, v) in enumerate(zip(offs, mse)):
            evm_rows.append({"subband": i, "subcarrier": k, "offset_bins": _f(f), "evm_db": _f(mse_to_db(v))})
        f, M = magnitude_response(p.fc, m, a["density"])
        M_db = mse_to_db(M)
        for fi, mi in zip(f, M_db):
            resp_rows.append({"subband": i, "offset_bins": _f(fi), "m_db": _f(mi)})
        h = config_hash({k: v for k, v in sb.items() if k != "mask"} | {"weights": list(m.weights)})
        sel = stopband_region(m, f)
        metrics += [dict(r, subband=i) for r in metric_rows(h, {
            "evm_avg_db": evm_avg(mse), "evm_max_db": evm_max(mse),
            "stopband_max_db": M_db[sel].max()})]

    # leakage between listed subbands
    for i, (_, pi, mi) in enumerate(items):
        for j, (_, pj, mj) in enumerate(items):
            if i == j:
                continue
            leak = TmuxModel(pi.chains(mi)[0], pj.chains(mj)[1])
            v = sblr(leak, models[i]) if not np.any(leak.direct >= 0) else float("nan")
            leak_rows.append({"tx_subband": i, "rx_subband": j, "guard": "", "sblr_db": _f(v)})
    # guard sweep: a copy of the first subband placed next to it
    sb0, p0, m0 = items[0]
    ref = Subband(n_prb=sb0["n_prb"], center=sb0["center"], scs_exp=sb0["scs_exp"])
    for g in a["guard_sweep"]:
        c = adjacent_center(ref, sb0["n_prb"], sb0["scs_exp"], int(g), 1, p0.fc.N)
        pn = replace(p0, fc=p0.fc.with_center(c))
        leak = TmuxModel(p0.chains(m0)[0], pn.chains(m0)[1])
        leak_rows.append({"tx_subband": 0, "rx_subband": "adjacent", "guard": int(g),
                          "sblr_db": _f(sblr(leak, models[0]))})

    w.table("evm", evm_rows)
    w.table("response", resp_rows)
    w.table("metrics", metrics)
    if leak_rows:
        w.table("sblr", leak_rows)
    w.summary = {"metrics": metrics, "sblr": leak_rows}


def _transmitter(cfg, t):
    from .linksim import Subband, Transmitter

    subs = []
    for sb in t["subbands"]:
        sb = dict(sb)
        sb["mask"] = _load_mask(cfg, sb["mask"])
        subs.append(Subband(**sb))
    return Transmitter(subs, t["pa"], t["ibo_db"], t["time_offset"], t["power_offset_db"])


def cmd_psd(cfg, w):
    from .linksim import link_psd

    c = cfg["psd"]
    tx = _transmitter(cfg, c["transmitter"])
    f, p = link_psd(tx, c["n_realizations"], c["rbw_hz"], c["fs_hz"], guard=c["guard"],
                    seed=cfg["seed"], n_subframes=c["n_subframes"])
    w.table("psd", [{"freq_hz": _f(fi, 3), "psd_dbm_per_rbw": _f(pi, 4)} for fi, pi in zip(f, p)])
    w.summary = {"peak_dbm_per_rbw": float(p.max()), "rbw_hz": c["rbw_hz"],
                 "n_realizations": c["n_realizations"]}


def cmd_linksim(cfg, w):
    from .linksim import LinkScenario, exponential_channel, max_power_search, run_link_trials

    c = cfg["linksim"]
    if c["max_power"] and c["target"]["pa"] is None:
        raise ConfigError("linksim.max_power: linksim.target.pa must name an amplifier")
    taps = c["channel_taps"]
    if c["rms_delay"] is not None:
        taps = exponential_channel(c["rms_delay"], seed=cfg["seed"])
    s = LinkScenario(_transmitter(cfg, c["target"]),
                     [_transmitter(cfg, t) for t in c["interferers"]],
                     tuple(np.asarray(taps, dtype=complex)), c["snr_db"], c["rx_window"],
                     c["guard"], c["truncate"], c["n_subframes"], cfg["seed"], c["equalize"],
                     keep_symbols=c["constellation"])
    seeds = [cfg["seed"] + k for k in range(c["trials"])]
    results = run_link_trials(s, seeds, cfg["threads"])
    evm_rows, metric = [], []
    for t, r in zip(seeds, results):
        for b, e in enumerate(r.evm_per_subcarrier_db):
            evm_rows += [{"seed": t, "subband": b, "subcarrier": k, "evm_db": _f(v)} for k, v in enumerate(e)]
        for b in range(len(r.evm_avg_db)):
            metric += [{"seed": t, "subband": b, "metric": k, "value": _f(v)} for k, v in
                       (("evm_avg_db", r.evm_avg_db[b]), ("evm_max_db", r.evm_max_db[b]), ("ser", r.ser[b]))]
    w.table("evm", evm_rows)
    w.table("metrics", metric)
    if c["constellation"]:
        w.table("constellation", _constellation_rows(seeds, results))
    w.summary = {"trials": [r.as_dict() for r in results]}
    mp = c["max_power"]
    if mp:
        res = max_power_search(s, mp.get("evm_limit_pct"), mp.get("mask"), mp.get("ibo_range"),
                               mp.get("step_db", 0.1))
        w.summary["max_power"] = res
        w.table("max_power", [res])


def _constellation_rows(seeds, results):
    rows = []
    for t, r in zip(seeds, results):
        for b, (z, ref) in enumerate(zip(r.symbols, r.reference)):
            for (f, m, k), v in np.ndenumerate(z):
                rows.append({"seed": t, "subband": b, "subframe": f, "symbol": m, "subcarrier": k,
                             "re": _f(v.real), "im": _f(v.imag),
                             "ref_re": _f(ref[f, m, k].real), "ref_im": _f(ref[f, m, k].imag)})
    return rows


def cmd_complexity(cfg, w):
    from .complexity import table_rows

    c = cfg["complexity"]
    try:
        configs = [(str(a), int(b), int(n)) for a, b, n in c["allocations"]]
    except (TypeError, ValueError):
        raise ConfigError("complexity.allocations: rows must be [label, n_prb, n_subbands]") from None
    rows = table_rows(configs, tuple(c["overlaps"]), c["n_tbw"], fir_lengths=tuple(c["fir_lengths"]))
    w.table("complexity", [{k: _f(v, 2) if isinstance(v, float) else v for k, v in r.items()}
                           for r in rows])
    w.summary = {"rows": len(rows)}


COMMANDS = {
    "design": cmd_design,
    "analyze": cmd_analyze,
    "psd": cmd_psd,
    "linksim": cmd_linksim,
    "complexity": cmd_complexity,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="fcwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=name)
        sp.add_argument("--config", required=name != "complexity", help="YAML config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: FCWAVE_THREADS or 1)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. design.a_s_db=20")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = load_config(args.config) if args.config else {}
        raw = apply_overrides(raw, args.set)
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = validate(raw, args.command)
        cfg["threads"] = args.threads or cfg["threads"] or default_threads()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg_text = json.dumps({k: v for k, v in cfg.items() if not k.startswith("_")},
                              sort_keys=True, default=str)
        man = RunManifest(args.command, str(Path(args.config).resolve()) if args.config else "",
                          str(out.resolve()), cfg["seed"], engine_version(),
                          hashlib.sha256(cfg_text.encode()).hexdigest()[:16], [])
        w = _Writer(out, args.format, man)
        COMMANDS[args.command](cfg, w)
        w.close()
    except (ConfigError, FcConfigError, AllocationError) as e:
        print(f"fcwave {args.command}: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"fcwave {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {len(man.outputs) + 1} files to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
