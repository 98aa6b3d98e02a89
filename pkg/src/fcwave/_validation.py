"""Configuration loading: YAML files with includes, overrides and a schema."""

from __future__ import annotations

import copy
import os
from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Configuration is malformed; the message names the offending key."""


def deep_merge(base, over):
    """Recursive dict merge; values in ``over`` win, lists are replaced."""
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path, _seen=None):
    """Read a YAML config and resolve its ``include`` list.

    Included files are merged first in order, then the including file on
    top. Relative include paths resolve against the including file.
    """
    path = Path(path).resolve()
    seen = set(_seen or ())
    if path in seen:
        raise ConfigError(f"include cycle through {path}")
    seen.add(path)
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    inc = data.pop("include", []) or []
    if isinstance(inc, str):
        inc = [inc]
    merged = {}
    for p in inc:
        merged = deep_merge(merged, load_config(path.parent / p, seen))
    merged = deep_merge(merged, data)
    merged.setdefault("_base_dir", str(path.parent))
    return merged


def apply_overrides(cfg, items):
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
    cfg = copy.deepcopy(cfg)
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {p!r} is not a section")
        node[parts[-1]] = yaml.safe_load(raw)
    return cfg


# ----------------------------------------------------------------------
# schema: key -> (types, default); a dict value is a nested section
_NUM = (int, float)
_REQ = object()

SUBBAND = {
    "n_prb": (int, 4),
    "center": (int, 0),
    "waveform": (str, "fc"),
    "scs_exp": (int, 0),
    "modulation": (str, "qpsk"),
    "dft_spread": (bool, False),
    "overlap": (_NUM, 0.5),
    "n_tbw": (int, 2),
    "mask": ((str, list, type(None)), None),
    "wola_ws": (int, 72),
    "wola_rx_ws": ((int, type(None)), None),
    "tone_offset": (int, 0),
    "n_fir": (int, 512),
    "uf_atten_db": (_NUM, 37.0),
}

TRANSMITTER = {
    "subbands": (list, _REQ),
    "pa": ((str, type(None)), None),
    "ibo_db": (_NUM, 11.6),
    "time_offset": (int, 0),
    "power_offset_db": (_NUM, 0.0),
}

SCHEMA = {
    "seed": (int, 0),
    "threads": ((int, type(None)), None),
    "design": {
        "n_prb": (int, 4),
        "overlap": (_NUM, 0.5),
        "n_tbw": (int, 2),
        "a_s_db": (_NUM, 10.0),
        "mode": (str, "both"),
        "center": (int, 0),
        "scs_exp": (int, 0),
        "n_restarts": (int, 8),
        "max_evals": (int, 2000),
        "fc": ((dict, type(None)), None),
    },
    "analyze": {
        "mask": ((str, type(None)), None),
        "subbands": (list, _REQ),
        "mode": (str, "both"),
        "guard_sweep": (list, []),
        "density": (int, 16),
        "window_offset": (int, 0),
    },
    "psd": {
        "transmitter": (dict, _REQ),
        "n_realizations": (int, 100),
        "rbw_hz": (_NUM, 30e3),
        "fs_hz": (_NUM, 15.36e6),
        "n_subframes": (int, 1),
        "guard": (int, 72),
    },
    "linksim": {
        "target": (dict, _REQ),
        "interferers": (list, []),
        "channel_taps": (list, [1.0]),
        "rms_delay": ((_NUM, type(None)), None),
        "snr_db": ((_NUM, type(None)), None),
        "rx_window": ((str, int), "end"),
        "guard": (int, 72),
        "truncate": (bool, True),
        "n_subframes": (int, 10),
        "equalize": (bool, False),
        "trials": (int, 1),
        "max_power": ((dict, type(None)), None),
        "constellation": (bool, False),
    },
    "complexity": {
        "allocations": (list, [["1 PRB", 1, 1], ["4 PRBs", 4, 1], ["50 PRBs", 50, 1],
                               ["12x4 PRBs", 4, 12]]),
        "overlaps": (list, [0.5, 0.25]),
        "n_tbw": (int, 2),
        "fir_lengths": (list, [73, 512]),
    },
}


def _check(section, schema, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping")
    out = {}
    for k in section:
        if k not in schema and not k.startswith("_"):
            raise ConfigError(f"{where}.{k}: unknown key")
    for k, spec in schema.items():
        key = f"{where}.{k}" if where else k
        if isinstance(spec, dict):
            if k in section:
                out[k] = _check(section[k], spec, key)
            continue
        types, default = spec
        if k not in section:
            if default is _REQ:
                raise ConfigError(f"{key}: required key missing")
            out[k] = copy.deepcopy(default)
            continue
        v = section[k]
        ok = isinstance(v, types) and not (isinstance(v, bool) and bool not in _tuple(types))
        if not ok:
            raise ConfigError(f"{key}: expected {_names(types)}, got {type(v).__name__}")
        out[k] = v
    for k, v in section.items():
        if k.startswith("_"):
            out[k] = v
    return out


def _tuple(t):
    return t if isinstance(t, tuple) else (t,)


def _names(t):
    return " or ".join(x.__name__ for x in _tuple(t))


def validate(cfg, command=None):
    """Check ``cfg`` against the schema and fill defaults.

    ``command`` names the section that must be present.
    """
    out = _check(cfg, SCHEMA, "")
    if command is not None and command not in out:
        if command in ("design", "complexity"):
            out[command] = _check({}, SCHEMA[command], command)
        else:
            raise ConfigError(f"{command}: section missing")
    for sec, key in (("analyze", "subbands"), ("psd", None), ("linksim", None)):
        if sec not in out:
            continue
        if key and not out[sec][key]:
            raise ConfigError(f"{sec}.{key}: at least one subband is required")
    if "analyze" in out:
        out["analyze"]["subbands"] = [_check(s, SUBBAND, f"analyze.subbands[{i}]")
                                      for i, s in enumerate(out["analyze"]["subbands"])]
    if "psd" in out:
        out["psd"]["transmitter"] = check_transmitter(out["psd"]["transmitter"], "psd.transmitter")
    if "linksim" in out:
        ls = out["linksim"]
        ls["target"] = check_transmitter(ls["target"], "linksim.target")
        ls["interferers"] = [check_transmitter(t, f"linksim.interferers[{i}]")
                             for i, t in enumerate(ls["interferers"])]
    return out


def check_transmitter(t, where):
    t = _check(t, TRANSMITTER, where)
    if not t["subbands"]:
        raise ConfigError(f"{where}.subbands: at least one subband is required")
    t["subbands"] = [_check(s, SUBBAND, f"{where}.subbands[{i}]") for i, s in enumerate(t["subbands"])]
    return t


def default_threads():
    """Thread count from ``FCWAVE_THREADS`` (default 1)."""
    raw = os.environ.get("FCWAVE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FCWAVE_THREADS={raw!r} is not an integer") from None
    return max(1, n)
