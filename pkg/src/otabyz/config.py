"""Flat ``key = value`` configuration files, presets and CSV metric output.

Keys are dotted paths into ``SimConfig`` (``ota.sigma2 = 0.01``). Precedence
when building a config is flags > file > preset > defaults.
"""
from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path

from .engine import ConfigError, DataConfig, SimConfig

SECTIONS = ("sgd", "ota", "geomed", "attack", "data")
# external key name -> dataclass field name
ALIASES = {"sgd.lambda": "lam", "attack.B": "byzantine_count"}
CSV_COLUMNS = ("round", "train_loss", "test_loss", "test_acc", "dist_sq", "bound",
               "empty_groups", "weiszfeld_iters")


def _field_map() -> dict:
    """Dotted key -> (section or None, field name, default value)."""
    renames = {f"{k.split('.')[0]}.{v}": k for k, v in ALIASES.items()}
    defaults = SimConfig()
    out = {}
    for f in dataclasses.fields(SimConfig):
        if f.name not in SECTIONS:
            out[f.name] = (None, f.name, getattr(defaults, f.name))
            continue
        sub = getattr(defaults, f.name)
        for sf in dataclasses.fields(sub):
            key = f"{f.name}.{sf.name}"
            out[renames.get(key, key)] = (f.name, sf.name, getattr(sub, sf.name))
    return out


FIELDS = _field_map()


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if key == "geomed.tol":
            return None if raw.lower() in ("", "auto", "none") else float(raw)
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def parse_pairs(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a raw string mapping."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        pairs[key] = value
    return pairs


def apply_overrides(cfg: SimConfig, pairs: dict) -> SimConfig:
    top = {}
    nested = {s: {} for s in SECTIONS}
    for key, raw in pairs.items():
        if key not in FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        section, name, default = FIELDS[key]
        value = raw if not isinstance(raw, str) else _coerce(key, raw, default)
        if section is None:
            top[name] = value
        else:
            nested[section][name] = value
    try:
        for section, values in nested.items():
            if values:
                top[section] = dataclasses.replace(getattr(cfg, section), **values)
        cfg = dataclasses.replace(cfg, **top)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def parse_config(path=None, overrides=None, base: SimConfig | None = None) -> SimConfig:
    """Build a validated config from defaults, an optional file and overrides.

    ``overrides`` is a mapping or an iterable of ``"key=value"`` strings.
    """
    cfg = base if base is not None else SimConfig()
    pairs = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        pairs.update(parse_pairs(text, str(path)))
    if overrides:
        if isinstance(overrides, dict):
            pairs.update(overrides)
        else:
            pairs.update(parse_pairs("\n".join(overrides), "<flags>"))
    return apply_overrides(cfg, pairs)


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for key, (section, name, _) in FIELDS.items():
        value = getattr(getattr(cfg, section), name) if section else getattr(cfg, name)
        if value is None:
            text = "auto"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value).lower() if isinstance(value, bool) else str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


# -- presets ---------------------------------------------------------------

GAUSSIAN_B9 = {"attack.kind": "gaussian", "attack.B": 9, "attack.variance": 30.0}

THEOREM_VALIDATION = {
    "N": 40, "G": 10, "rounds": 30, "bound": True, "eval_every": 1,
    "sgd.H": 1, "sgd.b": 1000, "sgd.eta": 0.2, "sgd.lambda": 0.5,
    "ota.sigma2": 1e-5, "ota.rho_mode": "estimated",
    "attack.kind": "gaussian", "attack.B": 2, "attack.variance": 30.0,
    "data.source": "ridge", "data.synth_d": 9, "data.synth_train": 80000,
    "data.synth_test": 2000, "data.noise": 0.5,
}

PRESETS = {
    "default": ({}, "Numerical-results defaults, no attack"),
    "fig1-geomed": (dict(GAUSSIAN_B9, aggregation="geomed"),
                    "Gaussian attack, B=9, grouped geometric-median aggregation"),
    "fig1-mean": (dict(GAUSSIAN_B9, aggregation="mean"),
                  "Gaussian attack, B=9, simple over-the-air averaging"),
    **{
        f"fig2-classflip-B{b}": ({"attack.kind": "classflip" if b else "none", "attack.B": b},
                                 f"Class-flip attack with B={b}, geometric median" if b
                                 else "Class-flip baseline without attackers, geometric median")
        for b in (0, 3, 6, 9)
    },
    "theorem-validation": (THEOREM_VALIDATION,
                           "Ridge regression, H=1, B=2 Gaussian attackers, bound column"),
}


def preset_config(name: str) -> SimConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; see 'presets'")
    return apply_overrides(SimConfig(), PRESETS[name][0])


# -- metrics ---------------------------------------------------------------

def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_csv(metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for m in metrics:
        writer.writerow([_cell(getattr(m, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_metrics(metrics, path) -> Path:
    path = Path(path)
    try:
        path.write_text(metrics_csv(metrics))
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc.strerror}") from exc
    return path


__all__ = ["parse_config", "dump_config", "emit_metrics", "metrics_csv", "preset_config",
           "PRESETS", "CSV_COLUMNS", "DataConfig"]
