"""YAML run configuration with line-anchored validation errors.

Schema (every block except ``params`` is optional)::

    params:            # SystemParams fields; ``kappa`` sets all three cavity rates,
                       # ``temperature`` (K) with ``omega_m_hz`` sets n_th
    sweep:    {variable, start, stop, count, log, delta, offsets: {L, C, R}}
    scenario: {family, eps, center_ratio, fwd: [wL, wC, wR], bwd: [...]}
    backends: [analytic | kerr | full, ...]
    truncation: {kerr: [dL, dC, dR], full: [dL, dC, dR, db], excitation_cap}
    output:   {dir, name, formats: [csv | json | svg, ...]}
    seed: int
    steady:   {value}
    spectrum: {s_max, n_max, phonon_cutoff}
    upb:      {g_range: [lo, hi], delta_range: [lo, hi], grid: [ng, nd], threshold}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, InvalidArgument
from .model import SystemParams, thermal_occupancy
from .transport import BACKENDS, FAMILIES, PARAM_FIELDS, SweepSpec

log = logging.getLogger("omtrans")

FORMATS = ("csv", "json", "svg")

_NUM = "number"
_INT = "int"
_BOOL = "bool"
_STR = "str"

SCHEMA = {
    "params": {**{k: _NUM for k in PARAM_FIELDS}, "kappa": _NUM, "omega_m_hz": _NUM,
               "temperature": _NUM, "nonlinear_sign": _STR},
    "sweep": {"variable": _STR, "start": _NUM, "stop": _NUM, "count": _INT, "log": _BOOL,
              "delta": _NUM, "offsets": {"L": _NUM, "C": _NUM, "R": _NUM}},
    "scenario": {"family": _STR, "eps": _NUM, "center_ratio": _NUM,
                 "fwd": [_NUM], "bwd": [_NUM]},
    "backends": [_STR],
    "truncation": {"kerr": [_INT], "full": [_INT], "excitation_cap": _INT},
    "output": {"dir": _STR, "name": _STR, "formats": [_STR]},
    "seed": _INT,
    "steady": {"value": _NUM},
    "spectrum": {"s_max": _INT, "n_max": _INT, "phonon_cutoff": _INT},
    "upb": {"g_range": [_NUM], "delta_range": [_NUM], "grid": [_INT], "threshold": _NUM},
}

DEFAULTS = {
    ("sweep", "variable"): "delta",
    ("sweep", "start"): -0.05,
    ("sweep", "stop"): 0.05,
    ("sweep", "count"): 101,
    ("sweep", "log"): False,
    ("sweep", "delta"): 0.0,
    ("scenario", "family"): "diode",
    ("scenario", "eps"): 1e-4,
    ("backends",): ["analytic"],
    ("output", "dir"): "out",
    ("output", "name"): "sweep",
    ("output", "formats"): ["csv"],
    ("seed",): 0,
    ("spectrum", "s_max"): 2,
    ("spectrum", "n_max"): 3,
    ("spectrum", "phonon_cutoff"): 60,
    ("upb", "grid"): [41, 81],
    ("upb", "threshold"): 1e-6,
}


@dataclass
class RunConfig:
    params: SystemParams
    sweep: SweepSpec
    raw: dict
    output_dir: Path
    output_name: str
    formats: tuple
    seed: int
    source: str | None = None
    defaults_applied: list = field(default_factory=list)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {}) or {}


def _line(node) -> int:
    return node.start_mark.line + 1


def _coerce(value, kind, node, path, where):
    if kind == _NUM:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number, got {value!r}", _line(node), where)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{path}: expected a number, got {value!r}", _line(node), where)
        if isinstance(value, (int, float)):
            return float(value)
        raise ConfigError(f"{path}: expected a number", _line(node), where)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}", _line(node), where)
        return value
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false", _line(node), where)
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string", _line(node), where)
        return value
    raise AssertionError(kind)


def _validate(node, schema, path, where, loader):
    if isinstance(schema, dict):
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"{path or 'document'}: expected a mapping", _line(node), where)
        out = {}
        for knode, vnode in node.value:
            key = knode.value
            sub = f"{path}.{key}" if path else key
            if key not in schema:
                raise ConfigError(f"unknown key {sub!r}", _line(knode), where)
            if key in out:
                raise ConfigError(f"duplicate key {sub!r}", _line(knode), where)
            out[key] = _validate(vnode, schema[key], sub, where, loader)
        return out
    if isinstance(schema, list):
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError(f"{path}: expected a list", _line(node), where)
        return [_validate(v, schema[0], f"{path}[{i}]", where, loader)
                for i, v in enumerate(node.value)]
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{path}: expected a scalar", _line(node), where)
    value = loader.construct_object(node, deep=True)
    return _coerce(value, schema, node, path, where)


def load_yaml(text: str, where: str | None = None) -> tuple[dict, dict]:
    """Validated raw mapping plus a map from dotted key to line number."""
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          None if mark is None else mark.line + 1, where)
    if node is None:
        raise ConfigError("empty configuration", 1, where)
    lines = {}

    def walk(n, path):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                sub = f"{path}.{k.value}" if path else k.value
                lines[sub] = _line(k)
                walk(v, sub)
    walk(node, "")
    raw = _validate(node, SCHEMA, "", where, loader)
    loader.dispose()
    return raw, lines


def _err(msg, key, lines, where):
    return ConfigError(msg, lines.get(key), where)


def _apply_defaults(raw: dict) -> list[str]:
    applied = []
    for path, value in DEFAULTS.items():
        d = raw
        for key in path[:-1]:
            d = d.setdefault(key, {})
        if path[-1] not in d:
            d[path[-1]] = list(value) if isinstance(value, list) else value
            applied.append(f"{'.'.join(path)} = {value}")
    return applied


def build_params(block: dict, lines: dict, where=None) -> SystemParams:
    block = dict(block)
    if "kappa" in block:
        k = block.pop("kappa")
        for name in ("kappa_L", "kappa_C", "kappa_R"):
            if name in block:
                raise _err(f"params.kappa conflicts with params.{name}", f"params.{name}",
                           lines, where)
            block[name] = k
    temperature = block.pop("temperature", None)
    if temperature is not None:
        if "n_th" in block:
            raise _err("params.temperature conflicts with params.n_th", "params.temperature",
                       lines, where)
        if "omega_m_hz" not in block:
            raise _err("params.temperature needs params.omega_m_hz", "params.temperature",
                       lines, where)
        try:
            block["n_th"] = thermal_occupancy(block["omega_m_hz"], temperature)
        except InvalidArgument as exc:
            raise _err(str(exc), "params.temperature", lines, where)
    try:
        return SystemParams(**block)
    except InvalidArgument as exc:
        key = next((f"params.{k}" for k in block if k in str(exc)), "params")
        raise _err(str(exc), key, lines, where)


def parse_config_text(text: str, where: str | None = None) -> RunConfig:
    raw, lines = load_yaml(text, where)
    if "params" not in raw:
        raise ConfigError("missing required key 'params'", 1, where)
    applied = _apply_defaults(raw)
    for item in applied:
        log.info("default applied: %s", item)
    params = build_params(raw["params"], lines, where)

    sw = raw["sweep"]
    if sw["count"] < 1:
        raise _err("sweep.count must be >= 1", "sweep.count", lines, where)
    if sw["log"]:
        if sw["start"] <= 0 or sw["stop"] <= 0:
            raise _err("log sweeps need positive start and stop", "sweep.log", lines, where)
        values = np.geomspace(sw["start"], sw["stop"], sw["count"])
    else:
        values = np.linspace(sw["start"], sw["stop"], sw["count"])
    off = sw.get("offsets", {})
    offsets = (off.get("L", 0.0), off.get("C", 0.0), off.get("R", 0.0))

    sc = raw["scenario"]
    if sc["family"] not in FAMILIES:
        raise _err(f"scenario.family must be one of {list(FAMILIES)}", "scenario.family",
                   lines, where)
    for key in ("fwd", "bwd"):
        if key in sc and len(sc[key]) != 3:
            raise _err(f"scenario.{key} needs three weights", f"scenario.{key}", lines, where)
    if not sc["eps"] > 0:
        raise _err("scenario.eps must be positive", "scenario.eps", lines, where)
    for b in raw["backends"]:
        if b not in BACKENDS:
            raise _err(f"unknown backend {b!r}", "backends", lines, where)
    fmts = raw["output"]["formats"]
    for f in fmts:
        if f not in FORMATS:
            raise _err(f"unknown output format {f!r}", "output.formats", lines, where)
    tr = raw.get("truncation", {})
    dims = {k: tuple(tr[k]) for k in ("kerr", "full") if k in tr}
    if "kerr" in dims and len(dims["kerr"]) != 3:
        raise _err("truncation.kerr needs three dims", "truncation.kerr", lines, where)
    if "full" in dims and len(dims["full"]) != 4:
        raise _err("truncation.full needs four dims", "truncation.full", lines, where)
    for k, v in dims.items():
        if any(d < 1 for d in v):
            raise _err("dims must be >= 1", f"truncation.{k}", lines, where)
    try:
        spec = SweepSpec(params=params, values=values, variable=sw["variable"],
                         delta=sw["delta"], offsets=offsets, family=sc["family"],
                         eps=sc["eps"], center_ratio=sc.get("center_ratio"),
                         weights_fwd=tuple(sc["fwd"]) if "fwd" in sc else None,
                         weights_bwd=tuple(sc["bwd"]) if "bwd" in sc else None,
                         backends=tuple(raw["backends"]), dims=dims,
                         excitation_cap=tr.get("excitation_cap"))
    except InvalidArgument as exc:
        raise _err(str(exc), "sweep.variable", lines, where)
    upb = raw.get("upb", {})
    for key in ("g_range", "delta_range", "grid"):
        if key in upb and len(upb[key]) != 2:
            raise _err(f"upb.{key} needs two entries", f"upb.{key}", lines, where)
    return RunConfig(params=params, sweep=spec, raw=raw,
                     output_dir=Path(raw["output"]["dir"]), output_name=raw["output"]["name"],
                     formats=tuple(fmts), seed=raw["seed"], source=where,
                     defaults_applied=applied)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path))
    return parse_config_text(text, str(path))


def recipe_path(name: str) -> Path:
    """Path of a shipped recipe, e.g. ``recipe_path("diode_cpb")``."""
    from importlib import resources

    stem = name[:-5] if name.endswith(".yaml") else name
    path = Path(str(resources.files("omtrans") / "recipes" / f"{stem}.yaml"))
    if not path.is_file():
        raise ConfigError(f"no recipe named {stem!r}")
    return path
