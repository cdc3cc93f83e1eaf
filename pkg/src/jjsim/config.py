"""YAML run configuration: loading, overrides and schema checks.

Each subcommand documents its keys in ``SCHEMAS``.  Every leaf is
``(type, required, default, unit)``; nested dicts describe sub-sections.
Schema problems raise :class:`ConfigurationError` naming the key and, when
known, the line in the file.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

from .errors import ConfigurationError

NUM = (int, float)
_R, _O = True, False

JUNCTION = {
    "critical_current": (NUM, _R, None, "A"),
    "capacitance": (NUM, _R, None, "F"),
    "bias_ratio": (NUM, _O, 0.0, "1"),
    "K": (NUM, _O, 1.0, "1"),
}

QUBIT_DEVICE = {
    "mutual_inductance": (NUM, _R, None, "H"),
    "qubit_squid_critical_current": (NUM, _R, None, "A"),
}

SCHEMAS = {
    "modes": {
        "topology": (str, _R, None, "chain|complete"),
        "N": (int, _R, None, "count"),
        "junction": JUNCTION,
        "disorder": {
            "vertical_spread": (NUM, _O, 0.0, "1 (uniform +/- fraction, seeded)"),
            "vertical_multipliers": (list, _O, None, "1"),
            "horizontal_multipliers": (list, _O, None, "1"),
        },
        "g_over_omega_p": (NUM, _O, None, "omega_p"),
        "qubit": QUBIT_DEVICE,
        "margin": (NUM, _O, 10.0, "1"),
        "unit_system": (str, _O, "model", "model|si"),
        "output_dir": (str, _O, None, "path"),
    },
    "qed": {
        "resonator_freq": (NUM, _O, 1.0, "energy"),
        "qubit_Bz": (NUM, _O, None, "energy"),
        "qubit_Bx": (NUM, _O, 0.0, "energy"),
        "coupling_g": (NUM, _O, None, "energy"),
        "fock_cutoff": (int, _O, 8, "quanta"),
        "device": {"junction": JUNCTION, "qubit": QUBIT_DEVICE, "N": (int, _R, None, "count")},
        "initial": {"qubit": (str, _O, "e", "g|e"), "photons": (int, _O, 0, "quanta")},
        "times": {
            "start": (NUM, _O, 0.0, "1/energy"),
            "stop": (NUM, _R, None, "1/energy"),
            "num": (int, _O, 1000, "count"),
        },
        "spectroscopy": {
            "detuning_start": (NUM, _R, None, "energy"),
            "detuning_stop": (NUM, _R, None, "energy"),
            "num": (int, _O, 41, "count"),
        },
        "output_dir": (str, _O, None, "path"),
    },
    "holstein": {
        "N_sites": (int, _R, None, "count"),
        "hopping": (NUM, _O, None, "energy"),
        "exchange_J": (NUM, _O, None, "energy (t = J/4)"),
        "phonon_freq": (NUM, _O, 1.0, "energy"),
        "coupling": (NUM, _O, 0.0, "energy"),
        "boundary": (str, _O, "open", "open|periodic"),
        "phonon_cutoff": (int, _O, 4, "quanta"),
        "anharmonic": (NUM, _O, 0.0, "energy"),
        "chemical_Bz": (NUM, _O, 0.0, "energy"),
        "leakage_Bx": (NUM, _O, 0.0, "energy"),
        "filling": (int, _O, None, "fermions"),
        "states": (int, _O, 2, "count"),
        "ramp": {
            "total_time": (NUM, _R, None, "1/energy"),
            "steps": (int, _R, None, "count"),
            "staggered_field": (NUM, _O, 0.0, "energy"),
            "convergence_times": (list, _O, None, "1/energy"),
        },
        "scan": {
            "g_over_omega": ((list, dict), _R, None, "1 (list or start/stop/num)"),
            "t_over_omega": ((list, dict), _R, None, "1 (list or start/stop/num)"),
        },
        "output_dir": (str, _O, None, "path"),
    },
}


def _key_lines(node, prefix=()) -> dict:
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (str(k.value),)
            lines[path] = k.start_mark.line + 1
            lines.update(_key_lines(v, path))
    return lines


def load(path) -> tuple[dict, dict]:
    """Parse a YAML file; returns the mapping and a key-path -> line index."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: YAML syntax error: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return data, _key_lines(node)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as YAML scalars."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} must look like key.path=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        target = data
        for p in parts[:-1]:
            target = target.setdefault(p, {})
            if not isinstance(target, dict):
                raise ConfigurationError(f"override {key!r} descends into a non-mapping")
        target[parts[-1]] = yaml.safe_load(raw)
    return data


def _where(path, lines) -> str:
    line = lines.get(tuple(path))
    key = ".".join(path)
    return f"key '{key}'" + (f" (line {line})" if line else "")


def validate(data: dict, schema: dict, lines: dict | None = None, prefix=()) -> dict:
    """Check ``data`` against ``schema`` and fill defaults; returns a new dict."""
    lines = lines or {}
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigurationError(f"unknown {_where(prefix + (key,), lines)}")
    for key, rule in schema.items():
        path = prefix + (key,)
        if isinstance(rule, dict):
            if key in data:
                if not isinstance(data[key], dict):
                    raise ConfigurationError(f"{_where(path, lines)} must be a mapping")
                out[key] = validate(data[key], rule, lines, path)
            continue
        kind, required, default, _unit = rule
        if key not in data or data[key] is None:
            if required:
                raise ConfigurationError(f"missing required key '{'.'.join(path)}'")
            out[key] = default
            continue
        value = data[key]
        if kind is NUM:
            ok = isinstance(value, NUM) and not isinstance(value, bool)
        elif kind is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, kind)
        if not ok:
            if kind is NUM:
                expected = "number"
            elif isinstance(kind, tuple):
                expected = " or ".join(k.__name__ for k in kind)
            else:
                expected = kind.__name__
            raise ConfigurationError(f"{_where(path, lines)} must be a {expected}, got {value!r}")
        out[key] = float(value) if kind is NUM else value
    return out


def grid(spec, name: str) -> list[float]:
    """Grids are lists of numbers or ``[start, stop, num]`` written as a mapping."""
    if isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"grid '{name}' needs start, stop, num") from exc
        if num < 1:
            raise ConfigurationError(f"grid '{name}' needs num >= 1")
        if num == 1:
            return [start]
        return [start + (stop - start) * k / (num - 1) for k in range(num)]
    if not isinstance(spec, list) or not all(isinstance(v, NUM) and not isinstance(v, bool) for v in spec):
        raise ConfigurationError(f"grid '{name}' must be a list of numbers")
    return [float(v) for v in spec]
