"""INI run configuration with explicit units.

Lengths are written with a suffix (``A``, ``nm``, ``um`` or ``mm``) and
stored in Angstrom; voltages with ``V`` or ``kV`` and stored in volts;
spatial frequencies with ``1/A``; phases optionally with ``rad``. Unknown
sections and keys are rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

LENGTH_UNITS = {"a": 1.0, "å": 1.0, "angstrom": 1.0, "nm": 10.0, "um": 1e4, "µm": 1e4, "mm": 1e7}
VOLTAGE_UNITS = {"v": 1.0, "kv": 1e3}
INV_LENGTH_UNITS = {"1/a": 1.0, "1/å": 1.0, "1/nm": 0.1}
PHASE_UNITS = {"": 1.0, "rad": 1.0}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

# section -> key -> (kind, default text)
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "microscope": {
        "voltage": ("voltage", "80 kV"),
        "defocus": ("length", "-800 A"),
        "c3": ("length", "1.3 mm"),
        "c5": ("length", "0 mm"),
        "cc": ("length", "0 mm"),
        "energy_spread_rel": ("float", "0"),
        "source_size": ("length", "0 A"),
        "propagation_z": ("length", "0 A"),
    },
    "grid": {
        "n_side": ("int", "64"),
        "box_length": ("length", "12.8 A"),
    },
    "specimen": {
        "source": ("str", "mos2"),
        "nx": ("int", "3"),
        "ny": ("int", "2"),
        "lattice_constant": ("length", "3.16 A"),
        "gaussian_tables": ("path", ""),
    },
    "ctf": {
        "voltages": ("voltage_list", "80 kV"),
        "c3s": ("length_list", "0 mm, 0.5 mm, 1.3 mm, 2.0 mm"),
        "defoci": ("defocus_list", "scherzer"),
        "k_max": ("inv_length", "1.0 1/A"),
        "n_points": ("int", "512"),
        "samples": ("int", "10000"),
        "strict_printed": ("bool", "false"),
    },
    "simulate": {
        "engine": ("str", "both"),
        "shots": ("int", "0"),
        "seed": ("int", "0"),
        "trace": ("bool", "false"),
    },
    "resources": {
        "grids": ("int_list", "4, 16, 64, 256, 1024"),
        "epsilon": ("float", "0.01"),
        "n_atoms": ("int", "18"),
        "n_gaussians": ("int", "5"),
        "kappa0": ("float", "5120"),
        "kappa1": ("float", "82.6"),
        "precision_bits": ("int", "24"),
        "code_distance": ("int", "17"),
        "gate_time_s": ("float", "1e-6"),
        "atom_multiplier": ("float", "1"),
    },
    "phase_disc": {
        "n_side": ("int", "16"),
        "box_length": ("length", "12.8 A"),
        "defocus": ("length", "0 A"),
        "c3": ("length", "0 mm"),
        "peak_phase": ("phase", "0.5 rad"),
        "width_px": ("float", "3"),
        "random_phase_std": ("phase", "0.3 rad"),
        "seed": ("int", "0"),
    },
    "throughfocus": {
        "start": ("length", "-1000 A"),
        "stop": ("length", "1050 A"),
        "steps": ("int", "18"),
        "engine": ("str", "classical"),
    },
    "output": {
        "dir": ("str", ""),
    },
    "run": {
        "jobs": ("int", "1"),
    },
}

ENGINE_CHOICES = ("classical", "quantum", "both")


def _quantity(text: str, units: dict[str, float], what: str) -> float:
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"{what}: cannot parse {text!r} as a number")
    value, unit = float(m.group(1)), m.group(2).lower()
    if unit not in units:
        allowed = ", ".join(repr(u) for u in units if u) or "none"
        raise ConfigError(f"{what}: unit {m.group(2)!r} not accepted (use {allowed})")
    return value * units[unit]


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_value(kind: str, text: str, what: str, base_dir: Path | None = None):
    text = text.strip()
    try:
        if kind == "length":
            return _quantity(text, LENGTH_UNITS, what)
        if kind == "voltage":
            return _quantity(text, VOLTAGE_UNITS, what)
        if kind == "inv_length":
            return _quantity(text, INV_LENGTH_UNITS, what)
        if kind == "phase":
            return _quantity(text, PHASE_UNITS, what)
        if kind == "float":
            return _quantity(text, {"": 1.0}, what)
        if kind == "int":
            return int(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{what}: expected a boolean, got {text!r}")
        if kind == "str":
            return text
        if kind == "path":
            if not text:
                return None
            path = Path(text)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"{what}: file {str(path)!r} does not exist")
            return path
        if kind == "int_list":
            return [int(t) for t in _split(text)]
        if kind == "length_list":
            return [_quantity(t, LENGTH_UNITS, what) for t in _split(text)]
        if kind == "voltage_list":
            return [_quantity(t, VOLTAGE_UNITS, what) for t in _split(text)]
        if kind == "defocus_list":
            return [t.lower() if t.lower() == "scherzer" else _quantity(t, LENGTH_UNITS, what) for t in _split(text)]
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None
    raise ConfigError(f"{what}: unknown value kind {kind!r}")


@dataclass
class RunConfig:
    """Parsed settings, ``values[section][key]`` in internal units."""

    values: dict[str, dict]
    source: Path | None = None

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown setting [{section}] {key}")
        self.values[section][key] = value

    def validate(self) -> None:
        for section, key in (("simulate", "engine"), ("throughfocus", "engine")):
            if self.values[section][key] not in ENGINE_CHOICES:
                raise ConfigError(f"[{section}] {key} must be one of {ENGINE_CHOICES}")
        if self.values["throughfocus"]["engine"] == "both":
            raise ConfigError("[throughfocus] engine must be classical or quantum")
        for section, key in (("ctf", "voltages"), ("ctf", "c3s"), ("ctf", "defoci"), ("resources", "grids")):
            if not self.values[section][key]:
                raise ConfigError(f"[{section}] {key} must not be empty")
        if self.values["throughfocus"]["steps"] < 1:
            raise ConfigError("[throughfocus] steps must be >= 1")
        if self.values["run"]["jobs"] < 1:
            raise ConfigError("[run] jobs must be >= 1")
        if self.values["simulate"]["shots"] < 0:
            raise ConfigError("[simulate] shots must be >= 0")
        source = self.values["specimen"]["source"]
        if source != "mos2":
            path = Path(source)
            if self.source is not None and not path.is_absolute():
                path = self.source.parent / path
            if not path.exists():
                raise ConfigError(f"[specimen] source {source!r} is neither 'mos2' nor an existing file")
            self.values["specimen"]["source"] = str(path)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Defaults overlaid with the INI file at ``path`` (if any)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    base_dir = None
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {str(path)!r} not found")
        try:
            parser.read_string(path.read_text(), source=str(path))
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        base_dir = path.parent
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    values: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (kind, default) in keys.items():
            text = parser.get(section, key, fallback=default) if parser.has_section(section) else default
            values[section][key] = parse_value(kind, text, f"[{section}] {key}", base_dir)
    config = RunConfig(values, path)
    config.validate()
    return config
