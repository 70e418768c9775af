"""Default embedding parameters and the declarative bench configuration file."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .attacks import AttackSpec, parse_attack
from .codec import EmbedParams
from .keying import SecretKey
from .spectral import midband_mask


def load_defaults(path=None) -> dict:
    if path is None:
        text = resources.files("dftwm.data").joinpath("defaults.yaml").read_text()
    else:
        text = Path(path).read_text()
    return yaml.safe_load(text) or {}


def default_params(path=None) -> EmbedParams:
    d = load_defaults(path)
    return EmbedParams(
        gain=float(d["gain"]),
        mask=midband_mask(d.get("mask", "default")),
        assignment=d.get("assignment", "raster"),
    )


def write_gain(path, gain: float) -> None:
    """Store ``gain`` in a defaults-style YAML file, keeping its other keys."""
    path = Path(path)
    data = load_defaults(path) if path.exists() else load_defaults()
    data["gain"] = float(gain)
    path.write_text(yaml.safe_dump(data, sort_keys=False))


BENCHMARK_GRID = (
    [f"jpeg:q={q}" for q in (60, 65, 70, 75, 80, 85, 90)]
    + ["gauss-noise:var=0.001"]
    + [f"sp:d={d}" for d in (0.01, 0.02, 0.04, 0.06)]
    + [f"gauss-filter:w={w},sigma=0.5" for w in (3, 5, 7, 9)]
    + [f"gauss-filter:w={w},sigma=0.5,border=replicate" for w in (3, 5, 7, 9)]
    + ["histeq", "histeq+gauss-noise:var=0.001"]
)
PRESETS = {"paper": BENCHMARK_GRID}


@dataclass
class BenchConfig:
    images: list
    payloads: list
    key: SecretKey
    gain: object  # float or "calibrate:<target_db>"
    attacks: list[AttackSpec]
    seed: int = 0
    output: Optional[Path] = None
    format: str = "csv"
    mask: str = "default"
    assignment: str = "raster"
    average: bool = False
    fixtures: Optional[Path] = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.images:
            raise ValueError("bench needs at least one image")
        if not self.payloads:
            raise ValueError("bench needs at least one payload")
        if not self.attacks:
            raise ValueError("bench needs at least one attack")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if isinstance(self.gain, str):
            parse_gain(self.gain)
        if self.output is not None:
            parent = Path(self.output).resolve().parent
            if not parent.is_dir():
                raise ValueError(f"output directory {parent} does not exist")


def parse_gain(value) -> object:
    """A float gain, or the string ``calibrate:<target_db>``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    if text.startswith("calibrate:"):
        try:
            float(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad calibration target in {text!r}") from None
        return text
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"gain must be a number or calibrate:<dB>, got {text!r}") from None


def expand_attacks(items) -> list[AttackSpec]:
    out = []
    for item in items:
        if item in PRESETS:
            out.extend(parse_attack(t) for t in PRESETS[item])
        else:
            out.append(parse_attack(item))
    return out


def load_bench_config(path) -> dict:
    """Read a YAML bench config; keys mirror :class:`BenchConfig` fields."""
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: bench config must be a mapping")
    return data
