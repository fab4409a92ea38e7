"""Run configuration: defaults, JSON loading with strict keys, hashing, seeds."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError

SQRT2 = math.sqrt(2.0)

CAMERAS = ("12mp", "7mp", "720p")
METHODS = ("m1", "m2", "m3", "m4")
CLASSIFIERS = ("svm", "knn")
SIZES = (40, 60, 80, 100)


@dataclass(frozen=True)
class BankSettings:
    wavelengths: tuple = (4.0, 4.0 * SQRT2, 8.0, 8.0 * SQRT2, 16.0)
    orientations_deg: tuple = tuple(45.0 * k for k in range(8))
    psi_deg: float = 0.0
    gamma: float = 0.5
    bandwidth: float = 1.0
    texture_mode: str = "magnitude"  # or "raw"
    padding: str = "mirror"  # or "zero"


@dataclass(frozen=True)
class ClassifierSettings:
    k: int = 5
    C: float = 1.0
    kernel: str = "rbf"  # or "linear"
    rbf_gamma: float | None = None  # None -> 1 / n_features


@dataclass(frozen=True)
class SelectionSettings:
    """Candidate grid for per-block bank selection (methods 3 and 4).

    Candidates are `window`-wide sliding windows over the wavelength ladder,
    crossed with 8-orientation sets at each angular offset.
    """

    lambda_ladder: tuple = (
        2.0, 2.0 * SQRT2, 4.0, 4.0 * SQRT2, 8.0, 8.0 * SQRT2, 16.0, 16.0 * SQRT2, 32.0
    )
    window: int = 5
    theta_offsets_deg: tuple = (0.0, 22.5)


@dataclass(frozen=True)
class SweepSettings:
    cameras: tuple = CAMERAS
    methods: tuple = METHODS
    classifiers: tuple = CLASSIFIERS
    sizes: tuple = SIZES


@dataclass(frozen=True)
class Config:
    bank: BankSettings = field(default_factory=BankSettings)
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    selection: SelectionSettings = field(default_factory=SelectionSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    cheek_mode: str = "mean"  # or "right" / "left"
    seed: int = 0
    repeats: int = 1
    manifest: str | None = None
    out_dir: str = "out"


_SECTION_TYPES = {
    "bank": BankSettings,
    "classifier": ClassifierSettings,
    "selection": SelectionSettings,
    "sweep": SweepSettings,
}


def _from_dict(cls, data: dict, path: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {path + key!r}")
        if key in _SECTION_TYPES and isinstance(value, dict):
            kwargs[key] = _from_dict(_SECTION_TYPES[key], value, path + key + ".")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return _from_dict(Config, data, "")


def load_config(path=None, overrides: dict | None = None) -> Config:
    """Build a Config from an optional JSON file plus flat overrides.

    Override keys (seed, repeats, manifest, out_dir) win over file values.
    """
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in config file {path}: {exc}") from None
    cfg = config_from_dict(data)
    if overrides:
        known = {f.name for f in dataclasses.fields(Config)}
        bad = set(overrides) - known
        if bad:
            raise ConfigError(f"unknown config key {sorted(bad)[0]!r}")
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def config_to_dict(cfg: Config) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: Config) -> str:
    """Hash of the experiment-defining fields (paths are excluded so the same
    experiment written to two directories hashes identically)."""
    data = config_to_dict(cfg)
    data.pop("manifest", None)
    data.pop("out_dir", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit sub-seed from a master seed and context tokens."""
    text = f"{master}|" + "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF
