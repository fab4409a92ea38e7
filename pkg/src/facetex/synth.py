"""Labeled synthetic texture datasets: oriented sinusoidal gratings plus
clamped Gaussian noise. Gabor filters are selective for gratings, so class
separability is controlled analytically by the wavelength gap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import DM, HEALTHY
from .config import derive_seed
from .errors import ParameterError
from .images import BLOCK_SIZE, FacialBlocks
from .imgio import write_png

BLOCK_GEN_ORDER = ("forehead", "nose", "cheek")


@dataclass(frozen=True)
class SynthClassSpec:
    """Grating recipe for one class.

    Each block gets its own uniform random phase in [-phase_jitter,
    +phase_jitter]. Amplitude plus three noise sigmas must fit the half
    range so values stay clampable to [0, 1].
    """

    wavelength: float
    orientation: float = 0.0  # radians
    contrast: float = 0.7
    noise_std: float = 0.05
    phase_jitter: float = math.pi

    def __post_init__(self):
        if not math.isfinite(self.wavelength) or self.wavelength < 2.0:
            raise ParameterError(f"wavelength must be >= 2 (Nyquist), got {self.wavelength}")
        if not 0.0 <= self.contrast <= 1.0:
            raise ParameterError(f"contrast must be in [0, 1], got {self.contrast}")
        if not 0.0 <= self.noise_std <= 1.0:
            raise ParameterError(f"noise_std must be in [0, 1], got {self.noise_std}")
        if self.contrast / 2.0 + 3.0 * self.noise_std > 0.5 + 1e-9:
            raise ParameterError(
                "contrast/2 + 3*noise_std must not exceed 0.5 "
                f"(got {self.contrast / 2.0 + 3.0 * self.noise_std:.3f})"
            )
        if not math.isfinite(self.orientation) or not 0.0 <= self.phase_jitter <= math.pi:
            raise ParameterError("orientation must be finite and phase_jitter in [0, pi]")


DM_DEFAULT = SynthClassSpec(wavelength=6.0)
HEALTHY_DEFAULT = SynthClassSpec(wavelength=14.0)

# Camera profiles degrade contrast and raise noise at lower resolution.
CAMERA_PROFILES = {
    "12mp": {"contrast": 0.7, "noise_std": 0.02},
    "7mp": {"contrast": 0.6, "noise_std": 0.05},
    "720p": {"contrast": 0.5, "noise_std": 0.08},
}


def _grating_block(spec: SynthClassSpec, rng: np.random.Generator) -> np.ndarray:
    phase = rng.uniform(-spec.phase_jitter, spec.phase_jitter)
    x = np.arange(BLOCK_SIZE, dtype=np.float64)[None, :]
    y = np.arange(BLOCK_SIZE, dtype=np.float64)[:, None]
    proj = x * math.cos(spec.orientation) + y * math.sin(spec.orientation)
    block = 0.5 + 0.5 * spec.contrast * np.cos(2.0 * math.pi * proj / spec.wavelength + phase)
    if spec.noise_std > 0.0:
        block = block + rng.normal(0.0, spec.noise_std, (BLOCK_SIZE, BLOCK_SIZE))
    return np.clip(block, 0.0, 1.0)


def _sample_blocks(spec: SynthClassSpec, sample_seed: int) -> FacialBlocks:
    rng = np.random.default_rng(sample_seed)
    blocks = {name: _grating_block(spec, rng) for name in BLOCK_GEN_ORDER}
    return FacialBlocks(forehead=blocks["forehead"], nose=blocks["nose"], cheek=blocks["cheek"])


def generate_dataset(
    n_per_class: int,
    dm_spec: SynthClassSpec = DM_DEFAULT,
    healthy_spec: SynthClassSpec = HEALTHY_DEFAULT,
    seed: int = 0,
):
    """n_per_class samples of each class; sample i uses sub-seed seed XOR i.

    Returns (blocks_list, labels) with DM samples first.
    """
    if n_per_class < 2:
        raise ParameterError(f"n_per_class must be >= 2, got {n_per_class}")
    blocks_list = []
    labels = []
    for i in range(2 * n_per_class):
        spec = dm_spec if i < n_per_class else healthy_spec
        blocks_list.append(_sample_blocks(spec, seed ^ i))
        labels.append(DM if i < n_per_class else HEALTHY)
    return blocks_list, np.array(labels, dtype=np.int64)


def _to_u8(block: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(block * 255.0), 0, 255).astype(np.uint8)


def write_synthetic_dataset(
    out_dir,
    n_per_class: int = 50,
    cameras: dict | None = None,
    dm_wavelength: float = 6.0,
    healthy_wavelength: float = 14.0,
    seed: int = 0,
):
    """Write a 3-camera synthetic dataset in pre-cropped form.

    Produces manifest.csv and rois.json under out_dir plus per-camera block
    PNGs; right and left cheek files both carry the generated cheek block, so
    ingestion reproduces the in-memory blocks up to 8-bit quantization.
    Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profiles = cameras if cameras is not None else CAMERA_PROFILES

    manifest_lines = ["image_path,subject_id,camera,label"]
    rois: dict[str, dict] = {}
    for camera, profile in profiles.items():
        cam_dir = out_dir / camera
        cam_dir.mkdir(exist_ok=True)
        dm_spec = SynthClassSpec(wavelength=dm_wavelength, **profile)
        healthy_spec = SynthClassSpec(wavelength=healthy_wavelength, **profile)
        blocks_list, labels = generate_dataset(
            n_per_class, dm_spec, healthy_spec, seed=derive_seed(seed, camera, "synth")
        )
        for i, (fb, label) in enumerate(zip(blocks_list, labels)):
            tag = "dm" if label == DM else "healthy"
            subject = f"{tag}{i % n_per_class:03d}"
            rel = f"{camera}/{subject}.png"
            files = {
                "F": fb.forehead,
                "N": fb.nose,
                "R": fb.cheek,
                "L": fb.cheek,
            }
            for block_id, block in files.items():
                write_png(cam_dir / f"{subject}_{block_id}.png", _to_u8(block))
            manifest_lines.append(f"{rel},{subject},{camera},{tag}")
            rois[rel] = {"precropped": True}

    manifest_path = out_dir / "manifest.csv"
    manifest_path.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    (out_dir / "rois.json").write_text(
        json.dumps(rois, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest_path
