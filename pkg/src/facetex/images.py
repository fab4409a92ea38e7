"""Grayscale conversion, cropping, bilinear resizing, and facial-block extraction.

Grayscale images are float64 arrays of shape (height, width) with values in
[0, 1]. All operations are pure functions on immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BoundsError, ManifestError, ParameterError

BLOCK_SIZE = 64
BLOCK_IDS = ("F", "N", "R", "L")

# ITU-R BT.601 luma weights as exact integer thousandths; the weighted sum
# stays exact in float64 so white maps to exactly 1.0
_LUMA_THOUSANDTHS = np.array([299.0, 587.0, 114.0])


@dataclass(frozen=True)
class RoiRect:
    """Axis-aligned crop rectangle tagged with its facial-block id."""

    x: int
    y: int
    w: int
    h: int
    block_id: str

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ParameterError(f"ROI extent must be >= 1, got {self.w}x{self.h}")
        if self.block_id not in BLOCK_IDS:
            raise ParameterError(f"unknown block id {self.block_id!r}, expected one of {BLOCK_IDS}")


@dataclass(frozen=True)
class FacialBlocks:
    """The three 64x64 grayscale blocks of one sample."""

    forehead: np.ndarray
    nose: np.ndarray
    cheek: np.ndarray

    def as_dict(self) -> dict:
        return {"forehead": self.forehead, "cheek": self.cheek, "nose": self.nose}


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (H, W, 3) uint8 image, scaled to [0, 1]."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParameterError(f"expected (H, W, 3) RGB array, got shape {arr.shape}")
    gray = arr.astype(np.float64) @ _LUMA_THOUSANDTHS / (1000.0 * 255.0)
    return np.clip(gray, 0.0, 1.0)


def crop(img: np.ndarray, roi: RoiRect) -> np.ndarray:
    h, w = img.shape
    if roi.x < 0 or roi.y < 0 or roi.x + roi.w > w or roi.y + roi.h > h:
        raise BoundsError(
            f"ROI {roi.block_id} (x={roi.x}, y={roi.y}, w={roi.w}, h={roi.h}) "
            f"outside {w}x{h} image"
        )
    return img[roi.y:roi.y + roi.h, roi.x:roi.x + roi.w].copy()


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment and edge clamping."""
    if out_w < 1 or out_h < 1:
        raise ParameterError(f"output size must be >= 1, got {out_w}x{out_h}")
    h, w = img.shape
    if (out_w, out_h) == (w, h):
        return img.copy()

    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    top = img[np.ix_(y0, x0)] * (1.0 - fx) + img[np.ix_(y0, x1)] * fx
    bot = img[np.ix_(y1, x0)] * (1.0 - fx) + img[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy)[:, None] + bot * fy[:, None]


def extract_blocks(
    img: np.ndarray, rois: Sequence[RoiRect], cheek_mode: str = "mean"
) -> FacialBlocks:
    """Crop and resize the F/N/R/L regions; reduce R and L to one cheek block.

    cheek_mode: "mean" averages the resized right and left blocks pixelwise,
    "right"/"left" keep a single side.
    """
    if cheek_mode not in ("mean", "right", "left"):
        raise ParameterError(f"unknown cheek_mode {cheek_mode!r}")
    by_id: dict[str, RoiRect] = {}
    for roi in rois:
        if roi.block_id in by_id:
            raise ManifestError(f"duplicate ROI for block {roi.block_id}")
        by_id[roi.block_id] = roi
    missing = [b for b in BLOCK_IDS if b not in by_id]
    if missing:
        raise ManifestError(f"missing ROI for block(s): {', '.join(missing)}")

    resized = {
        b: resize_bilinear(crop(img, by_id[b]), BLOCK_SIZE, BLOCK_SIZE) for b in BLOCK_IDS
    }
    if cheek_mode == "mean":
        cheek = (resized["R"] + resized["L"]) / 2.0
    elif cheek_mode == "right":
        cheek = resized["R"]
    else:
        cheek = resized["L"]
    return FacialBlocks(forehead=resized["F"], nose=resized["N"], cheek=cheek)
