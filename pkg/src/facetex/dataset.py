"""Dataset ingestion: the sample manifest CSV and its companion ROI JSON.

Manifest CSV columns: image_path, subject_id, camera, label. Camera must be
one of 12mp/7mp/720p and label one of dm/healthy; subject ids are unique per
camera. The ROI JSON maps each image path either to four {block,x,y,w,h}
rectangles or to {"precropped": true}, in which case the four blocks are read
from <stem>_F.png, _N.png, _R.png, _L.png beside the image. Relative paths
resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .classify import DM, HEALTHY
from .errors import FacetexError, ManifestError
from .images import BLOCK_IDS, BLOCK_SIZE, FacialBlocks, RoiRect, extract_blocks, resize_bilinear, to_grayscale
from .imgio import read_image

CAMERA_IDS = ("12mp", "7mp", "720p")
LABEL_CODES = {"dm": DM, "healthy": HEALTHY}
MANIFEST_COLUMNS = ("image_path", "subject_id", "camera", "label")


@dataclass(frozen=True)
class Sample:
    subject_id: str
    camera: str
    label: int  # +1 dm / -1 healthy
    blocks: FacialBlocks


@dataclass(frozen=True)
class RowError:
    image_path: str
    error: str


def default_roi_path(manifest_path) -> Path:
    return Path(manifest_path).parent / "rois.json"


def load_roi_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON in ROI manifest {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ManifestError("ROI manifest root must be an object keyed by image path")
    return data


def _rois_from_entry(entry, image_path: str) -> list[RoiRect]:
    if not isinstance(entry, list):
        raise ManifestError(f"ROI entry for {image_path} must be a list of four blocks")
    rois = []
    for item in entry:
        try:
            rois.append(
                RoiRect(
                    x=int(item["x"]),
                    y=int(item["y"]),
                    w=int(item["w"]),
                    h=int(item["h"]),
                    block_id=str(item["block"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad ROI object for {image_path}: {exc}") from None
    return rois


def _load_precropped(image_path: Path, cheek_mode: str) -> FacialBlocks:
    grays = {}
    for block in BLOCK_IDS:
        block_path = image_path.with_name(f"{image_path.stem}_{block}.png")
        if not block_path.exists():
            raise ManifestError(f"precropped block file missing: {block_path}")
        gray = to_grayscale(read_image(block_path))
        if gray.shape != (BLOCK_SIZE, BLOCK_SIZE):
            gray = resize_bilinear(gray, BLOCK_SIZE, BLOCK_SIZE)
        grays[block] = gray
    if cheek_mode == "mean":
        cheek = (grays["R"] + grays["L"]) / 2.0
    elif cheek_mode == "right":
        cheek = grays["R"]
    else:
        cheek = grays["L"]
    return FacialBlocks(forehead=grays["F"], nose=grays["N"], cheek=cheek)


def load_sample_blocks(image_path: Path, roi_entry, cheek_mode: str) -> FacialBlocks:
    if isinstance(roi_entry, dict) and roi_entry.get("precropped"):
        return _load_precropped(image_path, cheek_mode)
    rois = _rois_from_entry(roi_entry, str(image_path))
    gray = to_grayscale(read_image(image_path))
    return extract_blocks(gray, rois, cheek_mode=cheek_mode)


def load_samples(manifest_path, roi_path=None, cheek_mode: str = "mean"):
    """Load all manifest rows; returns (samples, row_errors).

    Rows that fail to load are reported, not fatal; schema violations of the
    manifest itself raise ManifestError.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    rois = load_roi_manifest(roi_path if roi_path is not None else default_roi_path(manifest_path))

    with open(manifest_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest columns must be {','.join(MANIFEST_COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        rows = list(reader)

    seen: set[tuple[str, str]] = set()
    samples: list[Sample] = []
    errors: list[RowError] = []
    for row in rows:
        image_path = row["image_path"]
        camera = row["camera"]
        label_text = row["label"]
        if camera not in CAMERA_IDS:
            raise ManifestError(f"unknown camera {camera!r} for {image_path}")
        if label_text not in LABEL_CODES:
            raise ManifestError(f"unknown label {label_text!r} for {image_path}")
        key = (camera, row["subject_id"])
        if key in seen:
            raise ManifestError(f"duplicate subject {row['subject_id']!r} for camera {camera}")
        seen.add(key)
        if image_path not in rois:
            errors.append(RowError(image_path, "no ROI manifest entry"))
            continue
        try:
            blocks = load_sample_blocks(base / image_path, rois[image_path], cheek_mode)
        except (FacetexError, OSError) as exc:
            errors.append(RowError(image_path, str(exc)))
            continue
        samples.append(
            Sample(
                subject_id=row["subject_id"],
                camera=camera,
                label=LABEL_CODES[label_text],
                blocks=blocks,
            )
        )
    return samples, errors
