"""Per-sample predictor vectors for the four feature-assembly methods.

Methods 1 and 2 share one filter bank across the three facial blocks; methods
3 and 4 pick a bank per block by evaluating candidate bank configurations on
labeled training blocks. Methods 1/3 emit one texture value per block (3-D
vectors); methods 2/4 emit the six statistics per block (18-D vectors).

Vector layout is block-major (forehead, cheek, nose) and, for the 18-D
methods, statistic-minor in the order mean, variance, std, skewness,
kurtosis, entropy.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import classify
from .config import BankSettings, SelectionSettings, derive_seed
from .errors import ConfigError, DatasetError, ParameterError
from .features import stats_of_values
from .gabor import FilterBank, make_filter_bank, next_fast_len
from .images import FacialBlocks

BLOCK_ORDER = ("forehead", "cheek", "nose")


class Method(str, Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"
    M4 = "m4"

    @property
    def uses_stats(self) -> bool:
        return self in (Method.M2, Method.M4)

    @property
    def per_block_banks(self) -> bool:
        return self in (Method.M3, Method.M4)

    @property
    def dim(self) -> int:
        return 18 if self.uses_stats else 3


@dataclass(frozen=True)
class BankConfig:
    """Serializable recipe for one filter bank."""

    wavelengths: tuple
    orientations_deg: tuple
    psi_deg: float = 0.0
    gamma: float = 0.5
    bandwidth: float = 1.0

    def to_dict(self) -> dict:
        return {
            "wavelengths": list(self.wavelengths),
            "orientations_deg": list(self.orientations_deg),
            "psi_deg": self.psi_deg,
            "gamma": self.gamma,
            "bandwidth": self.bandwidth,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BankConfig":
        return cls(
            wavelengths=tuple(data["wavelengths"]),
            orientations_deg=tuple(data["orientations_deg"]),
            psi_deg=data.get("psi_deg", 0.0),
            gamma=data.get("gamma", 0.5),
            bandwidth=data.get("bandwidth", 1.0),
        )


def uniform_bank_config(bank: BankSettings) -> BankConfig:
    return BankConfig(
        wavelengths=tuple(bank.wavelengths),
        orientations_deg=tuple(bank.orientations_deg),
        psi_deg=bank.psi_deg,
        gamma=bank.gamma,
        bandwidth=bank.bandwidth,
    )


def selection_grid(selection: SelectionSettings, bank: BankSettings) -> list[BankConfig]:
    """Candidate configs: sliding wavelength windows x orientation offsets."""
    ladder = tuple(selection.lambda_ladder)
    if selection.window < 1 or selection.window > len(ladder):
        raise ParameterError(
            f"selection window {selection.window} invalid for ladder of {len(ladder)}"
        )
    grid = []
    for start in range(len(ladder) - selection.window + 1):
        window = ladder[start:start + selection.window]
        for offset in selection.theta_offsets_deg:
            orientations = tuple(offset + 45.0 * k for k in range(8))
            grid.append(
                BankConfig(
                    wavelengths=window,
                    orientations_deg=orientations,
                    psi_deg=bank.psi_deg,
                    gamma=bank.gamma,
                    bandwidth=bank.bandwidth,
                )
            )
    return grid


@dataclass(frozen=True)
class BankAssignment:
    forehead: BankConfig
    cheek: BankConfig
    nose: BankConfig

    @classmethod
    def uniform(cls, cfg: BankConfig) -> "BankAssignment":
        return cls(forehead=cfg, cheek=cfg, nose=cfg)

    @property
    def is_uniform(self) -> bool:
        return self.forehead == self.cheek == self.nose

    def for_block(self, name: str) -> BankConfig:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {name: self.for_block(name).to_dict() for name in BLOCK_ORDER}


@dataclass(frozen=True)
class FeatureVector:
    method: Method
    values: np.ndarray


# --------------------------------------------------------------------------
# Cached extraction engine
# --------------------------------------------------------------------------

class _Reduction:
    __slots__ = ("texval", "stats")

    def __init__(self):
        self.texval = None
        self.stats = None


class FeatureExtractor:
    """Computes per-block filter responses with content-addressed caching.

    Responses are produced by FFT convolution on mirror- or zero-padded
    blocks, batched per kernel radius; only the reductions (per-filter
    texture value, per-filter six statistics) are kept. Identical kernels
    (e.g. the theta / theta+180 pairs of a psi=0 bank) and repeated blocks
    are computed once. Results agree with gabor.convolve to within the 1e-9
    backend tolerance.
    """

    def __init__(self, texture_mode: str = "magnitude", padding: str = "mirror"):
        if texture_mode not in ("magnitude", "raw"):
            raise ParameterError(f"unknown texture mode {texture_mode!r}")
        if padding not in ("mirror", "zero"):
            raise ParameterError(f"unknown padding {padding!r}")
        self.texture_mode = texture_mode
        self.padding = padding
        self._banks: dict[BankConfig, FilterBank] = {}
        self._kernel_info: dict[str, tuple[np.ndarray, int]] = {}  # digest -> (weights, r)
        self._kernel_fft: dict[tuple[str, int, int], np.ndarray] = {}
        self._reductions: dict[tuple[str, str], _Reduction] = {}

    def bank(self, cfg: BankConfig) -> FilterBank:
        if cfg not in self._banks:
            self._banks[cfg] = make_filter_bank(
                wavelengths=cfg.wavelengths,
                orientations_deg=cfg.orientations_deg,
                psi_deg=cfg.psi_deg,
                gamma=cfg.gamma,
                bandwidth=cfg.bandwidth,
            )
        return self._banks[cfg]

    def _kernel_digests(self, cfg: BankConfig) -> list[str]:
        digests = []
        for kernel in self.bank(cfg).kernels:
            w = kernel.weights
            dg = hashlib.sha1(w.tobytes()).hexdigest() + f":{w.shape[0]}"
            if dg not in self._kernel_info:
                self._kernel_info[dg] = (w, kernel.radius)
            digests.append(dg)
        return digests

    @staticmethod
    def _block_digest(block: np.ndarray) -> str:
        a = np.ascontiguousarray(block, dtype=np.float64)
        return hashlib.sha1(a.tobytes()).hexdigest() + f":{a.shape[0]}x{a.shape[1]}"

    def texture_values(self, blocks: Sequence[np.ndarray], cfg: BankConfig) -> np.ndarray:
        """Method-1-style texture value per block, in block order."""
        digests = self._kernel_digests(cfg)
        bdigs = [self._block_digest(b) for b in blocks]
        self._ensure(blocks, bdigs, digests, want_stats=False)
        out = np.empty(len(blocks))
        for i, bd in enumerate(bdigs):
            out[i] = np.mean([self._reductions[(bd, kd)].texval for kd in digests])
        return out

    def stat_matrix(self, blocks: Sequence[np.ndarray], cfg: BankConfig) -> np.ndarray:
        """Six per-block statistics (filter-averaged), shape (n_blocks, 6)."""
        digests = self._kernel_digests(cfg)
        bdigs = [self._block_digest(b) for b in blocks]
        self._ensure(blocks, bdigs, digests, want_stats=True)
        out = np.empty((len(blocks), 6))
        for i, bd in enumerate(bdigs):
            rows = np.array([self._reductions[(bd, kd)].stats for kd in digests])
            out[i] = rows.mean(axis=0)
        return out

    def _ensure(self, blocks, bdigs, kernel_digests, want_stats: bool):
        needed: dict[str, list[tuple[str, np.ndarray]]] = {}
        seen_blocks = set()
        for bd, block in zip(bdigs, blocks):
            if bd in seen_blocks:
                continue
            seen_blocks.add(bd)
            for kd in dict.fromkeys(kernel_digests):
                red = self._reductions.get((bd, kd))
                if red is None or red.texval is None or (want_stats and red.stats is None):
                    needed.setdefault(kd, []).append((bd, block))
        if not needed:
            return

        # group required kernels by radius so each block is padded/FFT'd once
        by_radius: dict[int, list[str]] = {}
        for kd in needed:
            by_radius.setdefault(self._kernel_info[kd][1], []).append(kd)

        for r in sorted(by_radius):
            kds = by_radius[r]
            block_by_digest: dict[str, np.ndarray] = {}
            for kd in kds:
                for bd, block in needed[kd]:
                    block_by_digest.setdefault(bd, block)
            for (h, w) in sorted({block_by_digest[bd].shape for bd in block_by_digest}):
                bds = sorted(
                    bd for bd in block_by_digest if block_by_digest[bd].shape == (h, w)
                )
                fy = next_fast_len(h + 4 * r)
                fx = next_fast_len(w + 4 * r)
                padded = np.stack([self._padded(block_by_digest[bd], r) for bd in bds])
                block_fft = np.fft.rfft2(padded, (fy, fx))
                for kd in kds:
                    resp = np.fft.irfft2(block_fft * self._kfft(kd, fy, fx), (fy, fx))
                    resp = resp[:, 2 * r:2 * r + h, 2 * r:2 * r + w]
                    for bd, rimg in zip(bds, resp):
                        red = self._reductions.setdefault((bd, kd), _Reduction())
                        v = (
                            np.abs(rimg).ravel()
                            if self.texture_mode == "magnitude"
                            else rimg.ravel()
                        )
                        red.texval = float(v.mean())
                        if want_stats:
                            red.stats = stats_of_values(v)

    def _padded(self, block: np.ndarray, r: int) -> np.ndarray:
        block = np.asarray(block, dtype=np.float64)
        mode = "reflect" if self.padding == "mirror" else "constant"
        return np.pad(block, r, mode=mode)

    def _kfft(self, kd: str, fy: int, fx: int) -> np.ndarray:
        key = (kd, fy, fx)
        if key not in self._kernel_fft:
            self._kernel_fft[key] = np.fft.rfft2(self._kernel_info[kd][0], (fy, fx))
        return self._kernel_fft[key]


# --------------------------------------------------------------------------
# Feature assembly
# --------------------------------------------------------------------------

def assemble_features_batch(
    blocks_list: Sequence[FacialBlocks],
    assignment: BankAssignment,
    method: Method,
    extractor: FeatureExtractor,
) -> np.ndarray:
    """Feature matrix for many samples, shape (n_samples, method.dim)."""
    method = Method(method)
    if not method.per_block_banks and not assignment.is_uniform:
        raise ConfigError(f"method {method.value} requires one uniform bank for all blocks")
    n = len(blocks_list)
    cols = []
    for name in BLOCK_ORDER:
        blocks = [fb.as_dict()[name] for fb in blocks_list]
        cfg = assignment.for_block(name)
        if method.uses_stats:
            cols.append(extractor.stat_matrix(blocks, cfg))
        else:
            cols.append(extractor.texture_values(blocks, cfg).reshape(n, 1))
    return np.hstack(cols)


def assemble_features(
    blocks: FacialBlocks,
    assignment: BankAssignment,
    method: Method,
    extractor: FeatureExtractor | None = None,
) -> FeatureVector:
    """Predictor vector of one sample: 3-D for m1/m3, 18-D for m2/m4."""
    method = Method(method)
    extractor = extractor or FeatureExtractor()
    matrix = assemble_features_batch([blocks], assignment, method, extractor)
    return FeatureVector(method=method, values=matrix[0])


# --------------------------------------------------------------------------
# Per-block bank selection (methods 3 and 4)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionResult:
    config: BankConfig
    accuracy: float
    index: int
    candidate_accuracies: tuple


def select_block_bank(
    blocks: Sequence[np.ndarray],
    labels,
    grid: Sequence[BankConfig],
    classifier_spec: classify.ClassifierSpec,
    split_seed: int,
    extractor: FeatureExtractor | None = None,
) -> SelectionResult:
    """Pick the candidate bank whose single-block texture feature classifies
    best on a seeded 70:30 split of the given blocks; ties go to the earliest
    grid position.
    """
    from . import evaluate  # late import; evaluate builds on this module

    if len(grid) == 0:
        raise ParameterError("candidate grid is empty")
    labels = np.asarray(labels)
    for cls_label in (classify.DM, classify.HEALTHY):
        if (labels == cls_label).sum() < 2:
            raise DatasetError(
                f"bank selection needs >= 2 samples per class, class {cls_label} is short"
            )
    extractor = extractor or FeatureExtractor()
    train_idx, test_idx = evaluate.stratified_split(labels, ratio=0.7, seed=split_seed)
    if len(test_idx) == 0:
        raise DatasetError("bank selection split produced an empty test set")

    best = None
    accuracies = []
    for ci, cfg in enumerate(grid):
        feats = extractor.texture_values(blocks, cfg).reshape(-1, 1)
        model = classify.train_classifier(
            classifier_spec, feats[train_idx], labels[train_idx],
            seed=derive_seed(split_seed, "candidate", ci),
        )
        preds = classify.predict(model, feats[test_idx])
        acc = float(np.mean(preds == labels[test_idx]))
        accuracies.append(acc)
        if best is None or acc > best[0]:
            best = (acc, ci, cfg)
    acc, ci, cfg = best
    return SelectionResult(
        config=cfg, accuracy=acc, index=ci, candidate_accuracies=tuple(accuracies)
    )
