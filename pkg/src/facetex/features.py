"""Six texture statistics of a filter response, and their per-block aggregate.

Moments are population moments over all pixels; kurtosis is raw (m4 / m2^2,
normal = 3). Entropy is the base-2 Shannon entropy of a 256-bin histogram of
the min-max normalized values. A response with zero variance takes the
degenerate convention (skewness = kurtosis = entropy = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .gabor import FilterBank, convolve

STAT_NAMES = ("mean", "variance", "std", "skewness", "kurtosis", "entropy")
ENTROPY_BINS = 256


@dataclass(frozen=True)
class TextureStats:
    mean: float
    variance: float
    std: float
    skewness: float
    kurtosis: float
    entropy: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.mean, self.variance, self.std, self.skewness, self.kurtosis, self.entropy]
        )


def response_stats(resp: np.ndarray, mode: str = "magnitude") -> TextureStats:
    arr = np.asarray(resp, dtype=np.float64)
    if arr.size == 0:
        raise ShapeError("response is empty")
    if mode == "magnitude":
        v = np.abs(arr).ravel()
    elif mode == "raw":
        v = arr.ravel()
    else:
        raise ParameterError(f"unknown texture mode {mode!r}")
    return TextureStats(*stats_of_values(v))


def stats_of_values(v: np.ndarray) -> tuple[float, float, float, float, float, float]:
    """The six statistics of a flat value array, in STAT_NAMES order."""
    vmin = float(v.min())
    vmax = float(v.max())
    if vmax == vmin:
        return vmin, 0.0, 0.0, 0.0, 0.0, 0.0
    m = float(v.mean())
    d = v - m
    m2 = float((d * d).mean())
    if m2 == 0.0:
        return m, 0.0, 0.0, 0.0, 0.0, 0.0
    # standardized moments computed on d/std; the direct m3/m2^1.5 and
    # m4/m2^2 forms underflow for tiny spreads
    e = d / np.sqrt(m2)
    skewness = float((e * e * e).mean())
    kurtosis = float((e * e * e * e).mean())
    normalized = (v - vmin) / (vmax - vmin)
    counts, _ = np.histogram(normalized, bins=ENTROPY_BINS, range=(0.0, 1.0))
    p = counts[counts > 0] / v.size
    entropy = float(-(p * np.log2(p)).sum())
    return m, m2, float(np.sqrt(m2)), skewness, kurtosis, entropy


def block_stat_features(
    block: np.ndarray,
    bank: FilterBank,
    mode: str = "magnitude",
    padding: str = "mirror",
) -> TextureStats:
    """Per-filter stats averaged across the bank, one TextureStats per block."""
    if len(bank) == 0:
        raise ParameterError("filter bank is empty")
    rows = np.empty((len(bank), 6))
    for i, k in enumerate(bank.kernels):
        resp = convolve(block, k, padding=padding)
        rows[i] = response_stats(resp, mode=mode).as_array()
    return TextureStats(*(float(x) for x in rows.mean(axis=0)))
