"""Gabor kernels, the 5x8 filter bank, and 2-D convolution.

The kernel is the real (cosine) Gabor: a Gaussian envelope times a sinusoidal
carrier along the rotated x axis,

    w(x, y) = exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2)) * cos(2 pi x' / lambda + psi)
    x' =  x cos(theta) + y sin(theta)
    y' = -x sin(theta) + y cos(theta)

with sigma tied to the half-amplitude bandwidth b (octaves) by
sigma = (lambda / pi) * sqrt(ln 2 / 2) * (2^b + 1) / (2^b - 1).

Arrays are indexed [row, col] = [y, x]; kernel weights[r + y, r + x] holds the
value at integer offset (x, y) from the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError

MAX_KERNEL_RADIUS = 31  # keeps every kernel within a 64x64 block

SQRT2 = math.sqrt(2.0)
DEFAULT_WAVELENGTHS = (4.0, 4.0 * SQRT2, 8.0, 8.0 * SQRT2, 16.0)
DEFAULT_ORIENTATIONS_DEG = tuple(45.0 * k for k in range(8))  # 0..315


@dataclass(frozen=True)
class GaborParams:
    """Parameters of one Gabor kernel. Orientation and phase are radians."""

    wavelength: float
    orientation: float
    phase: float = 0.0
    aspect_ratio: float = 0.5
    bandwidth: float = 1.0

    def __post_init__(self):
        for name in ("wavelength", "aspect_ratio", "bandwidth"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        for name in ("orientation", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    @property
    def sigma(self) -> float:
        ratio = (2.0 ** self.bandwidth + 1.0) / (2.0 ** self.bandwidth - 1.0)
        return (self.wavelength / math.pi) * math.sqrt(math.log(2.0) / 2.0) * ratio

    @property
    def radius(self) -> int:
        r = math.ceil(3.0 * self.sigma * max(1.0, 1.0 / self.aspect_ratio))
        return min(MAX_KERNEL_RADIUS, r)


@dataclass(frozen=True)
class Kernel:
    weights: np.ndarray

    @property
    def radius(self) -> int:
        return self.weights.shape[0] // 2


@dataclass(frozen=True)
class FilterBank:
    """Ordered (params, kernel) pairs, wavelength-major / orientation-minor."""

    entries: tuple

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def kernels(self) -> tuple:
        return tuple(k for _, k in self.entries)

    @property
    def params(self) -> tuple:
        return tuple(p for p, _ in self.entries)


def _fold_half_turn(theta: float, psi: float) -> tuple[float, float]:
    """Reduce theta into [0, pi); each half turn flips the carrier phase sign.

    The kernel is invariant under (theta, psi) -> (theta + pi, -psi), so this
    makes kernels for theta and theta + pi identical whenever the caller's
    angle arithmetic is exact.
    """
    t = math.fmod(theta, 2.0 * math.pi)
    if t < 0.0:
        t += 2.0 * math.pi
    if t >= math.pi:
        t -= math.pi
        psi = -psi
    return t, (0.0 if psi == 0.0 else psi)


def make_kernel(p: GaborParams) -> Kernel:
    theta, psi = _fold_half_turn(p.orientation, p.phase)
    c, s = math.cos(theta), math.sin(theta)
    sigma = p.sigma
    gamma = p.aspect_ratio
    r = p.radius
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    x = offsets[None, :]
    y = offsets[:, None]
    xp = x * c + y * s
    yp = -x * s + y * c
    envelope = np.exp(-(xp * xp + gamma * gamma * yp * yp) / (2.0 * sigma * sigma))
    carrier = np.cos(2.0 * math.pi * xp / p.wavelength + psi)
    return Kernel(envelope * carrier)


def make_filter_bank(
    wavelengths: Sequence[float] = DEFAULT_WAVELENGTHS,
    orientations_deg: Sequence[float] = DEFAULT_ORIENTATIONS_DEG,
    psi_deg: float = 0.0,
    gamma: float = 0.5,
    bandwidth: float = 1.0,
) -> FilterBank:
    """Realize all wavelength x orientation combinations, wavelength-major.

    Orientations are taken in degrees and folded by half turns in degree
    space, so grids like 0..315 in 45-degree steps produce bit-identical
    kernels for the theta / theta+180 pairs.
    """
    if len(wavelengths) == 0 or len(orientations_deg) == 0:
        raise ParameterError("wavelengths and orientations must be non-empty")
    entries = []
    for lam in wavelengths:
        for odeg in orientations_deg:
            folded = odeg % 360.0
            psi_folded = psi_deg
            if folded >= 180.0:
                folded -= 180.0
                psi_folded = -psi_deg
            params = GaborParams(
                wavelength=float(lam),
                orientation=math.radians(odeg % 360.0),
                phase=math.radians(psi_deg),
                aspect_ratio=gamma,
                bandwidth=bandwidth,
            )
            kernel = make_kernel(
                GaborParams(
                    wavelength=float(lam),
                    orientation=math.radians(folded),
                    phase=math.radians(psi_folded),
                    aspect_ratio=gamma,
                    bandwidth=bandwidth,
                )
            )
            entries.append((params, kernel))
    return FilterBank(entries=tuple(entries))


# --------------------------------------------------------------------------
# Convolution
# --------------------------------------------------------------------------

def _kernel_weights(kernel) -> np.ndarray:
    w = kernel.weights if isinstance(kernel, Kernel) else np.asarray(kernel, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] % 2 == 0:
        raise ShapeError(f"kernel must be an odd square matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ParameterError("kernel weights must be finite")
    return w


def _pad(im: np.ndarray, r: int, padding: str) -> np.ndarray:
    if padding == "mirror":
        if r > min(im.shape) - 1:
            raise ShapeError(
                f"kernel radius {r} too large to mirror-pad a "
                f"{im.shape[0]}x{im.shape[1]} image"
            )
        return np.pad(im, r, mode="reflect")
    if padding == "zero":
        return np.pad(im, r, mode="constant")
    raise ParameterError(f"unknown padding {padding!r}")


def next_fast_len(n: int) -> int:
    """Smallest 5-smooth integer >= n (fast FFT length)."""
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


def convolve(im: np.ndarray, kernel, padding: str = "mirror", backend: str = "auto") -> np.ndarray:
    """True 2-D convolution (kernel flipped) with border padding; output has
    the input's shape.

    backend "direct" evaluates the spatial sum and is the normative
    implementation; "fft" must agree with it to within 1e-9 relative error.
    """
    im = np.asarray(im, dtype=np.float64)
    if im.ndim != 2 or im.size == 0:
        raise ShapeError(f"image must be a non-empty 2-D array, got shape {im.shape}")
    w = _kernel_weights(kernel)
    r = w.shape[0] // 2

    if backend == "auto":
        backend = "fft" if im.size * w.size > 200_000 else "direct"
    padded = _pad(im, r, padding)

    if backend == "direct":
        windows = sliding_window_view(padded, w.shape)
        return np.einsum("ijkl,kl->ij", windows, w[::-1, ::-1])
    if backend == "fft":
        h, wid = im.shape
        fy = next_fast_len(h + 4 * r)
        fx = next_fast_len(wid + 4 * r)
        spec = np.fft.rfft2(padded, (fy, fx)) * np.fft.rfft2(w, (fy, fx))
        full = np.fft.irfft2(spec, (fy, fx))
        return full[2 * r:2 * r + h, 2 * r:2 * r + wid]
    raise ParameterError(f"unknown backend {backend!r}")


def block_texture_value(
    block: np.ndarray,
    bank: FilterBank,
    mode: str = "magnitude",
    padding: str = "mirror",
) -> float:
    """Mean over the bank of per-filter texture values.

    The per-filter value is the mean response pixel, taken on |R| by default
    ("magnitude") or on the raw response ("raw").
    """
    if len(bank) == 0:
        raise ParameterError("filter bank is empty")
    if mode not in ("magnitude", "raw"):
        raise ParameterError(f"unknown texture mode {mode!r}")
    values = np.empty(len(bank))
    for i, k in enumerate(bank.kernels):
        resp = convolve(block, k, padding=padding)
        values[i] = np.abs(resp).mean() if mode == "magnitude" else resp.mean()
    return float(values.mean())
