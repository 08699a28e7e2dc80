"""Dark channel, atmospheric light, and raw transmission estimation.

The dark channel is the minimum over color channels and a local square
window. Under the dark channel prior, the raw per-pixel transmission of a
hazy photo is

    t_raw(X) = 1 - omega * min_c min_{Y in window(X)} I_c(Y) / A_c

where A is the atmospheric light (estimated sky luminance) and omega
keeps a small amount of haze so results stay natural.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import RasterImage, ScalarMap

__all__ = [
    "DarkChannelParams",
    "AtmosphericLight",
    "dark_channel",
    "estimate_atmospheric_light",
    "raw_transmission",
]

# Raw transmission is clamped into this range: the estimate can dip below
# zero when pixels are brighter than A, and downstream quotients and logs
# need strictly positive values.
TRANSMISSION_FLOOR = 0.01
TRANSMISSION_CEIL = 1.0

# Per-channel floor on A: guards the division for pathological dark images.
ATMOSPHERE_FLOOR = 0.05

# Fraction of brightest dark-channel pixels considered when estimating A.
BRIGHT_FRACTION = 0.001


@dataclass(frozen=True)
class DarkChannelParams:
    """Window size and haze-retention factor for transmission estimation."""

    patch_size: int = 15
    omega: float = 0.95

    def __post_init__(self) -> None:
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError("patch_size must be an odd integer >= 1")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must lie in (0, 1]")


@dataclass(frozen=True)
class AtmosphericLight:
    """Estimated per-channel sky luminance, each channel in (0, 1]."""

    values: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.values) != 3:
            raise ValueError("atmospheric light needs exactly 3 channels")
        for v in self.values:
            if not 0.0 < v <= 1.0:
                raise ValueError("atmospheric light channels must lie in (0, 1]")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def _window_min(arr: np.ndarray, patch_size: int) -> np.ndarray:
    """Minimum over the patch_size x patch_size window centered at each
    pixel, with windows clipped at the borders (separable sliding min)."""
    radius = patch_size // 2
    out = arr.copy()
    for off in range(1, radius + 1):
        np.minimum(out[:, off:], arr[:, :-off], out=out[:, off:])
        np.minimum(out[:, :-off], arr[:, off:], out=out[:, :-off])
    rowmin = out.copy()
    for off in range(1, radius + 1):
        np.minimum(out[off:, :], rowmin[:-off, :], out=out[off:, :])
        np.minimum(out[:-off, :], rowmin[off:, :], out=out[:-off, :])
    return out


def dark_channel(image: RasterImage, patch_size: int = 15) -> ScalarMap:
    """Channel-then-window minimum of the image.

    Windows are clipped at the image borders; no padding values are
    invented, so border minima come only from real pixels.
    """
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError("patch_size must be an odd integer >= 1")
    channel_min = image.as_rgb().data.min(axis=2)
    return ScalarMap(_window_min(channel_min, patch_size))


def estimate_atmospheric_light(image: RasterImage, dark: ScalarMap) -> AtmosphericLight:
    """Estimate A from the brightest 0.1% of dark-channel pixels.

    Among the candidates, the pixel with the largest channel sum in the
    original image wins; exact ties resolve to the first pixel in
    row-major scan order. Channels are floored at 0.05.
    """
    if (dark.height, dark.width) != (image.height, image.width):
        raise ValueError("dark channel dimensions do not match the image")
    flat_dark = dark.data.ravel()
    n_candidates = max(1, int(flat_dark.size * BRIGHT_FRACTION))
    # stable order: dark value descending, then scan order
    order = np.lexsort((np.arange(flat_dark.size), -flat_dark))
    candidates = order[:n_candidates]
    pixels = image.as_rgb().data.reshape(-1, 3)
    sums = pixels[candidates].sum(axis=1)
    best = int(candidates[sums == sums.max()].min())
    values = np.maximum(pixels[best], ATMOSPHERE_FLOOR)
    return AtmosphericLight(tuple(float(v) for v in values))


def raw_transmission(
    image: RasterImage,
    a: AtmosphericLight,
    params: DarkChannelParams = DarkChannelParams(),
) -> ScalarMap:
    """Raw transmission map, clamped to [0.01, 1.0]."""
    ratio = (image.as_rgb().data / a.as_array()[np.newaxis, np.newaxis, :]).min(axis=2)
    dark = _window_min(ratio, params.patch_size)
    t = 1.0 - params.omega * dark
    return ScalarMap(np.clip(t, TRANSMISSION_FLOOR, TRANSMISSION_CEIL))
