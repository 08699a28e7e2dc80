"""Guided filter refinement of transmission maps.

Edge-preserving smoothing with the photo itself as guidance: within each
window the output is a linear function of the (grayscale) guide,

    a = cov(g, p) / (var(g) + eps),   b = mean(p) - a * mean(g),
    out = mean(a) * g + mean(b),

with all means taken over square windows of the given radius. Box means
run in O(H*W) via an integral image regardless of window size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import RasterImage, ScalarMap
from .darkchannel import TRANSMISSION_CEIL, TRANSMISSION_FLOOR

__all__ = ["GuidedFilterParams", "box_mean", "guided_filter"]


@dataclass(frozen=True)
class GuidedFilterParams:
    """window is a radius: the averaging square has side 2*window + 1."""

    window: int = 60
    epsilon: float = 1e-3

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")


def _box_mean(arr: np.ndarray, radius: int) -> np.ndarray:
    h, w = arr.shape
    ps = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(arr, axis=0, out=ps[1:, 1:])
    np.cumsum(ps[1:, 1:], axis=1, out=ps[1:, 1:])
    y0 = np.clip(np.arange(h) - radius, 0, None)
    y1 = np.clip(np.arange(h) + radius + 1, None, h)
    x0 = np.clip(np.arange(w) - radius, 0, None)
    x1 = np.clip(np.arange(w) + radius + 1, None, w)
    sums = ps[np.ix_(y1, x1)] - ps[np.ix_(y0, x1)] - ps[np.ix_(y1, x0)] + ps[np.ix_(y0, x0)]
    counts = (y1 - y0)[:, np.newaxis] * (x1 - x0)[np.newaxis, :]
    return sums / counts


def box_mean(map: ScalarMap, window: int) -> ScalarMap:
    """Mean over the (2*window+1)-sided square centered at each pixel,
    clipped at the borders."""
    if window < 1:
        raise ValueError("window must be >= 1")
    return ScalarMap(_box_mean(map.data, window))


def guided_filter(
    input: ScalarMap,
    guide: RasterImage,
    params: GuidedFilterParams = GuidedFilterParams(),
) -> ScalarMap:
    """Refine `input` using the channel-mean grayscale of `guide`.

    Output is clamped to [0.01, 1.0] (transmission range).
    """
    if (guide.height, guide.width) != (input.height, input.width):
        raise ValueError("guide dimensions do not match the input map")
    g = guide.data.mean(axis=2)
    p = input.data
    r = params.window
    mean_g = _box_mean(g, r)
    mean_p = _box_mean(p, r)
    cov_gp = _box_mean(g * p, r) - mean_g * mean_p
    var_g = _box_mean(g * g, r) - mean_g * mean_g
    a = cov_gp / (var_g + params.epsilon)
    b = mean_p - a * mean_g
    out = _box_mean(a, r) * g + _box_mean(b, r)
    return ScalarMap(np.clip(out, TRANSMISSION_FLOOR, TRANSMISSION_CEIL))
