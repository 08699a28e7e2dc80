"""Depth map provisioning: ground-truth files, uniform fallback, or
precomputed external rasters.

A learned monocular depth model is deliberately out of scope; any external
tool can write PFM/DEPTH files and plug in through this boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import raster
from .raster import DepthMap, load_depth, resample_nearest

if TYPE_CHECKING:
    from .ingest import LabeledSample

__all__ = ["DepthSource", "depth_for", "DEPTH_SOURCE_KINDS"]

DEPTH_SOURCE_KINDS = ("ground-truth-file", "uniform", "precomputed-file")


@dataclass(frozen=True)
class DepthSource:
    """Where a sample's depth comes from.

    Exactly one kind is active: a ground-truth depth file, a uniform
    constant, or a precomputed raster from an external depth estimator.
    `normalize` divides the loaded map by its per-image max.
    """

    kind: str
    path: str | None = None
    value: float | None = None
    normalize: bool = False

    def __post_init__(self) -> None:
        if self.kind not in DEPTH_SOURCE_KINDS:
            raise ValueError(f"unknown depth source kind: {self.kind!r}")
        if self.kind == "uniform":
            if self.value is None or not self.value > 0:
                raise ValueError("uniform depth needs a value > 0")
            if self.path is not None:
                raise ValueError("uniform depth takes no path")
        else:
            if self.path is None:
                raise ValueError(f"{self.kind} depth needs a path")
            if self.value is not None:
                raise ValueError(f"{self.kind} depth takes no value")

    @classmethod
    def uniform(cls, value: float, normalize: bool = False) -> "DepthSource":
        return cls(kind="uniform", value=value, normalize=normalize)

    @classmethod
    def ground_truth_file(cls, path: str, normalize: bool = False) -> "DepthSource":
        return cls(kind="ground-truth-file", path=str(path), normalize=normalize)

    @classmethod
    def precomputed_file(cls, path: str, normalize: bool = False) -> "DepthSource":
        return cls(kind="precomputed-file", path=str(path), normalize=normalize)


def depth_for(
    sample: "LabeledSample",
    source: DepthSource,
    d_max: float = raster.DEFAULT_D_MAX,
    shape: tuple[int, int] | None = None,
    resample: bool = True,
) -> DepthMap:
    """Produce the depth map for a sample, capped at d_max.

    `shape` is the (height, width) of the paired image; when omitted it is
    read from the sample's image file. File-based maps that do not match
    are nearest-neighbor resampled, or rejected if `resample` is False.
    """
    if shape is None:
        img = raster.load_image(sample.image_path)
        shape = (img.height, img.width)
    if source.kind == "uniform":
        arr = np.full(shape, min(float(source.value), d_max))
    else:
        loaded = load_depth(source.path, d_max=d_max)
        arr = loaded.data
        if arr.shape != shape:
            if not resample:
                raise ValueError(
                    f"depth {source.path} is {arr.shape}, image is {shape}, "
                    "and resampling is disabled"
                )
            arr = resample_nearest(arr, shape[0], shape[1])
    if source.normalize:
        peak = arr.max()
        if peak > 0.0:
            arr = arr / peak
    return DepthMap(arr)
