"""Haze level scoring from a transmission map and a depth map.

A scoring recipe (variant) elementwise-transforms the transmission and
depth maps, combines them (product, guarded quotient, or one map alone),
and pools the result to a single scalar. The full canonicalized
cross-product of recipes forms the search grid for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .darkchannel import (
    DarkChannelParams,
    dark_channel,
    estimate_atmospheric_light,
    raw_transmission,
)
from .guidedfilter import GuidedFilterParams, guided_filter
from .raster import DepthMap, RasterImage, ScalarMap

__all__ = [
    "TRANSMISSION_KINDS",
    "TRANSFORM_KINDS",
    "COMBINE_KINDS",
    "POOL_KINDS",
    "EstimatorVariant",
    "HazeScore",
    "transform",
    "combine",
    "pool",
    "score_maps",
    "estimate",
    "enumerate_variants",
]

TRANSMISSION_KINDS = ("raw", "refined")
TRANSFORM_KINDS = ("unit", "log1p", "loglog1p")
COMBINE_KINDS = ("t_times_d", "t_over_d", "d_over_t", "t_only", "d_only")
POOL_KINDS = ("mean", "median", "max", "p75", "p90")

# Quotient combines floor their denominator here; transmission is already
# clamped >= 0.01 but depth maps may contain zeros.
DIVISION_FLOOR = 1e-6


@dataclass(frozen=True)
class EstimatorVariant:
    """One scoring recipe; canonical form zeroes fields the combine kind
    ignores so the variant grid contains no duplicates."""

    transmission_kind: str = "refined"
    t_transform: str = "unit"
    d_transform: str = "unit"
    combine: str = "t_times_d"
    pool: str = "mean"
    depth_normalize: bool = False

    def __post_init__(self) -> None:
        checks = (
            (self.transmission_kind, TRANSMISSION_KINDS, "transmission kind"),
            (self.t_transform, TRANSFORM_KINDS, "t transform"),
            (self.d_transform, TRANSFORM_KINDS, "d transform"),
            (self.combine, COMBINE_KINDS, "combine"),
            (self.pool, POOL_KINDS, "pool"),
        )
        for value, allowed, what in checks:
            if value not in allowed:
                raise ValueError(f"unknown {what}: {value!r}")

    def canonical(self) -> "EstimatorVariant":
        if self.combine == "t_only":
            return replace(self, d_transform="unit", depth_normalize=False)
        if self.combine == "d_only":
            return replace(self, t_transform="unit", transmission_kind="raw")
        return self

    @property
    def uses_transmission(self) -> bool:
        return self.combine != "d_only"

    @property
    def uses_depth(self) -> bool:
        return self.combine != "t_only"

    @property
    def family(self) -> str:
        """'trans', 'depth', or 'both', mirroring the evaluation families."""
        if self.combine == "t_only":
            return "trans"
        if self.combine == "d_only":
            return "depth"
        return "both"

    def key(self) -> str:
        """Canonical string, e.g. `refined|log1p|unit|d_over_t|p90|dnorm=1`."""
        c = self.canonical()
        return "|".join(
            (
                c.transmission_kind,
                c.t_transform,
                c.d_transform,
                c.combine,
                c.pool,
                f"dnorm={int(c.depth_normalize)}",
            )
        )

    @classmethod
    def parse(cls, text: str) -> "EstimatorVariant":
        parts = text.strip().split("|")
        if len(parts) != 6 or not parts[5].startswith("dnorm="):
            raise ValueError(f"malformed variant string: {text!r}")
        flag = parts[5][len("dnorm="):]
        if flag not in ("0", "1"):
            raise ValueError(f"malformed variant string: {text!r}")
        return cls(
            transmission_kind=parts[0],
            t_transform=parts[1],
            d_transform=parts[2],
            combine=parts[3],
            pool=parts[4],
            depth_normalize=flag == "1",
        ).canonical()


@dataclass(frozen=True)
class HazeScore:
    value: float
    variant: EstimatorVariant

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError("haze score must be finite")


def transform(map: ScalarMap, f: str) -> ScalarMap:
    """Elementwise transform: identity, log(x+1), or log(log(x+1)+1)."""
    if f == "unit":
        return map
    if f == "log1p":
        return ScalarMap(np.log1p(map.data))
    if f == "loglog1p":
        return ScalarMap(np.log1p(np.log1p(map.data)))
    raise ValueError(f"unknown transform: {f!r}")


def combine(t_map: ScalarMap, d_map: ScalarMap, c: str) -> ScalarMap:
    """Elementwise combination; quotients floor the divisor at 1e-6."""
    if c == "t_only":
        return t_map
    if c == "d_only":
        return d_map
    if t_map.data.shape != d_map.data.shape:
        raise ValueError("transmission and depth dimensions do not match")
    if c == "t_times_d":
        return ScalarMap(t_map.data * d_map.data)
    if c == "t_over_d":
        return ScalarMap(t_map.data / np.maximum(d_map.data, DIVISION_FLOOR))
    if c == "d_over_t":
        return ScalarMap(d_map.data / np.maximum(t_map.data, DIVISION_FLOOR))
    raise ValueError(f"unknown combine: {c!r}")


def _pool_sorted(flat: np.ndarray, p: str) -> float:
    """Pool from an ascending-sorted 1-D array.

    Percentiles are nearest-rank (smallest value with at least p% of the
    data at or below it); the median uses nearest-rank for odd counts and
    the midpoint of the two central values for even counts.
    """
    n = flat.size
    if p == "mean":
        return float(flat.mean())
    if p == "median":
        if n % 2:
            return float(flat[(n - 1) // 2])
        return float(0.5 * (flat[n // 2 - 1] + flat[n // 2]))
    if p == "max":
        return float(flat[-1])
    if p in ("p75", "p90"):
        pct = 75 if p == "p75" else 90
        rank = -(-pct * n // 100)  # ceil(pct*n/100) in exact integer math
        return float(flat[rank - 1])
    raise ValueError(f"unknown pool: {p!r}")


def pool(map: ScalarMap, p: str) -> float:
    """Aggregate a map to a scalar with the named statistic."""
    if map.data.size == 0:
        raise ValueError("cannot pool an empty map")
    return _pool_sorted(np.sort(map.data, axis=None), p)


def score_maps(
    t_map: ScalarMap | None, d_map: ScalarMap | None, variant: EstimatorVariant
) -> float:
    """Score from already-computed maps (transforms, combine, pool)."""
    variant = variant.canonical()
    if variant.uses_transmission:
        if t_map is None:
            raise ValueError(f"variant {variant.key()} needs a transmission map")
        t_map = transform(t_map, variant.t_transform)
    if variant.uses_depth:
        if d_map is None:
            raise ValueError(f"variant {variant.key()} needs a depth map")
        d_map = transform(d_map, variant.d_transform)
    combined = combine(t_map, d_map, variant.combine)
    return pool(combined, variant.pool)


def _normalized(depth: DepthMap) -> DepthMap:
    peak = depth.data.max()
    if peak > 0.0:
        return DepthMap(depth.data / peak)
    return depth


def estimate(
    image: RasterImage,
    depth: DepthMap,
    variant: EstimatorVariant,
    dc: DarkChannelParams = DarkChannelParams(),
    gf: GuidedFilterParams = GuidedFilterParams(),
) -> HazeScore:
    """Full single-image pipeline: transmission from the dark channel
    prior, optional guided-filter refinement, then the variant's
    transform/combine/pool recipe against the depth map."""
    if (depth.height, depth.width) != (image.height, image.width):
        raise ValueError("image and depth dimensions do not match")
    variant = variant.canonical()
    t_map = None
    if variant.uses_transmission:
        a = estimate_atmospheric_light(image, dark_channel(image, dc.patch_size))
        t_map = raw_transmission(image, a, dc)
        if variant.transmission_kind == "refined":
            t_map = guided_filter(t_map, image, gf)
    d_map: DepthMap | None = None
    if variant.uses_depth:
        d_map = _normalized(depth) if variant.depth_normalize else depth
    return HazeScore(value=score_maps(t_map, d_map, variant), variant=variant)


def enumerate_variants() -> list[EstimatorVariant]:
    """Full canonicalized variant grid, deduplicated, sorted by key."""
    seen: dict[str, EstimatorVariant] = {}
    for tk in TRANSMISSION_KINDS:
        for tt in TRANSFORM_KINDS:
            for dt in TRANSFORM_KINDS:
                for c in COMBINE_KINDS:
                    for p in POOL_KINDS:
                        for dn in (False, True):
                            v = EstimatorVariant(
                                transmission_kind=tk,
                                t_transform=tt,
                                d_transform=dt,
                                combine=c,
                                pool=p,
                                depth_normalize=dn,
                            ).canonical()
                            seen.setdefault(v.key(), v)
    return [seen[k] for k in sorted(seen)]
