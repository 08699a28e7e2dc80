"""Synthetic haze generation: forward-apply the scattering model to clear
scenes with known depth.

Per pixel, transmission is t(X) = exp(-k(X) * d(X)) and the hazy image is
L0(X) * t(X) + Ls(X) * (1 - t(X)). Four condition kinds cover the grid of
{constant, spatially varying} haze intensity k and sky luminance Ls; the
spatial variation is a smooth seeded value-noise field, so the same seed
always reproduces byte-identical stacks.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import DepthMap, RasterImage, save_image, save_map

__all__ = [
    "CONDITION_KINDS",
    "HazeCondition",
    "SynthSpec",
    "ManifestEntry",
    "apply_haze",
    "default_k_levels",
    "generate_stack",
    "write_manifest",
    "read_manifest",
    "procedural_scene",
]

CONDITION_KINDS = ("uniform", "hetero-k", "cloudy-sky", "cloudy-hetero")

# kinds with spatially varying haze intensity / sky luminance
_VARYING_K = ("hetero-k", "cloudy-hetero")
_VARYING_SKY = ("cloudy-sky", "cloudy-hetero")

NOISE_GRID = 8  # side of the seeded random grid that gets upsampled


@dataclass(frozen=True)
class HazeCondition:
    """One haze configuration: base intensity k plus spatial variation."""

    kind: str
    k: float
    sky_luminance: tuple[float, float, float] = (0.9, 0.9, 0.9)
    noise_seed: int = 0
    noise_strength: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in CONDITION_KINDS:
            raise ValueError(f"unknown haze condition kind: {self.kind!r}")
        if not self.k > 0:
            raise ValueError("haze intensity k must be > 0")
        if len(self.sky_luminance) != 3 or not all(0 < s <= 1 for s in self.sky_luminance):
            raise ValueError("sky_luminance channels must lie in (0, 1]")
        if self.noise_strength < 0:
            raise ValueError("noise_strength must be >= 0")


@dataclass(frozen=True)
class SynthSpec:
    """Grid of haze levels and condition kinds for one stack.

    k_levels=None derives 9 levels from the scene's depth so the stack
    spans light to heavy haze (mid level ~50% mean transmission at the
    median depth).
    """

    k_levels: tuple[float, ...] | None = None
    conditions: tuple[str, ...] = CONDITION_KINDS
    sky_luminance: tuple[float, float, float] = (0.9, 0.9, 0.9)
    noise_strength: float = 0.5
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.k_levels is not None:
            ks = tuple(self.k_levels)
            if not ks:
                raise ValueError("k_levels must be nonempty")
            if any(k <= 0 for k in ks):
                raise ValueError("k_levels must all be > 0")
            if any(b <= a for a, b in zip(ks, ks[1:])):
                raise ValueError("k_levels must be strictly increasing")
            object.__setattr__(self, "k_levels", ks)
        for c in self.conditions:
            if c not in CONDITION_KINDS:
                raise ValueError(f"unknown haze condition kind: {c!r}")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    scene_id: str
    condition: str
    k_true: float


def _bilinear_upsample(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    n = grid.shape[0]
    ys = (np.arange(height) + 0.5) / height * (n - 1)
    xs = (np.arange(width) + 0.5) / width * (n - 1)
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, n - 2)
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, n - 2)
    fy = (ys - y0)[:, np.newaxis]
    fx = (xs - x0)[np.newaxis, :]
    return (
        grid[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + grid[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
        + grid[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
        + grid[np.ix_(y0 + 1, x0 + 1)] * fy * fx
    )


def _noise_fields(shape: tuple[int, int], seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two smooth, roughly zero-mean fields in [-1, 1]: one modulates k,
    the other the sky luminance. Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(2):
        grid = rng.uniform(-1.0, 1.0, (NOISE_GRID, NOISE_GRID))
        grid -= grid.mean()
        peak = np.abs(grid).max()
        if peak > 1.0:
            grid /= peak
        fields.append(_bilinear_upsample(grid, shape[0], shape[1]))
    return fields[0], fields[1]


def apply_haze(scene: RasterImage, depth: DepthMap, cond: HazeCondition) -> RasterImage:
    """Forward haze model; output clamped to [0, 1], always 3 channels."""
    if (depth.height, depth.width) != (scene.height, scene.width):
        raise ValueError("scene and depth dimensions do not match")
    rgb = scene.as_rgb().data
    shape = (scene.height, scene.width)
    k_noise, sky_noise = _noise_fields(shape, cond.noise_seed)
    sky = np.asarray(cond.sky_luminance, dtype=np.float64)

    if cond.kind in _VARYING_K:
        k_field = np.maximum(cond.k * (1.0 + cond.noise_strength * k_noise), 1e-6)
    else:
        k_field = np.full(shape, cond.k)
    if cond.kind in _VARYING_SKY:
        ls = sky[np.newaxis, np.newaxis, :] * (1.0 + cond.noise_strength * sky_noise)[:, :, np.newaxis]
        ls = np.clip(ls, 1e-6, 1.0)
    else:
        ls = np.broadcast_to(sky[np.newaxis, np.newaxis, :], rgb.shape)

    t = np.exp(-k_field * depth.data)[:, :, np.newaxis]
    hazy = rgb * t + ls * (1.0 - t)
    return RasterImage(np.clip(hazy, 0.0, 1.0))


def default_k_levels(
    depth: DepthMap, n: int = 9, low: float = 0.2, high: float = 1.8
) -> tuple[float, ...]:
    """Evenly spaced haze levels around k_ref = ln(2) / median depth."""
    if n < 1:
        raise ValueError("need at least one level")
    positive = depth.data[depth.data > 0]
    median = float(np.median(positive)) if positive.size else 1.0
    k_ref = float(np.log(2.0) / median)
    if n == 1:
        return (k_ref,)
    return tuple(float(k) for k in np.linspace(low * k_ref, high * k_ref, n))


def generate_stack(
    scene: RasterImage,
    depth: DepthMap,
    spec: SynthSpec,
    out_dir: str | os.PathLike,
    scene_id: str = "scene",
) -> list[ManifestEntry]:
    """Write hazy images for every (condition, level) plus the original.

    Also writes the depth map as `<scene_id>_depth.pfm` next to the
    images. Returns the manifest rows; paths are filenames relative to
    out_dir. Ground-truth k is the base level (0 for the original).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    levels = spec.k_levels if spec.k_levels is not None else default_k_levels(depth)
    entries: list[ManifestEntry] = []
    for ci, kind in enumerate(spec.conditions):
        for li, k in enumerate(levels):
            cond = HazeCondition(
                kind=kind,
                k=float(k),
                sky_luminance=spec.sky_luminance,
                noise_seed=spec.noise_seed + ci,
                noise_strength=spec.noise_strength,
            )
            name = f"{scene_id}_{kind}_{li:02d}.png"
            save_image(apply_haze(scene, depth, cond), out / name)
            entries.append(ManifestEntry(name, scene_id, kind, float(k)))
    original_name = f"{scene_id}_original.png"
    save_image(scene, out / original_name)
    entries.append(ManifestEntry(original_name, scene_id, "original", 0.0))
    save_map(depth, out / f"{scene_id}_depth.pfm")
    return entries


def write_manifest(entries: list[ManifestEntry], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["path", "scene_id", "condition", "k_true"])
        for e in entries:
            writer.writerow([e.path, e.scene_id, e.condition, repr(e.k_true)])


def read_manifest(path: str | os.PathLike, resolve: bool = True) -> list[ManifestEntry]:
    """Read a manifest; with `resolve`, relative image paths are resolved
    against the manifest's directory."""
    base = Path(path).parent
    entries = []
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != ["path", "scene_id", "condition", "k_true"]:
            raise ValueError(f"malformed manifest header in {path}")
        for row in reader:
            p = row["path"]
            if resolve and not os.path.isabs(p):
                p = str(base / p)
            entries.append(ManifestEntry(p, row["scene_id"], row["condition"], float(row["k_true"])))
    return entries


def procedural_scene(
    seed: int, width: int = 96, height: int = 72
) -> tuple[RasterImage, DepthMap]:
    """Procedural outdoor-like test scene: textured ground plane receding
    into the distance, box-shaped objects at varied depths, and a bright
    far sky band. Deterministic in the seed."""
    rng = np.random.default_rng(seed)
    yy = np.arange(height, dtype=np.float64)[:, np.newaxis]
    d_near = rng.uniform(3.0, 7.0)
    d_far = rng.uniform(45.0, 70.0)
    depth = np.broadcast_to(
        d_near + (d_far - d_near) * (1.0 - yy / (height - 1)), (height, width)
    ).copy()

    base = rng.uniform(0.25, 0.55, 3)
    img = np.tile(base[np.newaxis, np.newaxis, :], (height, width, 1))
    img += rng.uniform(-0.08, 0.08, (height, width, 3))

    for _ in range(int(rng.integers(6, 10))):
        w = int(rng.integers(6, max(7, width // 4)))
        h = int(rng.integers(8, max(9, height // 3 + 8)))
        x0 = int(rng.integers(0, max(1, width - w)))
        y0 = int(rng.integers(int(height * 0.2), max(int(height * 0.2) + 1, height - h)))
        color = rng.uniform(0.05, 0.8, 3)
        img[y0 : y0 + h, x0 : x0 + w] = color + rng.uniform(-0.04, 0.04, (h, w, 3))
        depth[y0 : y0 + h, x0 : x0 + w] = rng.uniform(d_near, d_far * 0.8)

    sky_rows = max(1, int(height * rng.uniform(0.10, 0.18)))
    img[:sky_rows] = rng.uniform(0.85, 0.95) + rng.uniform(-0.02, 0.02, (sky_rows, width, 3))
    depth[:sky_rows] = 250.0
    return RasterImage(np.clip(img, 0.0, 1.0)), DepthMap(depth)
