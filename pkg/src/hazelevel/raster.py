"""Raster containers and file I/O for images and depth maps.

Images are (height, width, channels) float64 arrays with intensities in
[0, 1]; scalar maps are (height, width) float64 arrays. Supported image
formats: 8/16-bit PNG and binary PPM/PGM. Depth maps load from
single-channel PFM (scale line "-1.0" = little-endian) or a plain-text
DEPTH format, and save as PFM.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

__all__ = [
    "FormatError",
    "RasterImage",
    "ScalarMap",
    "DepthMap",
    "TransmissionMap",
    "load_image",
    "save_image",
    "load_depth",
    "save_map",
    "resample_nearest",
]

DEFAULT_D_MAX = 300.0


class FormatError(ValueError):
    """Unreadable, malformed, or unsupported image/depth file."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Immutable image with 1 or 3 channels, intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"image must be HxWx1 or HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must have at least one row and column")
        if not np.isfinite(arr).all():
            raise ValueError("image intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def as_rgb(self) -> "RasterImage":
        """Promote a 1-channel image to 3 identical channels (no-op for 3)."""
        if self.channels == 3:
            return self
        return RasterImage(np.repeat(self.data, 3, axis=2))

    def gray(self) -> "ScalarMap":
        """Channel-mean grayscale."""
        return ScalarMap(self.data.mean(axis=2))


@dataclass(frozen=True, eq=False)
class ScalarMap:
    """Immutable (height, width) map of finite real values."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"scalar map must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("scalar map must have at least one row and column")
        if not np.isfinite(arr).all():
            raise ValueError("scalar map values must be finite")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


class DepthMap(ScalarMap):
    """ScalarMap of nonnegative scene distances."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.data.min() < 0.0:
            raise ValueError("depth values must be nonnegative")


# A transmission map is structurally a ScalarMap with values in (0, 1].
TransmissionMap = ScalarMap


# ---------------------------------------------------------------------------
# image I/O
# ---------------------------------------------------------------------------

def _sniff(path: str | os.PathLike) -> bytes:
    with open(path, "rb") as f:
        return f.read(8)


def load_image(path: str | os.PathLike) -> RasterImage:
    """Load an 8/16-bit PNG or binary PPM/PGM, normalized to [0, 1].

    Intensities are divided by the format's max value (255, 65535, or the
    PNM maxval). Grayscale files stay 1-channel; use as_rgb() to promote.
    """
    magic = _sniff(path)
    if magic.startswith(b"\x89PNG"):
        return _load_png(path)
    if magic[:2] in (b"P5", b"P6"):
        return _load_pnm(path)
    raise FormatError(f"unsupported image format: {path}")


def _load_png(path: str | os.PathLike) -> RasterImage:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FormatError(f"unreadable PNG: {path}")
    if raw.dtype == np.uint8:
        maxval = 255.0
    elif raw.dtype == np.uint16:
        maxval = 65535.0
    else:
        raise FormatError(f"unsupported PNG bit depth ({raw.dtype}): {path}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:
            raise FormatError(f"alpha channel not supported: {path}")
        raw = raw[:, :, ::-1]  # BGR -> RGB
    if raw.size == 0:
        raise FormatError(f"zero-sized image: {path}")
    return RasterImage(raw.astype(np.float64) / maxval)


def _pnm_tokens(f, count: int) -> list[bytes]:
    """Read whitespace-separated header tokens, skipping '#' comments."""
    tokens: list[bytes] = []
    while len(tokens) < count:
        c = f.read(1)
        if not c:
            raise FormatError("truncated PNM header")
        if c == b"#":
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            continue
        tok = c
        while True:
            c = f.read(1)
            if not c or c.isspace():
                break
            tok += c
        tokens.append(tok)
    return tokens


def _load_pnm(path: str | os.PathLike) -> RasterImage:
    with open(path, "rb") as f:
        magic = f.read(2)
        channels = 1 if magic == b"P5" else 3
        try:
            width, height, maxval = (int(t) for t in _pnm_tokens(f, 3))
        except ValueError as exc:
            raise FormatError(f"malformed PNM header: {path}") from exc
        if width < 1 or height < 1:
            raise FormatError(f"zero-sized image: {path}")
        if not 1 <= maxval <= 65535:
            raise FormatError(f"unsupported PNM maxval {maxval}: {path}")
        dtype = ">u2" if maxval > 255 else np.uint8
        count = width * height * channels
        data = np.frombuffer(f.read(), dtype=dtype, count=-1)
        if data.size < count:
            raise FormatError(f"truncated PNM data: {path}")
        data = data[:count].reshape(height, width, channels)
    return RasterImage(data.astype(np.float64) / float(maxval))


def save_image(image: RasterImage, path: str | os.PathLike, bits: int = 16) -> None:
    """Write as PNG (.png) or binary PNM (.ppm/.pgm) at 8 or 16 bits."""
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = 255 if bits == 8 else 65535
    dtype = np.uint8 if bits == 8 else np.uint16
    quant = np.rint(image.data * maxval).clip(0, maxval).astype(dtype)
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        out = quant[:, :, ::-1] if image.channels == 3 else quant[:, :, 0]
        if not cv2.imwrite(str(path), out):
            raise OSError(f"failed to write image: {path}")
    elif ext in (".ppm", ".pgm"):
        if ext == ".pgm" and image.channels != 1:
            raise FormatError("PGM requires a 1-channel image")
        rgb = image.as_rgb() if ext == ".ppm" else image
        quant = np.rint(rgb.data * maxval).clip(0, maxval).astype(dtype)
        magic = b"P6" if ext == ".ppm" else b"P5"
        payload = quant.astype(">u2").tobytes() if bits == 16 else quant.tobytes()
        with open(path, "wb") as f:
            f.write(magic + b"\n%d %d\n%d\n" % (image.width, image.height, maxval))
            f.write(payload)
    else:
        raise FormatError(f"unsupported image extension: {path}")


# ---------------------------------------------------------------------------
# depth I/O
# ---------------------------------------------------------------------------

def load_depth(path: str | os.PathLike, d_max: float = DEFAULT_D_MAX) -> DepthMap:
    """Load a depth map from PFM or plain-text DEPTH.

    Negative or non-finite entries are replaced by d_max; all entries are
    clamped to [0, d_max].
    """
    if not np.isfinite(d_max) or d_max <= 0:
        raise ValueError("d_max must be a positive finite number")
    magic = _sniff(path)
    if magic[:2] == b"Pf":
        arr = _read_pfm(path)
    elif magic[:2] == b"PF":
        raise FormatError(f"3-channel PFM not supported for depth: {path}")
    elif magic[:5] == b"DEPTH":
        arr = _read_depth_text(path)
    else:
        raise FormatError(f"unsupported depth format: {path}")
    arr = np.where(np.isfinite(arr) & (arr >= 0.0), arr, d_max)
    return DepthMap(np.clip(arr, 0.0, d_max))


def _read_header_line(f) -> bytes:
    line = b""
    while True:
        c = f.read(1)
        if not c:
            raise FormatError("truncated PFM header")
        if c == b"\n":
            return line
        line += c


def _read_pfm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        if _read_header_line(f).strip() != b"Pf":
            raise FormatError(f"not a single-channel PFM: {path}")
        dims = _read_header_line(f).split()
        try:
            width, height = int(dims[0]), int(dims[1])
            scale = float(_read_header_line(f))
        except (ValueError, IndexError) as exc:
            raise FormatError(f"malformed PFM header: {path}") from exc
        if width < 1 or height < 1:
            raise FormatError(f"bad PFM dimensions: {path}")
        dtype = "<f4" if scale < 0 else ">f4"
        buf = f.read(width * height * 4)
        if len(buf) != width * height * 4:
            raise FormatError(f"truncated PFM data: {path}")
        data = np.frombuffer(buf, dtype=dtype).reshape(height, width)
    # PFM rows are stored bottom-to-top
    return np.flipud(data).astype(np.float64)


def save_map(map: ScalarMap, path: str | os.PathLike) -> None:
    """Write a scalar map as little-endian single-channel PFM.

    PFM stores 32-bit floats, so round-tripping is bit-exact whenever the
    values are float32-representable.
    """
    with open(path, "wb") as f:
        f.write(b"Pf\n%d %d\n-1.0\n" % (map.width, map.height))
        f.write(np.flipud(map.data).astype("<f4").tobytes())


def _read_depth_text(path: str | os.PathLike) -> np.ndarray:
    """Plain-text fallback: `DEPTH 1 <width> <height>`, then <height> rows
    of <width> space-separated floats, row 0 = top row."""
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "DEPTH" or header[1] != "1":
            raise FormatError(f"malformed DEPTH header: {path}")
        try:
            width, height = int(header[2]), int(header[3])
        except ValueError as exc:
            raise FormatError(f"malformed DEPTH header: {path}") from exc
        if width < 1 or height < 1:
            raise FormatError(f"bad DEPTH dimensions: {path}")
        rows = []
        for i in range(height):
            parts = f.readline().split()
            if len(parts) != width:
                raise FormatError(f"DEPTH row {i} has {len(parts)} values, expected {width}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise FormatError(f"non-numeric value in DEPTH row {i}") from exc
    return np.asarray(rows, dtype=np.float64)


def resample_nearest(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbor resample of a 2-D array to (height, width)."""
    src_h, src_w = arr.shape
    ys = np.minimum(((np.arange(height) + 0.5) * src_h / height).astype(np.intp), src_h - 1)
    xs = np.minimum(((np.arange(width) + 0.5) * src_w / width).astype(np.intp), src_w - 1)
    return arr[np.ix_(ys, xs)]
