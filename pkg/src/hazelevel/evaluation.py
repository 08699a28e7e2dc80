"""Rank-correlation evaluation: Spearman scoring of variant grids,
three-level calibration, and simple pixel-statistics baselines.

The evaluation metric is the absolute Spearman correlation between
estimated haze scores and the ground-truth proxy. Because every recipe is
a fixed formula with no fitted parameters, there is no train/test split:
the grid search just scores every sample under every variant and ranks
variants by |rho|.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .darkchannel import (
    DarkChannelParams,
    dark_channel,
    estimate_atmospheric_light,
    raw_transmission,
)
from .depthsource import depth_for
from .estimator import (
    DIVISION_FLOOR,
    EstimatorVariant,
    _pool_sorted,
    enumerate_variants,
    transform,
)
from .guidedfilter import GuidedFilterParams, guided_filter
from .ingest import LabeledSample
from .raster import DEFAULT_D_MAX, RasterImage, ScalarMap, load_image

__all__ = [
    "BASELINE_KINDS",
    "EvalResult",
    "CalibrationThresholds",
    "ZeroRankVarianceError",
    "spearman",
    "score_samples",
    "grid_search",
    "calibrate",
    "classify",
    "baseline_score",
    "baseline_id",
    "write_results_csv",
]

# Pixel-statistics baselines; stand-ins unrelated to the estimator family,
# labeled "standin" in every output they appear in.
BASELINE_KINDS = ("mean_dark_channel", "contrast_rms", "saturation_mean")

LEVEL_NAMES = ("Clear", "Light", "Heavy")


class ZeroRankVarianceError(ValueError):
    """One of the rank vectors is constant; the correlation is undefined."""


@dataclass(frozen=True)
class EvalResult:
    """Per-variant evaluation outcome; `variant` is a canonical variant
    string or a baseline id."""

    variant: str
    spearman_abs: float
    rho: float
    p_value: float
    n: int


@dataclass(frozen=True)
class CalibrationThresholds:
    """Cut points mapping oriented scores to Clear/Light/Heavy."""

    orientation: int
    low_cut: float
    high_cut: float

    def __post_init__(self) -> None:
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")
        if not self.low_cut < self.high_cut:
            raise ValueError("low_cut must be below high_cut")


def baseline_id(kind: str) -> str:
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind: {kind!r}")
    return f"standin-baseline:{kind}"


# ---------------------------------------------------------------------------
# Spearman correlation
# ---------------------------------------------------------------------------

def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> tuple[float, float]:
    """Spearman rank correlation with average ranks for ties.

    Returns (rho, p) where p comes from the two-sided Student-t
    approximation t = rho * sqrt((n-2) / (1-rho^2)). Raises
    ZeroRankVarianceError when either rank vector is constant.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    n = xv.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    rx = _average_ranks(xv) - (n + 1) / 2.0
    ry = _average_ranks(yv) - (n + 1) / 2.0
    denom = math.sqrt(float((rx * rx).sum()) * float((ry * ry).sum()))
    if denom == 0.0:
        raise ZeroRankVarianceError("zero rank variance")
    rho = float(np.clip((rx * ry).sum() / denom, -1.0, 1.0))
    return rho, _p_value(rho, n)


def _p_value(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    df = n - 2
    t = abs(rho) * math.sqrt(df / (1.0 - rho * rho))
    return float(2.0 * stdtr(df, -t))


# ---------------------------------------------------------------------------
# grid scoring
# ---------------------------------------------------------------------------

def _score_one(
    sample: LabeledSample,
    variants: list[EstimatorVariant],
    baselines: tuple[str, ...],
    dc: DarkChannelParams,
    gf: GuidedFilterParams,
    d_max: float,
) -> np.ndarray:
    """All variant scores (and baseline scores) for one sample.

    Transmission maps, transforms, and sorted combined maps are computed
    once and shared across variants; result order matches the variant
    list, then the baseline list.
    """
    try:
        image = load_image(sample.image_path)
        depth = depth_for(sample, sample.depth_source, d_max=d_max, shape=(image.height, image.width))
    except Exception as exc:
        raise RuntimeError(f"sample failed to load: {sample.image_path}: {exc}") from exc

    t_cache: dict[str, np.ndarray] = {}
    tmap_cache: dict[tuple[str, str], np.ndarray] = {}
    dmap_cache: dict[tuple[bool, str], np.ndarray] = {}
    sorted_cache: dict[tuple, np.ndarray] = {}

    def t_base(kind: str) -> np.ndarray:
        if kind not in t_cache:
            if kind == "raw":
                a = estimate_atmospheric_light(image, dark_channel(image, dc.patch_size))
                t_cache["raw"] = raw_transmission(image, a, dc).data
            else:
                raw = ScalarMap(t_base("raw"))
                t_cache["refined"] = guided_filter(raw, image, gf).data
        return t_cache[kind]

    def t_map(kind: str, tr: str) -> np.ndarray:
        if (kind, tr) not in tmap_cache:
            tmap_cache[(kind, tr)] = transform(ScalarMap(t_base(kind)), tr).data
        return tmap_cache[(kind, tr)]

    def d_map(dnorm: bool, tr: str) -> np.ndarray:
        if (dnorm, tr) not in dmap_cache:
            base = depth.data
            if dnorm:
                peak = base.max()
                if peak > 0.0:
                    base = base / peak
            dmap_cache[(dnorm, tr)] = transform(ScalarMap(base), tr).data
        return dmap_cache[(dnorm, tr)]

    out = np.empty(len(variants) + len(baselines), dtype=np.float64)
    for i, v in enumerate(variants):
        key = (v.transmission_kind, v.t_transform, v.d_transform, v.combine, v.depth_normalize)
        if key not in sorted_cache:
            if v.combine == "t_only":
                arr = t_map(v.transmission_kind, v.t_transform)
            elif v.combine == "d_only":
                arr = d_map(v.depth_normalize, v.d_transform)
            else:
                t = t_map(v.transmission_kind, v.t_transform)
                d = d_map(v.depth_normalize, v.d_transform)
                if v.combine == "t_times_d":
                    arr = t * d
                elif v.combine == "t_over_d":
                    arr = t / np.maximum(d, DIVISION_FLOOR)
                else:
                    arr = d / np.maximum(t, DIVISION_FLOOR)
            sorted_cache[key] = np.sort(arr, axis=None)
        out[i] = _pool_sorted(sorted_cache[key], v.pool)
    for j, kind in enumerate(baselines):
        out[len(variants) + j] = baseline_score(image, kind)
    return out


_WORKER: dict = {}


def _init_worker(variants, baselines, dc, gf, d_max) -> None:
    _WORKER.update(variants=variants, baselines=baselines, dc=dc, gf=gf, d_max=d_max)


def _worker_score(sample: LabeledSample) -> np.ndarray:
    w = _WORKER
    return _score_one(sample, w["variants"], w["baselines"], w["dc"], w["gf"], w["d_max"])


def score_samples(
    samples: list[LabeledSample],
    variants: list[EstimatorVariant],
    baselines: tuple[str, ...] = (),
    dc: DarkChannelParams = DarkChannelParams(),
    gf: GuidedFilterParams = GuidedFilterParams(),
    d_max: float = DEFAULT_D_MAX,
    jobs: int = 1,
) -> np.ndarray:
    """Score matrix of shape (samples, variants + baselines).

    Samples score independently, so worker parallelism cannot change the
    result: rows are reduced in sample order whatever `jobs` is.
    """
    variants = [v.canonical() for v in variants]
    for kind in baselines:
        baseline_id(kind)  # validates
    if jobs <= 1:
        rows = [_score_one(s, variants, tuple(baselines), dc, gf, d_max) for s in samples]
    else:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(variants, tuple(baselines), dc, gf, d_max),
        ) as pool:
            rows = list(pool.map(_worker_score, samples, chunksize=4))
    return np.vstack(rows) if rows else np.empty((0, len(variants) + len(baselines)))


def grid_search(
    samples: list[LabeledSample],
    variants: list[EstimatorVariant] | None = None,
    baselines: tuple[str, ...] = (),
    dc: DarkChannelParams = DarkChannelParams(),
    gf: GuidedFilterParams = GuidedFilterParams(),
    d_max: float = DEFAULT_D_MAX,
    jobs: int = 1,
) -> list[EvalResult]:
    """Evaluate every variant (and requested baselines) over the samples.

    Returns results sorted by |rho| descending, ties broken by the
    canonical variant string. Variants whose scores have zero rank
    variance carry rho = 0 and p = 1. A constant ground-truth proxy is a
    degenerate dataset and raises ZeroRankVarianceError.
    """
    if len(samples) < 3:
        raise ValueError("grid search needs at least 3 samples")
    if variants is None:
        variants = enumerate_variants()
    truth = np.asarray([s.truth_value for s in samples], dtype=np.float64)
    if np.all(truth == truth[0]):
        raise ZeroRankVarianceError("ground-truth proxy is constant")
    matrix = score_samples(
        samples, variants, baselines=baselines, dc=dc, gf=gf, d_max=d_max, jobs=jobs
    )
    names = [v.key() for v in variants] + [baseline_id(k) for k in baselines]
    results = []
    for col, name in enumerate(names):
        try:
            rho, p = spearman(matrix[:, col], truth)
        except ZeroRankVarianceError:
            rho, p = 0.0, 1.0
        results.append(
            EvalResult(variant=name, spearman_abs=abs(rho), rho=rho, p_value=p, n=len(samples))
        )
    results.sort(key=lambda r: (-r.spearman_abs, r.variant))
    return results


def write_results_csv(results: list[EvalResult], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "spearman_abs", "rho", "p_value", "n"])
        for r in results:
            writer.writerow([r.variant, repr(r.spearman_abs), repr(r.rho), repr(r.p_value), r.n])


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def calibrate(scores, labels) -> CalibrationThresholds:
    """Three-level calibration from ordinal labels {0, 1, 2}.

    Orientation is the sign of the score/label correlation; cuts sit at
    the midpoints between adjacent class means of the oriented scores. A
    class with no samples gets its mean interpolated from the ordinal
    trend through the present classes.
    """
    sv = np.asarray(scores, dtype=np.float64)
    lv = np.asarray(labels, dtype=np.float64)
    if sv.shape != lv.shape or sv.ndim != 1:
        raise ValueError("scores and labels must be 1-D sequences of equal length")
    if not set(np.unique(lv)) <= {0.0, 1.0, 2.0}:
        raise ValueError("labels must be drawn from {0, 1, 2}")
    present = sorted(set(lv))
    if len(present) < 2:
        raise ValueError("need at least 2 distinct classes to calibrate")
    rho, _ = spearman(sv, lv)
    orientation = -1 if rho < 0 else 1
    oriented = orientation * sv
    means = {c: float(oriented[lv == c].mean()) for c in present}
    if len(present) == 2:
        # line through the two present (class, mean) points
        (c0, c1) = present
        slope = (means[c1] - means[c0]) / (c1 - c0)
        means = {c: means[c0] + slope * (c - c0) for c in (0.0, 1.0, 2.0)}
    low, high = sorted((0.5 * (means[0.0] + means[1.0]), 0.5 * (means[1.0] + means[2.0])))
    if low == high:
        high = math.nextafter(high, math.inf)
    return CalibrationThresholds(orientation=orientation, low_cut=low, high_cut=high)


def classify(score: float, thresholds: CalibrationThresholds) -> str:
    oriented = thresholds.orientation * score
    if oriented < thresholds.low_cut:
        return LEVEL_NAMES[0]
    if oriented < thresholds.high_cut:
        return LEVEL_NAMES[1]
    return LEVEL_NAMES[2]


# ---------------------------------------------------------------------------
# stand-in baselines
# ---------------------------------------------------------------------------

def baseline_score(image: RasterImage, kind: str) -> float:
    """Simple pixel statistics: mean dark channel, RMS contrast of the
    grayscale, or mean saturation."""
    if kind == "mean_dark_channel":
        return float(dark_channel(image, 15).data.mean())
    if kind == "contrast_rms":
        g = image.gray().data
        return float(np.sqrt(np.mean((g - g.mean()) ** 2)))
    if kind == "saturation_mean":
        rgb = image.as_rgb().data
        mx = rgb.max(axis=2)
        mn = rgb.min(axis=2)
        sat = np.where(mx > 0.0, (mx - mn) / np.where(mx > 0.0, mx, 1.0), 0.0)
        return float(sat.mean())
    raise ValueError(f"unknown baseline kind: {kind!r}")
