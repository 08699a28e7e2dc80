"""Building labeled sample lists: synthetic manifests and photo/PM2.5 joins.

Photo manifests carry `path,timestamp`; hourly particulate records carry
`timestamp,pm25`. Each photo is matched to the nearest record hour within
a tolerance, with equidistant ties resolved to the earlier hour.
"""

from __future__ import annotations

import csv
import os
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .depthsource import DepthSource
from .synth import read_manifest

__all__ = [
    "TRUTH_KINDS",
    "LabeledSample",
    "PM25Record",
    "JoinResult",
    "load_pm25",
    "join_photos",
    "write_samples_csv",
    "read_samples_csv",
    "samples_from_synth_manifest",
]

TRUTH_KINDS = ("k", "pm25", "ordinal")


@dataclass(frozen=True)
class LabeledSample:
    """An image plus its depth source and ground-truth haze proxy.

    The proxy is one of: synthetic haze intensity k, a PM2.5 reading, or
    an ordinal class (0=Clear, 1=Light, 2=Heavy).
    """

    image_path: str
    depth_source: DepthSource
    truth_kind: str
    truth_value: float
    timestamp: datetime | None = None

    def __post_init__(self) -> None:
        if self.truth_kind not in TRUTH_KINDS:
            raise ValueError(f"unknown truth kind: {self.truth_kind!r}")
        if not np.isfinite(self.truth_value):
            raise ValueError("truth value must be finite")
        if self.truth_kind == "pm25" and self.truth_value < 0:
            raise ValueError("pm25 truth must be >= 0")
        if self.truth_kind == "ordinal" and self.truth_value not in (0.0, 1.0, 2.0):
            raise ValueError("ordinal truth must be 0, 1, or 2")


@dataclass(frozen=True)
class PM25Record:
    hour: datetime
    value: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError("pm25 value must be finite and >= 0")


@dataclass
class JoinResult:
    samples: list[LabeledSample] = field(default_factory=list)
    joined: int = 0
    excluded: int = 0
    invalid: int = 0


def _parse_timestamp(text: str) -> datetime:
    """ISO-8601, 'Z' accepted; naive timestamps are taken as UTC."""
    ts = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_pm25(path: str | os.PathLike) -> tuple[list[PM25Record], int]:
    """Load hourly PM2.5 records from a `timestamp,pm25` CSV.

    Timestamps are truncated to the hour. Rows with unparseable
    timestamps, non-numeric or negative values, and repeats of an
    already-seen hour are dropped; the drop count is returned alongside
    the records, which come back sorted by hour.
    """
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["timestamp", "pm25"]:
            raise ValueError(f"malformed PM2.5 header in {path}: {header}")
        by_hour: dict[datetime, PM25Record] = {}
        dropped = 0
        rows = 0
        for row in reader:
            rows += 1
            try:
                ts = _parse_timestamp(row[0])
                value = float(row[1])
            except (ValueError, IndexError):
                dropped += 1
                continue
            if not np.isfinite(value) or value < 0:
                dropped += 1
                continue
            hour = ts.replace(minute=0, second=0, microsecond=0)
            if hour in by_hour:
                dropped += 1
                continue
            by_hour[hour] = PM25Record(hour, value)
    if rows == 0:
        raise ValueError(f"empty PM2.5 file: {path}")
    return sorted(by_hour.values(), key=lambda r: r.hour), dropped


def _nearest_record(records: list[PM25Record], ts: datetime) -> PM25Record:
    """Nearest record by hour; equidistant ties go to the earlier hour.
    `records` must be sorted by hour."""
    hours = [r.hour for r in records]
    i = bisect_left(hours, ts)
    if i == 0:
        return records[0]
    if i == len(records):
        return records[-1]
    before, after = records[i - 1], records[i]
    if (ts - before.hour) <= (after.hour - ts):
        return before
    return after


def join_photos(
    manifest: str | os.PathLike,
    records: list[PM25Record],
    tolerance: float = 30.0,
) -> JoinResult:
    """Associate photos from a `path,timestamp` manifest with PM2.5 records.

    Photos farther than `tolerance` minutes from every record hour are
    excluded; rows that fail to parse count as invalid. Output samples are
    sorted by path, so the result is independent of manifest row order.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    if not records:
        raise ValueError("no PM2.5 records to join against")
    records = sorted(records, key=lambda r: r.hour)
    result = JoinResult()
    with open(manifest, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["path", "timestamp"]:
            raise ValueError(f"malformed manifest header in {manifest}: {header}")
        for row in reader:
            try:
                photo_path = row[0]
                ts = _parse_timestamp(row[1])
                if not photo_path:
                    raise ValueError("empty path")
            except (ValueError, IndexError):
                result.invalid += 1
                continue
            record = _nearest_record(records, ts)
            gap = abs((ts - record.hour).total_seconds()) / 60.0
            if gap > tolerance:
                result.excluded += 1
                continue
            result.samples.append(
                LabeledSample(
                    image_path=photo_path,
                    depth_source=DepthSource.uniform(1.0),
                    truth_kind="pm25",
                    truth_value=record.value,
                    timestamp=ts,
                )
            )
            result.joined += 1
    result.samples.sort(key=lambda s: s.image_path)
    return result


def write_samples_csv(samples: list[LabeledSample], path: str | os.PathLike) -> None:
    """Emit samples as `path,truth_kind,truth_value,depth_kind,depth_path`.

    Uniform depth sources store their value in the depth_path column; the
    normalize flag is not persisted (it is a variant axis in evaluation).
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["path", "truth_kind", "truth_value", "depth_kind", "depth_path"])
        for s in samples:
            src = s.depth_source
            depth_path = repr(float(src.value)) if src.kind == "uniform" else src.path
            writer.writerow([s.image_path, s.truth_kind, repr(s.truth_value), src.kind, depth_path])


def read_samples_csv(path: str | os.PathLike) -> list[LabeledSample]:
    samples = []
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        expected = ["path", "truth_kind", "truth_value", "depth_kind", "depth_path"]
        if reader.fieldnames != expected:
            raise ValueError(f"malformed samples header in {path}: {reader.fieldnames}")
        for row in reader:
            if row["depth_kind"] == "uniform":
                src = DepthSource.uniform(float(row["depth_path"]))
            else:
                src = DepthSource(kind=row["depth_kind"], path=row["depth_path"])
            samples.append(
                LabeledSample(
                    image_path=row["path"],
                    depth_source=src,
                    truth_kind=row["truth_kind"],
                    truth_value=float(row["truth_value"]),
                )
            )
    return samples


def samples_from_synth_manifest(
    manifest_path: str | os.PathLike, normalize: bool = False
) -> list[LabeledSample]:
    """Turn a synthesis manifest into samples with ground-truth k and the
    per-scene depth file written by the generator."""
    samples = []
    base = Path(manifest_path).parent
    for entry in read_manifest(manifest_path):
        depth_path = base / f"{entry.scene_id}_depth.pfm"
        samples.append(
            LabeledSample(
                image_path=entry.path,
                depth_source=DepthSource.ground_truth_file(str(depth_path), normalize=normalize),
                truth_kind="k",
                truth_value=entry.k_true,
            )
        )
    return samples
