from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from hazelevel import (
    DepthMap,
    DepthSource,
    LabeledSample,
    PM25Record,
    RasterImage,
    SynthSpec,
    generate_stack,
    join_photos,
    load_pm25,
    read_samples_csv,
    samples_from_synth_manifest,
    write_samples_csv,
)
from hazelevel.synth import write_manifest


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def _write_manifest(path, rows):
    path.write_text("path,timestamp\n" + "".join(f"{p},{t}\n" for p, t in rows))


def _write_pm25(path, rows):
    path.write_text("timestamp,pm25\n" + "".join(f"{t},{v}\n" for t, v in rows))


# ---------------------------------------------------------------------------
# PM2.5 loading
# ---------------------------------------------------------------------------

def test_load_pm25_parses_and_truncates(tmp_path):
    f = tmp_path / "pm.csv"
    _write_pm25(f, [("2014-01-05T13:00:00Z", 120), ("2014-01-05T14:45:10Z", 80)])
    records, dropped = load_pm25(f)
    assert dropped == 0
    assert records[0] == PM25Record(utc(2014, 1, 5, 13), 120.0)
    assert records[1].hour == utc(2014, 1, 5, 14)  # 14:45 truncated to the hour


def test_load_pm25_drops_sensor_error_codes(tmp_path):
    f = tmp_path / "pm.csv"
    _write_pm25(f, [("2014-01-05T13:00:00Z", -999), ("2014-01-05T14:00:00Z", 55)])
    records, dropped = load_pm25(f)
    assert dropped == 1
    assert len(records) == 1


def test_load_pm25_drops_non_numeric_and_bad_timestamps(tmp_path):
    f = tmp_path / "pm.csv"
    f.write_text("timestamp,pm25\n2014-01-05T13:00:00Z,n/a\nnot-a-time,12\n2014-01-05T15:00:00Z,9\n")
    records, dropped = load_pm25(f)
    assert dropped == 2
    assert len(records) == 1


def test_load_pm25_sorts_by_hour(tmp_path):
    f = tmp_path / "pm.csv"
    _write_pm25(
        f,
        [
            ("2014-01-05T15:00:00Z", 3),
            ("2014-01-05T13:00:00Z", 1),
            ("2014-01-05T14:00:00Z", 2),
        ],
    )
    records, _ = load_pm25(f)
    assert [r.value for r in records] == [1.0, 2.0, 3.0]


def test_load_pm25_duplicate_hours_keep_first(tmp_path):
    f = tmp_path / "pm.csv"
    _write_pm25(f, [("2014-01-05T13:05:00Z", 10), ("2014-01-05T13:55:00Z", 99)])
    records, dropped = load_pm25(f)
    assert len(records) == 1
    assert records[0].value == 10.0
    assert dropped == 1


def test_load_pm25_offset_timestamps_normalize_to_utc(tmp_path):
    f = tmp_path / "pm.csv"
    _write_pm25(f, [("2014-01-05T21:00:00+08:00", 42)])
    records, _ = load_pm25(f)
    assert records[0].hour == utc(2014, 1, 5, 13)


def test_load_pm25_rejects_bad_header(tmp_path):
    f = tmp_path / "pm.csv"
    f.write_text("time,value\n2014-01-05T13:00:00Z,1\n")
    with pytest.raises(ValueError):
        load_pm25(f)


def test_load_pm25_rejects_empty(tmp_path):
    f = tmp_path / "pm.csv"
    f.write_text("timestamp,pm25\n")
    with pytest.raises(ValueError):
        load_pm25(f)


# ---------------------------------------------------------------------------
# photo join
# ---------------------------------------------------------------------------

def test_join_nearest_hour(tmp_path):
    m = tmp_path / "m.csv"
    _write_manifest(m, [("a.png", "2014-01-05T13:20:00Z")])
    records = [PM25Record(utc(2014, 1, 5, 13), 10.0), PM25Record(utc(2014, 1, 5, 14), 20.0)]
    result = join_photos(m, records, tolerance=30)
    assert result.joined == 1
    assert result.samples[0].truth_value == 10.0  # 13:00 is 20 min away, 14:00 is 40


def test_join_tolerance_excludes(tmp_path):
    m = tmp_path / "m.csv"
    _write_manifest(m, [("a.png", "2014-01-05T13:31:00Z")])
    records = [PM25Record(utc(2014, 1, 5, 14, 30), 10.0)]  # 59 minutes away
    result = join_photos(m, records, tolerance=30)
    assert result.joined == 0
    assert result.excluded == 1


def test_join_equidistant_tie_goes_to_earlier_hour(tmp_path):
    m = tmp_path / "m.csv"
    _write_manifest(m, [("a.png", "2014-01-05T13:30:00Z")])
    records = [PM25Record(utc(2014, 1, 5, 13), 111.0), PM25Record(utc(2014, 1, 5, 14), 222.0)]
    result = join_photos(m, records, tolerance=30)
    assert result.samples[0].truth_value == 111.0


def test_join_counts_invalid_rows(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("path,timestamp\na.png,not-a-time\n,2014-01-05T13:00:00Z\nb.png,2014-01-05T13:01:00Z\n")
    result = join_photos(m, [PM25Record(utc(2014, 1, 5, 13), 5.0)])
    assert result.invalid == 2
    assert result.joined == 1


def test_join_output_sorted_and_order_independent(tmp_path):
    rows = [(f"{name}.png", "2014-01-05T13:05:00Z") for name in ("zeta", "alpha", "mid")]
    m1, m2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    _write_manifest(m1, rows)
    _write_manifest(m2, rows[::-1])
    records = [PM25Record(utc(2014, 1, 5, 13), 5.0)]
    a = join_photos(m1, records)
    b = join_photos(m2, records)
    assert [s.image_path for s in a.samples] == sorted(r[0] for r in rows)
    assert a.samples == b.samples


def test_join_conservation_on_fuzzed_manifest(tmp_path):
    rng = np.random.default_rng(77)
    base = utc(2014, 1, 5, 0)
    records = [PM25Record(base + timedelta(hours=h), float(h)) for h in range(0, 24, 2)]
    rows = []
    for i in range(1000):
        roll = rng.random()
        if roll < 0.1:
            rows.append((f"p{i}.png", "garbage"))
        elif roll < 0.15:
            rows.append(("", "2014-01-05T03:00:00Z"))
        else:
            minutes = int(rng.integers(0, 24 * 60))
            rows.append((f"p{i}.png", (base + timedelta(minutes=minutes)).isoformat()))
    m = tmp_path / "fuzz.csv"
    _write_manifest(m, rows)
    result = join_photos(m, records, tolerance=20)
    assert result.joined + result.excluded + result.invalid == 1000
    assert result.joined == len(result.samples)
    assert result.joined > 0 and result.excluded > 0 and result.invalid > 0


def test_join_every_gap_within_tolerance(tmp_path):
    rng = np.random.default_rng(13)
    base = utc(2014, 1, 5, 0)
    records = [PM25Record(base + timedelta(hours=h), float(h)) for h in range(24)]
    rows = [
        (f"p{i}.png", (base + timedelta(minutes=int(rng.integers(0, 1440)))).isoformat())
        for i in range(200)
    ]
    m = tmp_path / "m.csv"
    _write_manifest(m, rows)
    tolerance = 12.0
    result = join_photos(m, records, tolerance=tolerance)
    by_hour = {r.hour: r.value for r in records}
    for s in result.samples:
        # recover the matched hour from the stored value
        hour = next(h for h, v in by_hour.items() if v == s.truth_value)
        assert abs((s.timestamp - hour).total_seconds()) / 60.0 <= tolerance


def test_join_requires_records(tmp_path):
    m = tmp_path / "m.csv"
    _write_manifest(m, [("a.png", "2014-01-05T13:00:00Z")])
    with pytest.raises(ValueError):
        join_photos(m, [])


def test_join_rejects_negative_tolerance(tmp_path):
    m = tmp_path / "m.csv"
    _write_manifest(m, [("a.png", "2014-01-05T13:00:00Z")])
    with pytest.raises(ValueError):
        join_photos(m, [PM25Record(utc(2014, 1, 5, 13), 1.0)], tolerance=-1)


def test_join_rejects_bad_manifest_header(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("file,when\na.png,2014-01-05T13:00:00Z\n")
    with pytest.raises(ValueError):
        join_photos(m, [PM25Record(utc(2014, 1, 5, 13), 1.0)])


# ---------------------------------------------------------------------------
# samples CSV and synthetic manifests
# ---------------------------------------------------------------------------

def test_samples_csv_roundtrip(tmp_path):
    samples = [
        LabeledSample("a.png", DepthSource.uniform(2.5), "pm25", 120.0),
        LabeledSample("b.png", DepthSource.ground_truth_file("b_depth.pfm"), "k", 0.4),
        LabeledSample("c.png", DepthSource.precomputed_file("c.pfm"), "ordinal", 2.0),
    ]
    path = tmp_path / "samples.csv"
    write_samples_csv(samples, path)
    back = read_samples_csv(path)
    assert len(back) == 3
    assert back[0].depth_source.kind == "uniform"
    assert back[0].depth_source.value == 2.5
    assert back[1].depth_source.path == "b_depth.pfm"
    assert [s.truth_value for s in back] == [120.0, 0.4, 2.0]
    assert [s.truth_kind for s in back] == ["pm25", "k", "ordinal"]


def test_sample_validation():
    with pytest.raises(ValueError):
        LabeledSample("a.png", DepthSource.uniform(1.0), "vibes", 1.0)
    with pytest.raises(ValueError):
        LabeledSample("a.png", DepthSource.uniform(1.0), "pm25", -3.0)
    with pytest.raises(ValueError):
        LabeledSample("a.png", DepthSource.uniform(1.0), "ordinal", 1.5)


def test_samples_from_synth_manifest(tmp_path, rng):
    scene = RasterImage(rng.random((8, 8, 3)))
    depth = DepthMap(np.full((8, 8), 5.0))
    entries = generate_stack(
        scene, depth, SynthSpec(k_levels=(0.1, 0.2), conditions=("uniform",)), tmp_path, "sc"
    )
    manifest = tmp_path / "manifest.csv"
    write_manifest(entries, manifest)
    samples = samples_from_synth_manifest(manifest, normalize=True)
    assert len(samples) == 3
    assert all(s.truth_kind == "k" for s in samples)
    assert all(s.depth_source.kind == "ground-truth-file" for s in samples)
    assert all(s.depth_source.normalize for s in samples)
    assert all(s.depth_source.path.endswith("sc_depth.pfm") for s in samples)
    assert sorted(s.truth_value for s in samples) == [0.0, 0.1, 0.2]
