import numpy as np
import pytest

from hazelevel import DepthMap, DepthSource, LabeledSample, depth_for, save_image, save_map
from hazelevel.raster import RasterImage


def _sample(tmp_path, height=4, width=4):
    img_path = tmp_path / "scene.png"
    save_image(RasterImage(np.full((height, width, 3), 0.5)), img_path)
    return LabeledSample(
        image_path=str(img_path),
        depth_source=DepthSource.uniform(1.0),
        truth_kind="k",
        truth_value=0.0,
    )


def test_source_validation():
    with pytest.raises(ValueError):
        DepthSource.uniform(0.0)
    with pytest.raises(ValueError):
        DepthSource(kind="uniform", value=1.0, path="x.pfm")
    with pytest.raises(ValueError):
        DepthSource(kind="ground-truth-file")
    with pytest.raises(ValueError):
        DepthSource(kind="mystery", path="x.pfm")


def test_uniform_depth(tmp_path):
    sample = _sample(tmp_path)
    got = depth_for(sample, DepthSource.uniform(10.0), d_max=300.0)
    np.testing.assert_array_equal(got.data, np.full((4, 4), 10.0))


def test_uniform_depth_capped_at_dmax(tmp_path):
    sample = _sample(tmp_path)
    got = depth_for(sample, DepthSource.uniform(500.0), d_max=300.0)
    np.testing.assert_array_equal(got.data, np.full((4, 4), 300.0))


def test_shape_skips_image_read(tmp_path):
    sample = LabeledSample(
        image_path=str(tmp_path / "missing.png"),
        depth_source=DepthSource.uniform(2.0),
        truth_kind="k",
        truth_value=0.0,
    )
    got = depth_for(sample, sample.depth_source, shape=(3, 5))
    assert got.data.shape == (3, 5)


def test_ground_truth_normalize_saturated(tmp_path):
    sample = _sample(tmp_path, 2, 2)
    depth_path = tmp_path / "d.pfm"
    save_map(DepthMap(np.full((2, 2), 300.0)), depth_path)
    got = depth_for(sample, DepthSource.ground_truth_file(str(depth_path), normalize=True))
    np.testing.assert_array_equal(got.data, np.ones((2, 2)))


def test_normalize_divides_by_max(tmp_path):
    sample = _sample(tmp_path, 2, 2)
    depth_path = tmp_path / "d.pfm"
    save_map(DepthMap(np.array([[1.0, 2.0], [3.0, 4.0]])), depth_path)
    got = depth_for(
        sample, DepthSource.ground_truth_file(str(depth_path), normalize=True), d_max=300.0
    )
    np.testing.assert_array_equal(got.data, [[0.25, 0.5], [0.75, 1.0]])


def test_normalized_output_strictly_positive(tmp_path):
    sample = _sample(tmp_path, 2, 2)
    depth_path = tmp_path / "d.pfm"
    save_map(DepthMap(np.array([[0.5, 2.0], [3.0, 4.0]])), depth_path)
    got = depth_for(sample, DepthSource.precomputed_file(str(depth_path), normalize=True))
    assert got.data.min() > 0.0
    assert got.data.max() == 1.0


def test_resample_to_image_shape(tmp_path):
    sample = _sample(tmp_path, 4, 4)
    depth_path = tmp_path / "d.pfm"
    save_map(DepthMap(np.array([[1.0, 8.0], [3.0, 4.0]])), depth_path)
    got = depth_for(sample, DepthSource.precomputed_file(str(depth_path)))
    assert got.data.shape == (4, 4)
    assert got.data.min() == 1.0
    assert got.data.max() == 8.0


def test_mismatch_rejected_when_resample_disabled(tmp_path):
    sample = _sample(tmp_path, 4, 4)
    depth_path = tmp_path / "d.pfm"
    save_map(DepthMap(np.ones((2, 2))), depth_path)
    with pytest.raises(ValueError):
        depth_for(sample, DepthSource.precomputed_file(str(depth_path)), resample=False)


def test_missing_depth_file(tmp_path):
    sample = _sample(tmp_path)
    with pytest.raises(OSError):
        depth_for(sample, DepthSource.ground_truth_file(str(tmp_path / "nope.pfm")))
