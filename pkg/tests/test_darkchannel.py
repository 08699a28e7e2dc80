import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hazelevel import (
    AtmosphericLight,
    DarkChannelParams,
    RasterImage,
    dark_channel,
    estimate_atmospheric_light,
    raw_transmission,
)

from conftest import rand_image


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def dark_channel_oracle(rgb: np.ndarray, patch: int) -> np.ndarray:
    """Nested-loop erosion: min over channels and the clipped window."""
    h, w, _ = rgb.shape
    r = patch // 2
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            ys = slice(max(0, y - r), min(h, y + r + 1))
            xs = slice(max(0, x - r), min(w, x + r + 1))
            out[y, x] = rgb[ys, xs, :].min()
    return out


def atmospheric_light_oracle(rgb: np.ndarray, dark: np.ndarray) -> tuple:
    """Full sort of the dark channel, exhaustive candidate scan."""
    flat_dark = dark.ravel()
    pixels = rgb.reshape(-1, 3)
    n = max(1, int(flat_dark.size * 0.001))
    ranked = sorted(range(flat_dark.size), key=lambda i: (-flat_dark[i], i))
    candidates = ranked[:n]
    best_sum = max(pixels[i].sum() for i in candidates)
    winner = min(i for i in candidates if pixels[i].sum() == best_sum)
    return tuple(max(float(v), 0.05) for v in pixels[winner])


# ---------------------------------------------------------------------------
# dark channel
# ---------------------------------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        DarkChannelParams(patch_size=4)
    with pytest.raises(ValueError):
        DarkChannelParams(patch_size=-1)
    with pytest.raises(ValueError):
        DarkChannelParams(omega=0.0)
    with pytest.raises(ValueError):
        DarkChannelParams(omega=1.5)
    DarkChannelParams()  # defaults valid


def test_constant_image_dark_is_constant():
    img = RasterImage(np.full((10, 12, 3), 0.7))
    np.testing.assert_array_equal(dark_channel(img, 5).data, np.full((10, 12), 0.7))


def test_single_dark_pixel_erodes_its_neighborhood():
    data = np.full((21, 21, 3), 0.5)
    data[10, 10, :] = 0.0
    dark = dark_channel(RasterImage(data), 15).data
    yy, xx = np.mgrid[0:21, 0:21]
    in_window = (np.abs(yy - 10) <= 7) & (np.abs(xx - 10) <= 7)
    np.testing.assert_array_equal(dark[in_window], 0.0)
    np.testing.assert_array_equal(dark[~in_window], 0.5)


def test_matches_bruteforce_oracle_exactly(rng):
    img = rand_image(rng, 9, 9)
    got = dark_channel(img, 3).data
    np.testing.assert_array_equal(got, dark_channel_oracle(img.data, 3))


@pytest.mark.parametrize("patch", [1, 3, 15])
def test_oracle_agreement_varied_sizes(rng, patch):
    for _ in range(5):
        h, w = rng.integers(1, 20, 2)
        img = rand_image(rng, int(h), int(w))
        np.testing.assert_array_equal(
            dark_channel(img, patch).data, dark_channel_oracle(img.data, patch)
        )


def test_gray_image_dark_equals_window_min(rng):
    img = rand_image(rng, 8, 8, channels=1)
    np.testing.assert_array_equal(
        dark_channel(img, 3).data, dark_channel_oracle(img.as_rgb().data, 3)
    )


@given(arrays(np.float64, (7, 9, 3), elements=st.floats(0, 1)), st.sampled_from([1, 3, 5]))
def test_dark_bounded_by_channel_min(data, patch):
    dark = dark_channel(RasterImage(data), patch).data
    assert np.all(dark <= data.min(axis=2) + 1e-15)


@settings(max_examples=30)
@given(
    arrays(np.float64, (6, 6, 3), elements=st.floats(0, 0.5)),
    arrays(np.float64, (6, 6, 3), elements=st.floats(0, 0.5)),
)
def test_dark_is_monotone_in_the_image(lo, bump):
    a = dark_channel(RasterImage(lo), 3).data
    b = dark_channel(RasterImage(lo + bump), 3).data
    assert np.all(b >= a)


# ---------------------------------------------------------------------------
# atmospheric light
# ---------------------------------------------------------------------------

def test_white_sky_wins():
    data = np.full((20, 20, 3), 0.3)
    data[2:9, 2:9, :] = 1.0  # sky block larger than the patch
    img = RasterImage(data)
    a = estimate_atmospheric_light(img, dark_channel(img, 5))
    assert a.values == (1.0, 1.0, 1.0)


def test_all_black_hits_floor():
    img = RasterImage(np.zeros((8, 8, 3)))
    a = estimate_atmospheric_light(img, dark_channel(img, 3))
    assert a.values == (0.05, 0.05, 0.05)


def test_matches_full_sort_oracle(rng):
    for _ in range(10):
        # quantized intensities force ties in both criteria
        data = rng.integers(0, 5, (32, 32, 3)) / 4.0
        img = RasterImage(data)
        dark = dark_channel(img, 3)
        got = estimate_atmospheric_light(img, dark)
        assert got.values == atmospheric_light_oracle(img.data, dark.data)


def test_oracle_agreement_larger_candidate_pool(rng):
    data = rng.integers(0, 3, (64, 64, 3)) / 2.0  # 4096 px -> 4 candidates
    img = RasterImage(data)
    dark = dark_channel(img, 3)
    assert estimate_atmospheric_light(img, dark).values == atmospheric_light_oracle(
        img.data, dark.data
    )


def test_dimension_mismatch_rejected(rng):
    img = rand_image(rng, 6, 6)
    with pytest.raises(ValueError):
        estimate_atmospheric_light(img, dark_channel(rand_image(rng, 5, 5), 3))


def test_atmospheric_light_validation():
    with pytest.raises(ValueError):
        AtmosphericLight((0.0, 0.5, 0.5))
    with pytest.raises(ValueError):
        AtmosphericLight((0.5, 0.5, 1.1))


# ---------------------------------------------------------------------------
# raw transmission
# ---------------------------------------------------------------------------

def test_image_equal_to_a_gives_one_minus_omega():
    img = RasterImage(np.full((9, 9, 3), 0.6))
    a = AtmosphericLight((0.6, 0.6, 0.6))
    t = raw_transmission(img, a, DarkChannelParams(patch_size=15, omega=0.95))
    np.testing.assert_allclose(t.data, 0.05, atol=1e-12)


def test_black_image_gives_full_transmission():
    img = RasterImage(np.zeros((9, 9, 3)))
    a = AtmosphericLight((0.7, 0.8, 0.9))
    t = raw_transmission(img, a)
    np.testing.assert_array_equal(t.data, np.ones((9, 9)))


def test_forward_model_scalar_oracle():
    # black scene under uniform depth 1 and haze 0.5 with sky == A:
    # the photo is A*(1 - e^-0.5), so the estimate is 1 - omega*(1 - e^-0.5)
    t_true = math.exp(-0.5)
    a = AtmosphericLight((0.8, 0.8, 0.8))
    hazy = RasterImage(np.full((12, 12, 3), 0.8 * (1.0 - t_true)))
    got = raw_transmission(hazy, a, DarkChannelParams(omega=0.95))
    expected = min(max(1.0 - 0.95 * (1.0 - t_true), 0.01), 1.0)
    np.testing.assert_allclose(got.data, expected, atol=1e-12)


@given(arrays(np.float64, (8, 8, 3), elements=st.floats(0, 1)))
def test_transmission_stays_clamped(data):
    t = raw_transmission(RasterImage(data), AtmosphericLight((0.5, 0.6, 0.7)))
    assert t.data.min() >= 0.01
    assert t.data.max() <= 1.0


@settings(max_examples=30)
@given(
    arrays(np.float64, (6, 6, 3), elements=st.floats(0, 0.5)),
    arrays(np.float64, (6, 6, 3), elements=st.floats(0, 0.5)),
)
def test_transmission_antitone_in_image(lo, bump):
    a = AtmosphericLight((0.9, 0.9, 0.9))
    t_lo = raw_transmission(RasterImage(lo), a)
    t_hi = raw_transmission(RasterImage(lo + bump), a)
    assert np.all(t_hi.data <= t_lo.data + 1e-15)
