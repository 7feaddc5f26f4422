import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gazetarget.exceptions import FormatError, InvalidArgumentError, InvalidDataError, NoRegionError
from gazetarget.geometry import BoundingBox, Point
from gazetarget.heatmap import (
    Heatmap,
    argmax,
    decode_ghm,
    encode_ghm,
    encode_pgm,
    gaussian_mask,
    hottest_region,
    normalize_max,
    read_ghm,
    resample,
    write_ghm,
)

from .oracles import flood_fill_region

unit_grids = arrays(
    np.float64,
    st.tuples(st.integers(1, 9), st.integers(1, 9)),
    elements=st.floats(0, 1, allow_nan=False),
)


def blob(width, height, cx, cy, sigma, peak=1.0):
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    return peak * np.exp(-((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) / (2 * sigma**2))


class TestContainer:
    def test_rejects_out_of_range_and_nonfinite(self):
        with pytest.raises(InvalidDataError):
            Heatmap(np.array([[0.5, 1.5]]))
        with pytest.raises(InvalidDataError):
            Heatmap(np.array([[0.5, np.nan]]))
        with pytest.raises(InvalidDataError):
            Heatmap(np.zeros((0, 3)))
        with pytest.raises(InvalidDataError):
            Heatmap(np.zeros(4))

    def test_is_immutable_copy(self):
        src = np.zeros((2, 3))
        h = Heatmap(src)
        src[0, 0] = 1.0
        assert h.values[0, 0] == 0.0
        assert (h.width, h.height) == (3, 2)
        with pytest.raises(ValueError):
            h.values[0, 0] = 1.0


class TestNormalizeMax:
    def test_unit_peak_is_identity(self):
        arr = np.array([[0.2, 1.0], [0.0, 0.7]])
        assert np.array_equal(normalize_max(arr).values, arr)

    def test_constant_grid(self):
        assert np.all(normalize_max(np.full((3, 4), 0.5)).values == 1.0)

    def test_all_zero_unchanged(self):
        assert np.all(normalize_max(np.zeros((3, 3))).values == 0.0)

    def test_accepts_raw_scores_above_one(self):
        out = normalize_max(np.array([[2.0, 8.0]]))
        assert np.array_equal(out.values, [[0.25, 1.0]])

    @pytest.mark.parametrize("bad", [[[-0.1, 1.0]], [[np.inf, 1.0]], [[np.nan, 0.0]]])
    def test_rejects_invalid(self, bad):
        with pytest.raises(InvalidDataError):
            normalize_max(np.array(bad))


class TestArgmax:
    def test_single_peak(self):
        arr = np.zeros((5, 6))
        arr[2, 3] = 1.0
        assert argmax(arr) == Point(3, 2)

    def test_uniform_grid_picks_origin(self):
        assert argmax(np.full((4, 4), 0.3)) == Point(0, 0)

    def test_tie_takes_first_row_major(self):
        arr = np.zeros((3, 4)).ravel()
        arr[[5, 9]] = 0.9
        # index 5 on a 4-wide grid is column 1, row 1
        assert argmax(arr.reshape(3, 4)) == Point(1, 1)


class TestHottestRegion:
    def test_delta(self):
        arr = np.zeros((6, 7))
        arr[2, 3] = 1.0
        region = hottest_region(arr, tau=0.5)
        assert region.cell_count == 1
        assert region.bbox == BoundingBox(3, 2, 4, 3)
        assert region.centroid == Point(3.5, 2.5)
        assert region.threshold_used == 0.5

    def test_gaussian_blob_is_symmetric_about_peak(self):
        arr = blob(31, 25, 15.5, 12.5, 3.0)
        region = hottest_region(arr, tau=0.5)
        cells = flood_fill_region(arr, 0.5)
        rows = [r for r, _ in cells]
        cols = [c for _, c in cells]
        assert region.bbox == BoundingBox(min(cols), min(rows), max(cols) + 1, max(rows) + 1)
        peak = argmax(arr)
        left = peak.x - region.bbox.x_min
        right = region.bbox.x_max - (peak.x + 1)
        top = peak.y - region.bbox.y_min
        bottom = region.bbox.y_max - (peak.y + 1)
        assert abs(left - right) <= 1 and abs(top - bottom) <= 1

    def test_two_blobs_keeps_the_hotter(self):
        arr = blob(40, 20, 8.5, 10.5, 2.0, peak=1.0) + blob(40, 20, 30.5, 10.5, 2.0, peak=0.8)
        region = hottest_region(arr, tau=0.9)
        cells = flood_fill_region(arr, 0.9)
        assert region.cell_count == len(cells)
        assert region.bbox.x_max <= 20
        assert all(c < 20 for _, c in cells)

    def test_uniform_centroid_option(self):
        arr = np.zeros((1, 4))
        arr[0, 1] = 1.0
        arr[0, 2] = 0.6
        weighted = hottest_region(arr, 0.5, centroid="weighted").centroid
        uniform = hottest_region(arr, 0.5, centroid="uniform").centroid
        assert uniform.x == pytest.approx(2.0)
        assert weighted.x == pytest.approx((1.0 * 1.5 + 0.6 * 2.5) / 1.6)

    def test_all_zero_raises(self):
        with pytest.raises(NoRegionError):
            hottest_region(np.zeros((3, 3)))

    @pytest.mark.parametrize("tau", [0.0, 1.5, -0.2])
    def test_tau_range(self, tau):
        with pytest.raises(InvalidArgumentError):
            hottest_region(np.ones((2, 2)), tau=tau)

    @settings(max_examples=300)
    @given(unit_grids, st.floats(0.05, 1.0))
    def test_matches_flood_fill_oracle(self, arr, tau):
        if arr.max() <= 0:
            return
        region = hottest_region(arr, tau)
        expected = flood_fill_region(arr, tau)
        got = set(zip(*np.nonzero(region.mask)))
        assert got == expected
        assert region.cell_count == len(expected)
        pr, pc = np.unravel_index(np.argmax(arr), arr.shape)
        assert region.mask[pr, pc]
        assert np.all(arr[region.mask] >= tau * arr.max())
        assert region.bbox.contains(region.centroid)
        assert region.bbox.inside(arr.shape[1], arr.shape[0])

    @settings(max_examples=200)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_scale_invariance_after_normalization(self, seed, k):
        arr = np.random.default_rng(seed).random((7, 9))
        base = hottest_region(arr, 0.5)
        scaled = hottest_region(normalize_max(arr * k), 0.5)
        assert np.array_equal(base.mask, scaled.mask)
        assert base.bbox == scaled.bbox
        assert scaled.centroid.x == pytest.approx(base.centroid.x, abs=1e-9)


class TestGaussianMask:
    def test_examples(self):
        m = gaussian_mask(Point(4.5, 3.5), 2.0, 10, 8).values
        assert m[3, 4] == 1.0
        # one sigma to the right of the center cell
        assert m[3, 6] == pytest.approx(math.exp(-0.5), abs=1e-15)
        assert m[3, 6] == pytest.approx(0.60653, abs=1e-5)
        assert m[3, 2] == m[3, 6]
        assert m[1, 4] == m[5, 4]

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_mask(Point(1, 1), 0.0, 4, 4)

    @given(
        st.floats(0, 20), st.floats(0, 20), st.floats(1.0, 10.0), st.integers(1, 20), st.integers(1, 20)
    )
    def test_positive_bounded_and_monotone(self, cx, cy, sigma, w, h):
        m = gaussian_mask(Point(cx, cy), sigma, w, h).values
        assert np.all(m > 0) and np.all(m <= 1)
        xs = np.arange(w) + 0.5
        ys = np.arange(h) + 0.5
        d = np.hypot(xs[None, :] - cx, ys[:, None] - cy).ravel()
        order = np.argsort(d, kind="stable")
        assert np.all(np.diff(m.ravel()[order]) <= 1e-15)


class TestResample:
    def test_identity_is_bit_identical(self):
        arr = np.random.default_rng(1).random((5, 7))
        assert np.array_equal(resample(arr, 7, 5).values, arr)

    @pytest.mark.parametrize("shape", [(1, 1), (3, 17), (40, 2)])
    def test_constant_preserved(self, shape):
        out = resample(np.full((4, 6), 0.37), shape[1], shape[0])
        assert out.shape == shape
        assert np.all(out.values == 0.37)

    def test_upsample_peak_moves_to_scaled_location(self):
        arr = np.zeros((10, 12))
        arr[3, 7] = 1.0
        out = resample(arr, 24, 20)
        peak = argmax(out)
        # the source cell center (7.5, 3.5) maps to (15, 7) in the 2x grid
        assert abs(peak.x + 0.5 - 15.0) <= 1.0
        assert abs(peak.y + 0.5 - 7.0) <= 1.0

    @settings(max_examples=200)
    @given(unit_grids, st.integers(1, 25), st.integers(1, 25))
    def test_range_preserved(self, arr, w, h):
        out = resample(arr, w, h).values
        assert out.shape == (h, w)
        assert out.min() >= arr.min() and out.max() <= arr.max()


class TestGhmFormat:
    def test_round_trip(self, tmp_path):
        arr = np.random.default_rng(0).random((4, 5)).astype(np.float32).astype(np.float64)
        path = tmp_path / "h.ghm"
        write_ghm(arr, path)
        data = path.read_bytes()
        assert data[:4] == b"GHM1"
        assert struct.unpack("<II", data[4:12]) == (5, 4)
        assert len(data) == 12 + 4 * 20
        assert np.array_equal(read_ghm(path).values, arr)

    def test_bad_magic(self):
        data = b"GHM2" + encode_ghm(np.zeros((2, 2)))[4:]
        with pytest.raises(FormatError, match="magic"):
            decode_ghm(data)

    def test_short_file(self):
        data = encode_ghm(np.zeros((2, 2)))
        with pytest.raises(FormatError, match="short"):
            decode_ghm(data[:-1])
        with pytest.raises(FormatError, match="short"):
            decode_ghm(data[:6])

    def test_trailing_bytes(self):
        with pytest.raises(FormatError):
            decode_ghm(encode_ghm(np.zeros((2, 2))) + b"\0")

    def test_non_finite(self):
        data = bytearray(encode_ghm(np.zeros((1, 2))))
        data[12:16] = struct.pack("<f", float("nan"))
        with pytest.raises(FormatError, match="non-finite"):
            decode_ghm(bytes(data))

    def test_pgm(self):
        data = encode_pgm(np.array([[0.0, 0.5], [1.0, 0.2]]))
        assert data.startswith(b"P5\n2 2\n255\n")
        assert list(data[-4:]) == [0, 128, 255, 51]
