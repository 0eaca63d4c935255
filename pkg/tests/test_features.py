import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqlab.clips import Clip, ClipFormat, blank_clip
from vqlab.errors import DegenerateDataError
from vqlab.features import (
    colorfulness,
    compute_features,
    coverage_stats,
    frame_colorfulness,
    si_ti,
)

from conftest import make_clip


def _sobel_std_oracle(frame: np.ndarray) -> float:
    """Scalar-loop Sobel magnitude + population stddev over the interior."""
    h, w = frame.shape
    mags = []
    f = frame.astype(float)
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            gx = (f[i - 1, j + 1] + 2 * f[i, j + 1] + f[i + 1, j + 1]) - (
                f[i - 1, j - 1] + 2 * f[i, j - 1] + f[i + 1, j - 1]
            )
            gy = (f[i + 1, j - 1] + 2 * f[i + 1, j] + f[i + 1, j + 1]) - (
                f[i - 1, j - 1] + 2 * f[i - 1, j] + f[i - 1, j + 1]
            )
            mags.append(math.hypot(gx, gy))
    mean = sum(mags) / len(mags)
    return math.sqrt(sum((m - mean) ** 2 for m in mags) / len(mags))


class TestSiTi:
    def test_static_clip_has_zero_ti(self):
        clip = make_clip(width=16, height=16, frames=1)
        fmt = ClipFormat(16, 16, 30.0, 8, "420", 4)
        static = Clip(
            fmt,
            np.repeat(clip.y, 4, axis=0),
            np.repeat(clip.u, 4, axis=0),
            np.repeat(clip.v, 4, axis=0),
        )
        _, ti = si_ti(static)
        assert ti == 0.0

    def test_constant_luma_has_zero_si(self):
        clip = blank_clip(ClipFormat(16, 16, 30.0, 8, "420", 3), luma=90)
        si, _ = si_ti(clip)
        assert si == 0.0

    def test_checkerboard_matches_hand_oracle(self):
        board = np.indices((16, 16)).sum(axis=0) % 2 * 255
        fmt = ClipFormat(16, 16, 30.0, 8, "420", 2)
        y = np.stack([board, board]).astype(np.uint8)
        clip = Clip(fmt, y, *2 * [np.full((2, 8, 8), 128, np.uint8)])
        si, _ = si_ti(clip)
        want = _sobel_std_oracle(board)
        assert si == pytest.approx(want, rel=1e-9)

    def test_ti_matches_hand_oracle(self):
        rng = np.random.default_rng(5)
        y = rng.integers(0, 256, size=(3, 16, 16), dtype=np.uint8)
        fmt = ClipFormat(16, 16, 30.0, 8, "420", 3)
        clip = Clip(fmt, y, *2 * [np.full((3, 8, 8), 128, np.uint8)])
        _, ti = si_ti(clip)
        diffs = [y[t].astype(float) - y[t - 1].astype(float) for t in (1, 2)]
        want = max(float(np.std(d)) for d in diffs)
        assert ti == pytest.approx(want, rel=1e-12)

    def test_invariant_under_luma_offset(self):
        clip = make_clip(width=16, height=16, frames=3, seed=9)
        y = np.clip(clip.y, 0, 200)
        base = Clip(clip.format, y.astype(np.uint8), clip.u, clip.v)
        shifted = Clip(clip.format, (y + 55).astype(np.uint8), clip.u, clip.v)
        assert si_ti(base) == si_ti(shifted)

    def test_single_frame_rejected(self):
        clip = make_clip(width=16, height=16, frames=1)
        with pytest.raises(DegenerateDataError):
            si_ti(clip)

    def test_bit_depth_normalization(self):
        # the same pattern at 8 and 10 bits gives the same SI after rescale
        board = (np.indices((16, 16)).sum(axis=0) % 2).astype(np.uint16)
        fmt8 = ClipFormat(16, 16, 30.0, 8, "420", 2)
        fmt10 = ClipFormat(16, 16, 30.0, 10, "420", 2)
        c8 = Clip(fmt8, np.stack([board * 255] * 2).astype(np.uint8),
                  *2 * [np.full((2, 8, 8), 128, np.uint8)])
        c10 = Clip(fmt10, np.stack([board * 1023] * 2).astype(np.uint16),
                   *2 * [np.full((2, 8, 8), 512, np.uint16)])
        si8, _ = si_ti(c8)
        si10, _ = si_ti(c10)
        assert si8 == pytest.approx(si10, rel=1e-12)


class TestColorfulness:
    def test_gray_clip_is_zero(self):
        clip = blank_clip(ClipFormat(16, 16, 30.0, 10, "420", 2), luma=400)
        assert colorfulness(clip) == 0.0

    def test_mean_over_frames(self):
        fmt = ClipFormat(16, 16, 30.0, 8, "420", 1)
        red = blank_clip(fmt, luma=63)
        red = Clip(fmt, red.y, np.full((1, 8, 8), 102, np.uint8), np.full((1, 8, 8), 240, np.uint8))
        gray = blank_clip(fmt, luma=63)
        c1 = frame_colorfulness(red, 0)
        c2 = frame_colorfulness(gray, 0)
        fmt2 = ClipFormat(16, 16, 30.0, 8, "420", 2)
        both = Clip(
            fmt2,
            np.concatenate([red.y, gray.y]),
            np.concatenate([red.u, gray.u]),
            np.concatenate([red.v, gray.v]),
        )
        assert colorfulness(both) == pytest.approx((c1 + c2) / 2, rel=1e-12)

    def test_solid_red_matches_scalar_oracle(self):
        # codes for (approximately) pure red under BT.709 limited range
        ycode, ucode, vcode = 63, 102, 240
        fmt = ClipFormat(16, 16, 30.0, 8, "420", 1)
        clip = Clip(
            fmt,
            np.full((1, 16, 16), ycode, np.uint8),
            np.full((1, 8, 8), ucode, np.uint8),
            np.full((1, 8, 8), vcode, np.uint8),
        )
        # scalar hand evaluation from the same codes
        yn = (ycode - 16) / 219
        cb = (ucode - 128) / 224
        cr = (vcode - 128) / 224
        r = yn + 2 * (1 - 0.2126) * cr
        b = yn + 2 * (1 - 0.0722) * cb
        g = (yn - 0.2126 * r - 0.0722 * b) / (1 - 0.2126 - 0.0722)
        r, g, b = (min(max(c, 0.0), 1.0) * 255 for c in (r, g, b))
        rg = r - g
        yb = 0.5 * (r + g) - b
        want = 0.3 * math.sqrt(rg * rg + yb * yb)  # sigma terms vanish on a solid frame
        assert colorfulness(clip) == pytest.approx(want, rel=1e-9)
        assert want > 60  # sanity: red is strongly colorful

    def test_compute_features_bundle(self):
        clip = make_clip(width=16, height=16, frames=3)
        feats = compute_features(clip)
        assert feats.si >= 0 and feats.ti >= 0 and feats.cf >= 0


class TestCoverage:
    def test_identical_values(self):
        rep = coverage_stats([3.0, 3.0, 3.0], 0.0, 10.0, bins=10)
        assert rep.relative_range == 0.0
        assert rep.uniformity == 0.0

    def test_uniform_bin_centers(self):
        centers = [(i + 0.5) for i in range(10)]
        rep = coverage_stats(centers, 0.0, 10.0, bins=10)
        assert rep.uniformity == pytest.approx(1.0, abs=1e-12)
        assert rep.relative_range == pytest.approx(0.9)

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            coverage_stats([1.0, 11.0], 0.0, 10.0)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            coverage_stats([], 0.0, 1.0)
        with pytest.raises(ValueError):
            coverage_stats([0.5], 1.0, 1.0)
        with pytest.raises(ValueError):
            coverage_stats([0.5], 0.0, 1.0, bins=1)

    @given(
        vals=st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30),
        extra=st.floats(0.0, 10.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_bounds_and_monotone_range(self, vals, extra):
        rep = coverage_stats(vals, 0.0, 10.0)
        assert 0.0 <= rep.relative_range <= 1.0
        assert 0.0 <= rep.uniformity <= 1.0 + 1e-12
        widened = coverage_stats(vals + [extra], 0.0, 10.0)
        assert widened.relative_range >= rep.relative_range - 1e-12
