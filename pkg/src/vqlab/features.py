"""Low-level content descriptors: spatial/temporal information and colorfulness.

SI and TI follow the ITU-T P.910 recipe (Sobel gradients, frame
differences, max of spatial standard deviations over time). Colorfulness
is the Hasler-Suesstrunk opponent-channel statistic, averaged over frames.
Luma is rescaled to the 8-bit code range before filtering so 8-bit and
10-bit clips land on a common scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clips import CHROMA_420, Clip
from .errors import DegenerateDataError

# BT.709 luma weights; content in this toolkit is HD/UHD
_KR, _KB = 0.2126, 0.0722
_KG = 1.0 - _KR - _KB


@dataclass(frozen=True)
class ContentFeatures:
    si: float
    ti: float
    cf: float

    def to_json(self) -> dict:
        return {"si": self.si, "ti": self.ti, "cf": self.cf}


@dataclass(frozen=True)
class CoverageReport:
    relative_range: float
    uniformity: float
    bin_count: int


def _luma_8bit_scale(clip: Clip) -> np.ndarray:
    return clip.y.astype(np.float64) * (255.0 / clip.format.max_code)


def _sobel_magnitude(frame: np.ndarray) -> np.ndarray:
    # 3x3 Sobel on the interior; border pixels carry no valid gradient
    gx = (
        (frame[:-2, 2:] + 2.0 * frame[1:-1, 2:] + frame[2:, 2:])
        - (frame[:-2, :-2] + 2.0 * frame[1:-1, :-2] + frame[2:, :-2])
    )
    gy = (
        (frame[2:, :-2] + 2.0 * frame[2:, 1:-1] + frame[2:, 2:])
        - (frame[:-2, :-2] + 2.0 * frame[:-2, 1:-1] + frame[:-2, 2:])
    )
    return np.hypot(gx, gy)


def si_ti(clip: Clip) -> tuple[float, float]:
    """Spatial and temporal information of a clip.

    SI is the max over frames of the spatial stddev of the Sobel gradient
    magnitude of luma; TI is the max over consecutive frame pairs of the
    stddev of the luma difference.
    """
    if clip.format.frame_count < 2:
        raise DegenerateDataError("temporal information undefined for a single-frame clip")
    luma = _luma_8bit_scale(clip)
    si = max(float(np.std(_sobel_magnitude(f))) for f in luma)
    ti = max(float(np.std(luma[t] - luma[t - 1])) for t in range(1, luma.shape[0]))
    return si, ti


def _yuv_frame_to_rgb(clip: Clip, t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One frame to full-range RGB in [0, 255], BT.709 limited-range decode."""
    k = 1 << (clip.format.bit_depth - 8)
    y = (clip.y[t].astype(np.float64) - 16.0 * k) / (219.0 * k)
    u = clip.u[t].astype(np.float64)
    v = clip.v[t].astype(np.float64)
    # replicate chroma samples up to the luma raster
    u = np.repeat(u, 2, axis=1)
    v = np.repeat(v, 2, axis=1)
    if clip.format.chroma == CHROMA_420:
        u = np.repeat(u, 2, axis=0)
        v = np.repeat(v, 2, axis=0)
    cb = (u - 128.0 * k) / (224.0 * k)
    cr = (v - 128.0 * k) / (224.0 * k)
    r = y + 2.0 * (1.0 - _KR) * cr
    b = y + 2.0 * (1.0 - _KB) * cb
    # direct form keeps G == Y exactly for neutral chroma
    g = y - (2.0 * _KR * (1.0 - _KR) / _KG) * cr - (2.0 * _KB * (1.0 - _KB) / _KG) * cb
    rgb = [np.clip(c, 0.0, 1.0) * 255.0 for c in (r, g, b)]
    return rgb[0], rgb[1], rgb[2]


def frame_colorfulness(clip: Clip, t: int) -> float:
    r, g, b = _yuv_frame_to_rgb(clip, t)
    rg = r - g
    yb = 0.5 * (r + g) - b
    sigma = np.sqrt(np.var(rg) + np.var(yb))
    mu = np.sqrt(np.mean(rg) ** 2 + np.mean(yb) ** 2)
    return float(sigma + 0.3 * mu)


def colorfulness(clip: Clip) -> float:
    """Mean over frames of the opponent-channel colorfulness statistic."""
    return float(np.mean([frame_colorfulness(clip, t) for t in range(clip.format.frame_count)]))


def compute_features(clip: Clip) -> ContentFeatures:
    si, ti = si_ti(clip)
    return ContentFeatures(si=si, ti=ti, cf=colorfulness(clip))


def coverage_stats(
    values,
    attainable_min: float,
    attainable_max: float,
    bins: int = 10,
) -> CoverageReport:
    """Relative range and uniformity of coverage of a feature sample.

    Uniformity is the Shannon entropy of the histogram over equal-width
    bins spanning the attainable range, normalized by log2(bins).
    """
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size < 1:
        raise ValueError("need at least one value")
    if not attainable_max > attainable_min:
        raise ValueError("attainable_max must exceed attainable_min")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if vals.min() < attainable_min or vals.max() > attainable_max:
        raise ValueError(
            f"values [{vals.min()}, {vals.max()}] outside attainable "
            f"bounds [{attainable_min}, {attainable_max}]"
        )
    rel = float((vals.max() - vals.min()) / (attainable_max - attainable_min))
    hist, _ = np.histogram(vals, bins=bins, range=(attainable_min, attainable_max))
    p = hist[hist > 0] / hist.sum()
    entropy = float(-(p * np.log2(p)).sum())
    return CoverageReport(
        relative_range=rel,
        uniformity=entropy / np.log2(bins),
        bin_count=bins,
    )
