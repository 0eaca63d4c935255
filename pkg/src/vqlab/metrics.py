"""Frame-wise objective quality metrics on display-format clip pairs.

PSNR, SSIM and MS-SSIM run on luma only, frame by frame, and pool by the
arithmetic mean over frames. Both clips must share the display format so
space-time configurations stay comparable; temporally subsampled stimuli
are expected to arrive here already upsampled back to full rate.

Externally computed model scores (one pooled value per stimulus) are
ingested from CSV and validated against the stimulus manifest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .clips import Clip
from .errors import FormatError, PipelineError

PSNR_CAP_DB = 100.0

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MSSSIM_MIN_SIDE = 176  # five dyadic scales under an 11-tap window


@dataclass(frozen=True)
class MetricScore:
    stimulus_id: str
    metric: str
    per_frame: tuple | None
    pooled: float


def _check_pair(ref: Clip, dist: Clip) -> None:
    if ref.format != dist.format:
        raise FormatError(
            f"metric inputs must share one format ({ref.format} != {dist.format})"
        )


def psnr(ref: Clip, dist: Clip, stimulus_id: str = "") -> MetricScore:
    """Per-frame luma PSNR in dB, capped at 100 dB; mean-pooled."""
    _check_pair(ref, dist)
    peak = float(ref.format.max_code)
    values = []
    for t in range(ref.format.frame_count):
        mse = float(np.mean((ref.y[t].astype(np.float64) - dist.y[t].astype(np.float64)) ** 2))
        if mse == 0.0:
            values.append(PSNR_CAP_DB)
        else:
            values.append(min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB))
    return MetricScore(stimulus_id, "psnr", tuple(values), float(np.mean(values)))


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def _ssim_stats(a: np.ndarray, b: np.ndarray, peak: float):
    """Mean SSIM and mean contrast-structure over the valid window region."""
    win = _gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    mu_a = convolve2d(a, win, mode="valid")
    mu_b = convolve2d(b, win, mode="valid")
    var_a = convolve2d(a * a, win, mode="valid") - mu_a * mu_a
    var_b = convolve2d(b * b, win, mode="valid") - mu_b * mu_b
    cov = convolve2d(a * b, win, mode="valid") - mu_a * mu_b
    cs_map = (2.0 * cov + c2) / (var_a + var_b + c2)
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    ssim_map = lum * cs_map
    return float(ssim_map.mean()), float(cs_map.mean())


def ssim(ref: Clip, dist: Clip, stimulus_id: str = "") -> MetricScore:
    """Single-scale luma SSIM, 11x11 Gaussian window (sigma 1.5), mean map."""
    _check_pair(ref, dist)
    fmt = ref.format
    if min(fmt.width, fmt.height) < SSIM_WINDOW:
        raise FormatError(f"frames smaller than the {SSIM_WINDOW}px SSIM window")
    peak = float(fmt.max_code)
    values = []
    for t in range(fmt.frame_count):
        s, _ = _ssim_stats(ref.y[t].astype(np.float64), dist.y[t].astype(np.float64), peak)
        values.append(s)
    return MetricScore(stimulus_id, "ssim", tuple(values), float(np.mean(values)))


def _halve(img: np.ndarray) -> np.ndarray:
    # 2x2 box low-pass + 2:1 decimation; odd trailing row/col dropped
    h, w = img.shape
    img = img[: h - h % 2, : w - w % 2]
    return (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2] + img[1::2, 1::2]) / 4.0


def ms_ssim_frame(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    score = 1.0
    for level, weight in enumerate(MSSSIM_WEIGHTS):
        s, cs = _ssim_stats(a, b, peak)
        last = level == len(MSSSIM_WEIGHTS) - 1
        score *= (s if last else cs) ** weight
        if not last:
            a, b = _halve(a), _halve(b)
    return float(score)


def ms_ssim(ref: Clip, dist: Clip, stimulus_id: str = "") -> MetricScore:
    """Five-scale MS-SSIM with the standard exponents; mean-pooled over frames."""
    _check_pair(ref, dist)
    fmt = ref.format
    if min(fmt.width, fmt.height) < MSSSIM_MIN_SIDE:
        raise FormatError(
            f"short side {min(fmt.width, fmt.height)} px is too small for "
            f"5 dyadic scales (needs >= {MSSSIM_MIN_SIDE})"
        )
    peak = float(fmt.max_code)
    values = []
    for t in range(fmt.frame_count):
        values.append(
            ms_ssim_frame(ref.y[t].astype(np.float64), dist.y[t].astype(np.float64), peak)
        )
    return MetricScore(stimulus_id, "msssim", tuple(values), float(np.mean(values)))


METRIC_FUNCTIONS = {"psnr": psnr, "ssim": ssim, "msssim": ms_ssim}


def ingest_external_scores(path: str | Path, manifest_ids) -> tuple[list[MetricScore], dict]:
    """Load externally computed pooled model scores from CSV.

    Expected columns: stimulus_id, metric, value. Rows naming unknown
    stimuli are rejected (reported, not fatal); malformed rows raise with
    their line number. Manifest stimuli with no scores are listed as
    warnings.
    """
    known = set(manifest_ids)
    scores: list[MetricScore] = []
    rejected: list[str] = []
    covered: dict[str, set] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return [], {"missing": sorted(known), "rejected_rows": []}
        required = {"stimulus_id", "metric", "value"}
        if not required.issubset(set(reader.fieldnames)):
            raise PipelineError(
                f"{path}: expected columns {sorted(required)}, found {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            sid = row["stimulus_id"]
            metric = row["metric"]
            try:
                value = float(row["value"])
            except (TypeError, ValueError) as exc:
                raise PipelineError(f"{path}:{lineno}: bad value {row['value']!r}") from exc
            if sid not in known:
                rejected.append(f"line {lineno}: unknown stimulus {sid!r}")
                continue
            scores.append(MetricScore(sid, metric, None, value))
            covered.setdefault(metric, set()).add(sid)
    missing = {
        metric: sorted(known - ids) for metric, ids in covered.items() if known - ids
    }
    return scores, {"missing": missing, "rejected_rows": rejected}
