"""Rate-distortion curves and convex hulls over space-time configurations.

Curves live in (bitrate, quality) space with quality = 100 - mean DMOS, so
higher is better. Per configuration, stimuli sharing a target level
aggregate into one point with a Student-t 95% confidence interval. The
upper convex hull across configurations is the per-bitrate optimal
adaptation frontier; hulls from different configuration sets are compared
on a common bitrate grid by piecewise-linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateDataError

CONFIDENCE = 0.95


@dataclass(frozen=True)
class RDPoint:
    bitrate: float
    quality: float
    n: int = 1
    ci_half_width: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.ci_half_width < 0:
            raise ValueError("ci_half_width must be >= 0")


@dataclass(frozen=True)
class RDCurve:
    label: str
    points: tuple[RDPoint, ...]

    def __post_init__(self):
        rates = [p.bitrate for p in self.points]
        if any(b >= a for a, b in zip(rates[1:], rates)):
            raise ValueError("curve bitrates must be strictly increasing")

    @property
    def bitrates(self) -> np.ndarray:
        return np.array([p.bitrate for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    def quality_at(self, bitrate: float) -> float:
        return float(np.interp(bitrate, self.bitrates, self.qualities))

    def ci_at(self, bitrate: float) -> float:
        return float(np.interp(bitrate, self.bitrates, [p.ci_half_width for p in self.points]))

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "points": [
                {"bitrate": p.bitrate, "quality": p.quality, "n": p.n,
                 "ci_half_width": p.ci_half_width}
                for p in self.points
            ],
        }


def t_ci_half_width(values: np.ndarray, confidence: float = CONFIDENCE) -> float:
    """Student-t half-width of the mean's confidence interval; 0 when n == 1."""
    n = len(values)
    if n < 2:
        return 0.0
    s = float(np.std(values, ddof=1))
    t = float(stats.t.ppf(0.5 + confidence / 2.0, n - 1))
    return t * s / np.sqrt(n)


def aggregate_curve(
    scores,
    manifest: list[dict],
    spatial: str | None = None,
    temporal: str | None = None,
    content: str | None = None,
    label: str | None = None,
) -> RDCurve:
    """One RD point per target level over the stimuli matching the filter.

    ``scores`` maps stimulus_id -> DMOS (an OpinionScores table works via
    ``as_series``). Bitrate and DMOS are averaged per level; the CI is on
    the per-video DMOS values.
    """
    if hasattr(scores, "as_series"):
        scores = scores.as_series()
    selected: dict[int, list[dict]] = {}
    for entry in manifest:
        if entry.get("is_reference"):
            continue
        if spatial is not None and entry["spatial"] != spatial:
            continue
        if temporal is not None and entry["temporal"] != temporal:
            continue
        if content is not None and entry["content"] != content:
            continue
        if entry.get("target_level") is None:
            continue
        selected.setdefault(int(entry["target_level"]), []).append(entry)
    if not selected:
        raise ValueError(
            f"no stimuli match filter spatial={spatial} temporal={temporal} content={content}"
        )
    buckets = []
    for level in sorted(selected):
        # fixed accumulation order keeps the result permutation-invariant
        entries = sorted(selected[level], key=lambda e: e["stimulus_id"])
        bitrate = float(np.mean([e["achieved_bitrate"] for e in entries]))
        buckets.append((bitrate, entries))
    # levels whose QP selection collapsed onto the same encode share a
    # bitrate; merge them into one point instead of violating monotonicity
    buckets.sort(key=lambda be: be[0])
    merged: list[list] = []
    for bitrate, entries in buckets:
        if merged and abs(bitrate - merged[-1][0]) <= 1e-9 * max(1.0, abs(bitrate)):
            merged[-1][1].extend(entries)
        else:
            merged.append([bitrate, list(entries)])
    points = []
    for _, entries in merged:
        dmos = np.array([float(scores[e["stimulus_id"]]) for e in entries])
        bitrate = float(np.mean([e["achieved_bitrate"] for e in entries]))
        points.append(
            RDPoint(
                bitrate=bitrate,
                quality=100.0 - float(dmos.mean()),
                n=len(entries),
                ci_half_width=t_ci_half_width(dmos),
            )
        )
    if label is None:
        label = f"{spatial or '*'}/{temporal or '*'}"
    return RDCurve(label=label, points=tuple(points))


def _dominates(a: RDPoint, b: RDPoint) -> bool:
    return (
        a.bitrate <= b.bitrate
        and a.quality >= b.quality
        and (a.bitrate < b.bitrate or a.quality > b.quality)
    )


def pareto_filter(points) -> list[RDPoint]:
    """Drop every point dominated by another (cheaper and at least as good)."""
    pts = list(points)
    if not pts:
        raise ValueError("no points")
    return [p for p in pts if not any(_dominates(q, p) for q in pts if q is not p)]


def convex_hull_quality(points, label: str = "hull") -> RDCurve:
    """Upper convex hull over (bitrate, quality) by a monotone-chain sweep.

    The result is concave: chord slopes are non-increasing in bitrate.
    """
    pts = pareto_filter(points)
    if len(pts) < 2:
        raise DegenerateDataError("need at least 2 non-dominated points for a hull")
    if len({p.bitrate for p in pts}) < 2:
        raise DegenerateDataError("all points share one bitrate; hull undefined")
    pts = sorted(pts, key=lambda p: (p.bitrate, p.quality))
    hull: list[RDPoint] = []
    for p in pts:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a.bitrate - o.bitrate) * (p.quality - o.quality) - (
                a.quality - o.quality
            ) * (p.bitrate - o.bitrate)
            if cross >= 0:  # middle point at or below the chord
                hull.pop()
            else:
                break
        hull.append(p)
    return RDCurve(label=label, points=tuple(hull))


def compare_hulls(curves: list[RDCurve], grid_size: int = 50) -> dict:
    """Per-bitrate dominance report over the curves' common range.

    At each grid bitrate the winner is the highest interpolated quality;
    CI separation means the winner's lower CI bound clears the runner-up's
    upper bound. Contiguous same-winner runs are summarized as regimes.
    """
    if len(curves) < 2:
        raise ValueError("need at least 2 curves to compare")
    lo = max(c.bitrates.min() for c in curves)
    hi = min(c.bitrates.max() for c in curves)
    if lo >= hi:
        return {"grid": [], "regimes": [], "warning": "bitrate ranges do not overlap"}
    grid = np.linspace(lo, hi, grid_size)
    rows = []
    for b in grid:
        qs = {c.label: c.quality_at(b) for c in curves}
        cis = {c.label: c.ci_at(b) for c in curves}
        ordered = sorted(qs, key=qs.get, reverse=True)
        winner, runner = ordered[0], ordered[1]
        separated = qs[winner] - cis[winner] > qs[runner] + cis[runner]
        rows.append(
            {
                "bitrate": float(b),
                "qualities": {k: float(v) for k, v in qs.items()},
                "winner": winner,
                "ci_separated": bool(separated),
            }
        )
    regimes = []
    for row in rows:
        if regimes and regimes[-1]["winner"] == row["winner"]:
            regimes[-1]["end"] = row["bitrate"]
        else:
            regimes.append(
                {"winner": row["winner"], "start": row["bitrate"], "end": row["bitrate"]}
            )
    return {"grid": rows, "regimes": regimes}
