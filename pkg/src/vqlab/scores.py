"""Opinion-score processing: hidden-reference difference scores, per-session
Z-score normalization, kurtosis-gated subject rejection, and rescaling to
DMOS on [0, 100] (BT.500-style), plus the MOS variant and split-half
consistency analysis.

The raw-vote table is long-form with one row per vote:
(participant, session, stimulus_id, content, is_reference, raw_score).
DMOS is oriented so that higher means worse quality; MOS keeps the raw
orientation (higher is better).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .bench import srcc
from .errors import DegenerateDataError, PipelineError

VOTE_COLUMNS = ("participant", "session", "stimulus_id", "content", "is_reference", "raw_score")

KURTOSIS_NORMAL_RANGE = (2.0, 4.0)
FLAG_RATE_THRESHOLD = 0.05
ASYMMETRY_THRESHOLD = 0.3


def load_votes(path: str | Path) -> pd.DataFrame:
    votes = pd.read_csv(path)
    missing = [c for c in VOTE_COLUMNS if c not in votes.columns]
    if missing:
        raise PipelineError(f"vote table missing columns {missing}")
    votes = votes.copy()
    votes["is_reference"] = votes["is_reference"].astype(bool)
    return votes


def difference_scores(votes: pd.DataFrame) -> pd.DataFrame:
    """Reference-minus-stimulus difference scores, references dropped.

    Every distorted vote must have a same-session reference vote for the
    same content by the same subject.
    """
    refs = votes[votes["is_reference"]]
    dup = refs.duplicated(subset=["participant", "session", "content"])
    if dup.any():
        row = refs[dup].iloc[0]
        raise PipelineError(
            f"subject {row['participant']} session {row['session']} has multiple "
            f"reference votes for content {row['content']}"
        )
    ref_scores = refs.set_index(["participant", "session", "content"])["raw_score"]
    distorted = votes[~votes["is_reference"]].copy()
    key = pd.MultiIndex.from_frame(distorted[["participant", "session", "content"]])
    mapped = ref_scores.reindex(key)
    if mapped.isna().any():
        i = int(np.flatnonzero(mapped.isna().to_numpy())[0])
        row = distorted.iloc[i]
        raise PipelineError(
            f"missing reference score for subject {row['participant']}, "
            f"video {row['stimulus_id']}, session {row['session']}"
        )
    distorted["diff"] = mapped.to_numpy() - distorted["raw_score"].to_numpy()
    return distorted[["participant", "session", "stimulus_id", "content", "diff"]]


@dataclass
class ZMatrix:
    """Per-subject-video Z-scores with the session statistics behind them."""

    table: pd.DataFrame                 # participant, session, stimulus_id, content, z
    session_stats: pd.DataFrame         # participant, session, n, mu, sigma
    degenerate_sessions: list = field(default_factory=list)

    def pivot(self) -> pd.DataFrame:
        # references are rated once per session, so a subject-video cell can
        # hold several z values (MOS path); average them
        return self.table.pivot_table(
            index="participant", columns="stimulus_id", values="z", aggfunc="mean"
        )


def session_zscores(diffs: pd.DataFrame) -> ZMatrix:
    """Standardize difference scores within each (subject, session).

    Sessions with zero score spread cannot be normalized; they are flagged
    and excluded rather than propagating infinities.
    """
    stats_rows = []
    z_frames = []
    degenerate = []
    for (p, k), grp in diffs.groupby(["participant", "session"], sort=True):
        n = len(grp)
        mu = float(grp["diff"].mean())
        sigma = float(grp["diff"].std(ddof=1)) if n > 1 else 0.0
        stats_rows.append({"participant": p, "session": k, "n": n, "mu": mu, "sigma": sigma})
        if n < 2 or sigma == 0.0:
            degenerate.append((p, k))
            continue
        out = grp.copy()
        out["z"] = (grp["diff"] - mu) / sigma
        z_frames.append(out[["participant", "session", "stimulus_id", "content", "z"]])
    if not z_frames:
        raise DegenerateDataError("no usable subject-sessions")
    table = pd.concat(z_frames, ignore_index=True)
    return ZMatrix(
        table=table,
        session_stats=pd.DataFrame(stats_rows),
        degenerate_sessions=degenerate,
    )


@dataclass
class RejectionReport:
    flags_above: dict          # subject -> P_i
    flags_below: dict          # subject -> Q_i
    opportunities: dict        # subject -> number of videos where flags were possible
    video_stats: pd.DataFrame  # stimulus_id, n, z_mean, sigma, kurtosis, normal
    skipped_videos: list
    rejected: set

    def to_json(self) -> dict:
        return {
            "rejected": sorted(map(str, self.rejected)),
            "subjects": {
                str(i): {
                    "flags_above": int(self.flags_above[i]),
                    "flags_below": int(self.flags_below[i]),
                    "opportunities": int(self.opportunities[i]),
                }
                for i in self.flags_above
            },
            "skipped_videos": list(map(str, self.skipped_videos)),
        }


def subject_rejection(zm: ZMatrix) -> RejectionReport:
    """Kurtosis-gated outlier counting and the two-predicate rejection rule.

    Per video, scores within mean +- 2 sigma are unflagged when the Z-score
    kurtosis indicates normality (between 2 and 4); otherwise the gate
    widens to sqrt(20) sigma. A subject is rejected when flags exceed 5% of
    their scoring opportunities and the above/below flags are roughly
    balanced (asymmetry below 0.3).
    """
    wide = zm.pivot()
    subjects = list(wide.index)
    p_flags = {i: 0 for i in subjects}
    q_flags = {i: 0 for i in subjects}
    opportunities = {i: 0 for i in subjects}
    video_rows = []
    skipped = []
    lo, hi = KURTOSIS_NORMAL_RANGE
    for sid in wide.columns:
        col = wide[sid].dropna()
        n = len(col)
        if n < 2:
            skipped.append(sid)
            continue
        z = col.to_numpy()
        zbar = z.mean()
        centered = z - zbar
        m2 = float(np.mean(centered**2))
        if m2 == 0.0 or z.max() == z.min():
            skipped.append(sid)
            continue
        m4 = float(np.mean(centered**4))
        beta2 = m4 / (m2 * m2)
        sigma = float(np.std(z, ddof=1))
        normal = lo <= beta2 <= hi
        width = 2.0 if normal else np.sqrt(20.0)
        upper = zbar + width * sigma
        lower = zbar - width * sigma
        for subject, value in col.items():
            opportunities[subject] += 1
            if value >= upper:
                p_flags[subject] += 1
            elif value <= lower:
                q_flags[subject] += 1
        video_rows.append(
            {"stimulus_id": sid, "n": n, "z_mean": zbar, "sigma": sigma,
             "kurtosis": beta2, "normal": normal}
        )
    rejected = set()
    for i in subjects:
        total = p_flags[i] + q_flags[i]
        if total == 0 or opportunities[i] == 0:
            continue
        if total / opportunities[i] > FLAG_RATE_THRESHOLD and abs(p_flags[i] - q_flags[i]) / total < ASYMMETRY_THRESHOLD:
            rejected.add(i)
    return RejectionReport(
        flags_above=p_flags,
        flags_below=q_flags,
        opportunities=opportunities,
        video_stats=pd.DataFrame(video_rows),
        skipped_videos=skipped,
        rejected=rejected,
    )


def rescale_z(z):
    """Map Z-scores onto [0, 100]: -3 -> 0, 0 -> 50, +3 -> 100. No clamping."""
    return 100.0 * (np.asarray(z, dtype=float) + 3.0) / 6.0


@dataclass
class OpinionScores:
    kind: str                   # "dmos" or "mos"
    table: pd.DataFrame         # stimulus_id, score, std, n

    def score_of(self, stimulus_id: str) -> float:
        row = self.table.loc[self.table["stimulus_id"] == stimulus_id, "score"]
        if row.empty:
            raise KeyError(stimulus_id)
        return float(row.iloc[0])

    def as_series(self) -> pd.Series:
        return self.table.set_index("stimulus_id")["score"]

    def write_csv(self, path: str | Path) -> None:
        out = self.table.rename(
            columns={"score": self.kind, "std": f"{self.kind}_std", "n": "n_subjects"}
        )
        out.to_csv(path, index=False)


def rescale_to_dmos(zm: ZMatrix, rejected: set, kind: str = "dmos") -> OpinionScores:
    accepted = zm.table[~zm.table["participant"].isin(rejected)].copy()
    if accepted.empty:
        raise DegenerateDataError("all subjects rejected")
    accepted["zprime"] = rescale_z(accepted["z"])
    grouped = accepted.groupby("stimulus_id")["zprime"]
    table = pd.DataFrame(
        {
            "stimulus_id": grouped.mean().index,
            "score": grouped.mean().to_numpy(),
            "std": grouped.std(ddof=1).fillna(0.0).to_numpy(),
            "n": grouped.count().to_numpy(),
        }
    )
    return OpinionScores(kind=kind, table=table.reset_index(drop=True))


def process_scores(votes: pd.DataFrame):
    """Full DMOS pipeline on a raw vote table."""
    diffs = difference_scores(votes)
    zm = session_zscores(diffs)
    report = subject_rejection(zm)
    scores = rescale_to_dmos(zm, report.rejected, kind="dmos")
    return scores, report, zm


def compute_mos(votes: pd.DataFrame):
    """MOS variant: the identical pipeline on raw scores, references retained."""
    direct = votes.copy()
    direct["diff"] = direct["raw_score"].astype(float)
    zm = session_zscores(direct[["participant", "session", "stimulus_id", "content", "diff"]])
    report = subject_rejection(zm)
    scores = rescale_to_dmos(zm, report.rejected, kind="mos")
    return scores, report, zm


def split_half_srcc(zm: ZMatrix, rejected: set, iterations: int, seed: int) -> dict:
    """Inter-subject consistency: SRCC between random half-splits of subjects.

    Odd subject counts drop one subject at random per iteration (counted in
    the result).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    wide = zm.pivot()
    wide = wide[~wide.index.isin(rejected)]
    subjects = list(wide.index)
    if len(subjects) < 4:
        raise DegenerateDataError("need at least 4 accepted subjects to split")
    rng = np.random.default_rng(seed)
    values = []
    dropped = 0
    arr = rescale_z(wide.to_numpy())
    for _ in range(iterations):
        order = rng.permutation(len(subjects))
        if len(order) % 2:
            order = order[:-1]
            dropped += 1
        half = len(order) // 2
        ga = arr[order[:half]]
        gb = arr[order[half:]]
        with np.errstate(invalid="ignore"):
            mean_a = np.nanmean(ga, axis=0)
            mean_b = np.nanmean(gb, axis=0)
        ok = ~np.isnan(mean_a) & ~np.isnan(mean_b)
        values.append(srcc(mean_a[ok], mean_b[ok]))
    return {
        "median": float(np.median(values)),
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "iterations": iterations,
        "odd_drops": dropped,
    }
