"""HTTP session server: serves playlists to the scoring UI, collects votes,
and exports the raw score matrix.

A study directory holds ``manifest.json`` (the stimulus manifest, including
reference flags kept server-side only), ``playlists.json`` (one entry per
participant-session), optional media files, and the append-only vote log
``votes.jsonl``. Votes are fsynced before acknowledgment, so no
acknowledged vote is lost across a restart; server state is rebuilt from
the log on startup.

The subject-facing payloads never carry reference-identifying fields.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

SESSIONS = (1, 2, 3)
SCORE_MIN, SCORE_MAX = 0, 39
GATING_HOURS = 24.0

EXPORT_COLUMNS = (
    "participant", "session", "stimulus_id", "content",
    "is_reference", "raw_score", "timestamp",
)


class Vote(BaseModel):
    participant: int
    session: int
    stimulus_id: str
    raw_score: int = Field(ge=SCORE_MIN, le=SCORE_MAX)
    timestamp: float | None = None


class VoteLog:
    """Append-only JSON-lines log with write-ahead durability."""

    def __init__(self, path: Path):
        self.path = path

    def append(self, record: dict) -> None:
        with open(self.path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records


class StudyState:
    def __init__(self, study_dir: Path):
        self.study_dir = Path(study_dir)
        with open(self.study_dir / "manifest.json") as fh:
            manifest = json.load(fh)
        self.manifest = {e["stimulus_id"]: e for e in manifest}
        with open(self.study_dir / "playlists.json") as fh:
            playlists = json.load(fh)
        self.playlists: dict[tuple[int, int], dict] = {
            (int(p["participant"]), int(p["session"])): p for p in playlists
        }
        self.log = VoteLog(self.study_dir / "votes.jsonl")
        self.votes: dict[tuple[int, int, str], dict] = {}
        self.progress: dict[tuple[int, int], int] = {}
        self.last_vote_time: dict[tuple[int, int], float] = {}
        for record in self.log.load():
            self._absorb(record)

    def _absorb(self, record: dict) -> None:
        key = (record["participant"], record["session"], record["stimulus_id"])
        self.votes[key] = record
        pk = key[:2]
        self.progress[pk] = self.progress.get(pk, 0) + 1
        self.last_vote_time[pk] = max(
            self.last_vote_time.get(pk, 0.0), record["timestamp"]
        )

    def participants(self) -> set[int]:
        return {p for p, _ in self.playlists}

    def playlist_items(self, participant: int, session: int) -> list[str]:
        entry = self.playlists[(participant, session)]
        return [item["stimulus_id"] for item in entry["items"]]

    def session_complete(self, participant: int, session: int) -> bool:
        items = self.playlist_items(participant, session)
        return self.progress.get((participant, session), 0) >= len(items)

    def record_vote(self, vote: Vote) -> dict:
        record = {
            "participant": vote.participant,
            "session": vote.session,
            "stimulus_id": vote.stimulus_id,
            "raw_score": vote.raw_score,
            "timestamp": vote.timestamp if vote.timestamp is not None else time.time(),
            "position": self.progress.get((vote.participant, vote.session), 0),
        }
        self.log.append(record)  # durable before acknowledgment
        self._absorb(record)
        return record


def create_app(
    study_dir: str | Path,
    enforce_gating: bool = False,
    gating_hours: float = GATING_HOURS,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    state = StudyState(Path(study_dir))
    app = FastAPI(title="vqlab session server")
    app.state.study = state

    @app.get("/api/participants/{participant}/sessions/{session}/playlist")
    def get_playlist(participant: int, session: int):
        if session not in SESSIONS:
            raise HTTPException(404, f"session {session} does not exist; sessions are 1..3")
        if (participant, session) not in state.playlists:
            raise HTTPException(404, f"participant {participant} is not registered")
        if session > 1:
            prev = (participant, session - 1)
            if not state.session_complete(*prev):
                raise HTTPException(
                    412, f"session {session - 1} must be completed first"
                )
            if enforce_gating:
                elapsed = time.time() - state.last_vote_time.get(prev, 0.0)
                if elapsed < gating_hours * 3600.0:
                    raise HTTPException(
                        412,
                        f"sessions must be separated by at least {gating_hours} hours",
                    )
        entry = state.playlists[(participant, session)]
        items = [
            {"stimulus_id": item["stimulus_id"], "media_path": item.get("media_path")}
            for item in entry["items"]
        ]
        return {
            "participant": participant,
            "session": session,
            "position": state.progress.get((participant, session), 0),
            "items": items,
        }

    @app.post("/api/votes")
    def post_vote(vote: Vote):
        key = (vote.participant, vote.session)
        if key not in state.playlists:
            raise HTTPException(404, "unknown participant or session")
        items = state.playlist_items(*key)
        if (vote.participant, vote.session, vote.stimulus_id) in state.votes:
            raise HTTPException(409, f"duplicate vote for {vote.stimulus_id}")
        position = state.progress.get(key, 0)
        if position >= len(items):
            raise HTTPException(409, "session already complete")
        expected = items[position]
        if vote.stimulus_id != expected:
            raise HTTPException(
                409,
                f"out-of-order vote: expected item at position {position}, "
                f"got {vote.stimulus_id}",
            )
        record = state.record_vote(vote)
        return {
            "status": "accepted",
            "position": record["position"] + 1,
            "remaining": len(items) - record["position"] - 1,
        }

    @app.get("/api/export.csv", response_class=PlainTextResponse)
    def export_csv():
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(EXPORT_COLUMNS)
        records = sorted(
            state.votes.values(),
            key=lambda r: (r["participant"], r["session"], r["position"]),
        )
        for r in records:
            entry = state.manifest.get(r["stimulus_id"], {})
            writer.writerow([
                r["participant"],
                r["session"],
                r["stimulus_id"],
                entry.get("content", ""),
                entry.get("is_reference", False),
                r["raw_score"],
                r["timestamp"],
            ])
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    media_dir = Path(study_dir) / "media"
    if media_dir.is_dir():
        app.mount("/media", StaticFiles(directory=media_dir), name="media")
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def write_study_dir(
    study_dir: str | Path,
    manifest: list[dict],
    playlists: list[dict],
) -> Path:
    """Materialize a study directory consumable by the server."""
    study_dir = Path(study_dir)
    study_dir.mkdir(parents=True, exist_ok=True)
    with open(study_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    with open(study_dir / "playlists.json", "w") as fh:
        json.dump(playlists, fh, indent=2)
    return study_dir
