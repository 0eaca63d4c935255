import json

import numpy as np
import pandas as pd
import pytest

from vqlab.cli import main
from vqlab.clips import read_clip, write_clip
from vqlab.scores import load_votes
from vqlab.synthetic import default_panel, simulate_votes, synthetic_manifest

from conftest import make_clip


@pytest.fixture
def clip_on_disk(tmp_path):
    clip = make_clip(width=128, height=64, frames=4, fps=60.0, bit_depth=10)
    raw = tmp_path / "src.yuv"
    write_clip(clip, raw, sidecar=tmp_path / "src.json")
    return clip, raw, tmp_path / "src.json"


def test_conform_roundtrip(tmp_path, clip_on_disk, capsys):
    clip, raw, meta = clip_on_disk
    out = tmp_path / "conformed.yuv"
    rc = main(["conform", "--in", str(raw), "--meta", str(meta),
               "--out", str(out), "--width", "96", "--height", "48"])
    assert rc == 0
    back = read_clip(out, str(out) + ".json")
    assert (back.format.width, back.format.height) == (96, 48)


def test_features_emits_json(clip_on_disk, capsys):
    _, raw, meta = clip_on_disk
    assert main(["features", "--in", str(raw), "--meta", str(meta)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"si", "ti", "cf"}


def test_ladder_writes_manifest_and_media(tmp_path, clip_on_disk, capsys):
    _, raw, meta = clip_on_disk
    out = tmp_path / "manifest.json"
    rc = main(["ladder", "--in", str(raw), "--meta", str(meta), "--content", "c0",
               "--media-dir", str(tmp_path / "media"), "--out", str(out)])
    assert rc == 0
    manifest = json.loads(out.read_text())
    refs = [e for e in manifest if e["is_reference"]]
    assert len(refs) == 1
    assert all((tmp_path / "media").glob("*.yuv"))
    sample = read_clip(manifest[1]["media_path"], manifest[1]["media_path"] + ".json")
    assert (sample.format.width, sample.format.height) == (128, 64)


def test_metrics_cli(tmp_path, clip_on_disk, capsys):
    _, raw, meta = clip_on_disk
    rc = main(["metrics", "--ref", str(raw), "--dist", str(raw),
               "--meta", str(meta), "--metrics", "psnr,ssim", "--stimulus-id", "x"])
    assert rc == 0
    out = capsys.readouterr().out
    frame = pd.read_csv(pd.io.common.StringIO(out))
    assert frame.loc[frame["metric"] == "psnr", "value"].iloc[0] == 100.0
    assert frame.loc[frame["metric"] == "ssim", "value"].iloc[0] == 1.0


def test_process_scores_and_hull(tmp_path, capsys):
    manifest, quality = synthetic_manifest(n_contents=6, per_content=15, seed=1)
    votes = simulate_votes(manifest, quality, default_panel(10, 1, seed=1), seed=1)
    votes_path = tmp_path / "votes.csv"
    votes.to_csv(votes_path, index=False)
    dmos_path = tmp_path / "dmos.csv"
    report_path = tmp_path / "rejection.json"
    rc = main(["process-scores", "--in", str(votes_path), "--out", str(dmos_path),
               "--report", str(report_path), "--split-half", "5"])
    assert rc == 0
    table = pd.read_csv(dmos_path)
    assert set(table.columns) == {"stimulus_id", "dmos", "dmos_std", "n_subjects"}
    assert len(table) == 90
    report = json.loads(report_path.read_text())
    assert "rejected" in report

    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps(manifest))
    hull_path = tmp_path / "hull.json"
    rc = main(["hull", "--dmos", str(dmos_path), "--manifest", str(manifest_path),
               "--configs", "spacetime", "--out", str(hull_path)])
    assert rc == 0
    payload = json.loads(hull_path.read_text())
    assert payload["hull"]["points"]
