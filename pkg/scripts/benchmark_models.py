#!/usr/bin/env python3
"""Benchmark objective quality models on a synthetic study.

Re-runs the seeded synthetic study in memory, computes PSNR and SSIM on
every rendered stimulus against its reference, evaluates them against DMOS
per temporal/spatial stratum, runs the pairwise F-test significance matrix,
and cross-validates an RBF regressor over the metric features content-wise.

Usage:
    python3 scripts/benchmark_models.py --out results/benchmark.json
        [--seed 0] [--cv-iterations 25]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from vqlab.bench import (
    CVConfig,
    ModelPrediction,
    contentwise_cv,
    logistic_residuals,
    significance_matrix,
    stratified_report,
)
from vqlab.ladder import ALL_CONFIGS, SpaceTimeConfig, StimulusSpec, SyntheticCodec, build_ladder, build_stimulus
from vqlab.metrics import psnr, ssim
from vqlab.scores import compute_mos, process_scores
from vqlab.synthetic import default_panel, make_source_clip, psnr_to_quality, simulate_votes


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--contents", type=int, default=4)
    parser.add_argument("--cv-iterations", type=int, default=25)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    manifest, quality, metric_rows = [], {}, []
    for c in range(args.contents):
        content = f"c{c:02d}"
        clip = make_source_clip(
            detail=float(rng.uniform(0.8, 1.4)),
            motion=float(rng.uniform(1.0, 4.0)),
            seed=args.seed * 101 + c,
        )
        fmt = clip.format
        driver = SyntheticCodec(
            r0_bps=float(rng.uniform(6e6, 12e6)),
            sigma0=6.0,
            ref_pixel_rate=fmt.width * fmt.height * fmt.fps,
        )
        ladder, _ = build_ladder(clip, content, driver)
        ref_id = f"{content}_ref"
        _, ref_entry = build_stimulus(
            clip, StimulusSpec(ref_id, content, SpaceTimeConfig("2160p", "full"), is_reference=True), driver
        )
        manifest.append(ref_entry)
        quality[ref_id] = 1.0
        for level in range(1, 6):
            for config in ALL_CONFIGS:
                sample = ladder.selections[(level, config.label)]
                sid = f"{content}_L{level}_{config.spatial}_{config.temporal}"
                spec = StimulusSpec(sid, content, config, qp=sample.qp, target_level=level)
                rendered, entry = build_stimulus(clip, spec, driver)
                entry["achieved_bitrate"] = sample.bitrate
                manifest.append(entry)
                p = psnr(clip, rendered, sid)
                s = ssim(clip, rendered, sid)
                quality[sid] = psnr_to_quality(p.pooled)
                metric_rows.append({
                    "stimulus_id": sid, "content": content,
                    "spatial": config.spatial, "temporal": config.temporal,
                    "psnr": p.pooled, "ssim": s.pooled,
                })

    votes = simulate_votes(manifest, quality, default_panel(seed=args.seed), seed=args.seed)
    dmos, _, _ = process_scores(votes)
    mos, _, _ = compute_mos(votes)
    dmos_series = dmos.as_series()
    mos_series = mos.as_series()

    metric_rows.sort(key=lambda r: r["stimulus_id"])
    dmos_vec = np.array([dmos_series[r["stimulus_id"]] for r in metric_rows])
    mos_vec = np.array([mos_series[r["stimulus_id"]] for r in metric_rows])
    temporal = [r["temporal"] for r in metric_rows]
    spatial = [r["spatial"] for r in metric_rows]
    models = [
        ModelPrediction("psnr", "reference", np.array([r["psnr"] for r in metric_rows])),
        ModelPrediction("ssim", "reference", np.array([r["ssim"] for r in metric_rows])),
    ]

    report = stratified_report(models, dmos_vec, mos_vec, temporal, spatial)
    tables = {
        name: {stratum: res.to_json() for stratum, res in per_model.items()}
        for name, per_model in report["results"].items()
    }

    residuals = {}
    masks = {"overall": np.ones(len(metric_rows), dtype=bool)}
    for mode in ("half", "full"):
        masks[mode] = np.array([t == mode for t in temporal])
    for res in ("540p", "720p", "1080p", "2160p"):
        masks[res] = np.array([s == res for s in spatial])
    for model in models:
        residuals[model.name] = {
            stratum: logistic_residuals(model.values[mask], dmos_vec[mask])
            for stratum, mask in masks.items()
            if mask.sum() >= 5 and np.std(model.values[mask]) > 0
        }
    significance = significance_matrix(residuals)

    features = np.column_stack([
        [r["psnr"] for r in metric_rows],
        [r["ssim"] for r in metric_rows],
    ])
    contents = [r["content"] for r in metric_rows]
    cv = contentwise_cv(
        features, dmos_vec, contents,
        CVConfig(
            folds=min(4, args.contents),
            iterations=args.cv_iterations,
            seed=args.seed,
            c_grid=[1.0, 100.0],
            gamma_grid=[0.01, 0.1, 1.0],
            epsilon_grid=[0.1],
        ),
        strata=temporal,
    )

    payload = {
        "stratified": tables,
        "best": report["best"],
        "significance_matrix": significance,
        "contentwise_cv": cv,
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    overall = tables["psnr"].get("overall", {})
    print(f"psnr overall: {overall}")
    print(f"cv overall median srcc: {cv['overall']['srcc']['median']:.4f}")
    print(f"report -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
