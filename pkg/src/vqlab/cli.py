"""Command-line front end.

Subcommands: conform, features, ladder, metrics, process-scores, hull,
serve. Each wraps the corresponding library call; media always travels as
raw planar YUV plus a JSON sidecar.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import bench, hull as hull_mod
from .clips import ClipFormat, read_clip, read_sidecar, write_clip
from .clips import conform_source
from .features import compute_features
from .ladder import (
    ALL_CONFIGS,
    CommandCodec,
    SpaceTimeConfig,
    StimulusSpec,
    SyntheticCodec,
    build_ladder,
    build_stimulus,
)
from .metrics import METRIC_FUNCTIONS
from .scores import compute_mos, load_votes, process_scores, split_half_srcc


def _cmd_conform(args) -> int:
    clip = read_clip(args.infile, args.meta)
    src = clip.format
    target = ClipFormat(
        width=args.width,
        height=args.height,
        fps=src.fps,
        bit_depth=src.bit_depth,
        chroma="420",
        frame_count=src.frame_count,
    )
    out = conform_source(clip, target)
    write_clip(out, args.out, sidecar=str(args.out) + ".json")
    print(f"wrote {args.out} ({target.width}x{target.height}, {target.frame_count} frames)")
    return 0


def _cmd_features(args) -> int:
    clip = read_clip(args.infile, args.meta)
    feats = compute_features(clip)
    json.dump(feats.to_json(), sys.stdout, indent=2)
    print()
    return 0


def _make_driver(spec: str, clip_format: ClipFormat) -> object:
    if spec == "synthetic":
        return SyntheticCodec(
            r0_bps=8e6,
            ref_pixel_rate=clip_format.width * clip_format.height * clip_format.fps,
        )
    if spec.startswith("cmd:"):
        parts = spec[len("cmd:"):].split("::")
        encode = parts[0]
        decode = parts[1] if len(parts) > 1 else None
        return CommandCodec(encode, decode)
    raise SystemExit(f"unknown driver {spec!r} (use 'synthetic' or 'cmd:ENCODE[::DECODE]')")


def _cmd_ladder(args) -> int:
    clip = read_clip(args.infile, args.meta)
    driver = _make_driver(args.driver, clip.format)
    ladder, _ = build_ladder(clip, args.content, driver)
    media_dir = Path(args.media_dir)
    media_dir.mkdir(parents=True, exist_ok=True)
    manifest = []

    def render(spec: StimulusSpec):
        rendered, entry = build_stimulus(clip, spec, driver)
        media_path = media_dir / f"{spec.stimulus_id}.yuv"
        write_clip(rendered, media_path, sidecar=str(media_path) + ".json")
        entry["media_path"] = str(media_path)
        manifest.append(entry)

    render(StimulusSpec(f"{args.content}_ref", args.content,
                        SpaceTimeConfig("2160p", "full"), is_reference=True))
    rendered_qps: dict[str, set] = {}
    for level in range(1, 6):
        for config in ALL_CONFIGS:
            sample = ladder.selections[(level, config.label)]
            if sample.qp in rendered_qps.setdefault(config.label, set()):
                continue  # this config cannot separate these targets
            rendered_qps[config.label].add(sample.qp)
            sid = f"{args.content}_L{level}_{config.spatial}_{config.temporal}"
            spec = StimulusSpec(sid, args.content, config, qp=sample.qp, target_level=level)
            render(spec)
    with open(args.out, "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"ladder targets (bps): {[round(t) for t in ladder.targets]}")
    print(f"wrote {len(manifest)} stimuli to {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    ref = read_clip(args.ref, args.meta)
    dist = read_clip(args.dist, args.dist_meta or args.meta)
    rows = []
    for name in args.metrics.split(","):
        name = name.strip()
        if name not in METRIC_FUNCTIONS:
            raise SystemExit(f"unknown metric {name!r}; choose from {sorted(METRIC_FUNCTIONS)}")
        score = METRIC_FUNCTIONS[name](ref, dist, stimulus_id=args.stimulus_id)
        rows.append({"stimulus_id": score.stimulus_id, "metric": score.metric,
                     "value": score.pooled})
    frame = pd.DataFrame(rows)
    if args.out:
        frame.to_csv(args.out, index=False)
    else:
        frame.to_csv(sys.stdout, index=False)
    return 0


def _cmd_process_scores(args) -> int:
    votes = load_votes(args.infile)
    scores, report, zm = process_scores(votes)
    scores.write_csv(args.out)
    with open(args.report, "w") as fh:
        json.dump(report.to_json(), fh, indent=2)
    if args.mos:
        mos, _, _ = compute_mos(votes)
        mos.write_csv(args.mos)
    if args.split_half:
        result = split_half_srcc(zm, report.rejected, iterations=args.split_half, seed=0)
        print(f"split-half SRCC median {result['median']:.3f} "
              f"range [{result['min']:.3f}, {result['max']:.3f}]")
    print(f"{len(scores.table)} stimuli scored; rejected subjects: {sorted(report.rejected)}")
    return 0


def _cmd_hull(args) -> int:
    dmos = pd.read_csv(args.dmos)
    value_col = "dmos" if "dmos" in dmos.columns else "score"
    scores = dmos.set_index("stimulus_id")[value_col]
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    configs = ALL_CONFIGS if args.configs == "spacetime" else [
        c for c in ALL_CONFIGS if c.temporal == "full"
    ]
    curves = []
    for config in configs:
        try:
            curves.append(
                hull_mod.aggregate_curve(
                    scores, manifest, spatial=config.spatial, temporal=config.temporal
                )
            )
        except ValueError:
            continue
    if not curves:
        raise SystemExit("no stimuli matched any configuration")
    points = [p for c in curves for p in c.points]
    frontier = hull_mod.convex_hull_quality(points, label=f"{args.configs}-hull")
    payload = {
        "curves": [c.to_json() for c in curves],
        "hull": frontier.to_json(),
    }
    if len(curves) >= 2:
        payload["comparison"] = hull_mod.compare_hulls([frontier] + curves)
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"hull with {len(frontier.points)} vertices -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(
        args.study_dir,
        enforce_gating=args.enforce_gating,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conform", help="center-crop and chroma-convert a source clip")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.set_defaults(func=_cmd_conform)

    p = sub.add_parser("features", help="SI/TI/colorfulness of a clip")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--meta", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("ladder", help="probe, pick targets, render the stimulus set")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--content", required=True)
    p.add_argument("--driver", default="synthetic")
    p.add_argument("--media-dir", default="media")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ladder)

    p = sub.add_parser("metrics", help="objective metrics on a ref/dist clip pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--dist-meta")
    p.add_argument("--metrics", default="psnr,ssim,msssim")
    p.add_argument("--stimulus-id", default="")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("process-scores", help="raw votes -> DMOS + rejection report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--mos")
    p.add_argument("--split-half", type=int, default=0)
    p.set_defaults(func=_cmd_process_scores)

    p = sub.add_parser("hull", help="RD curves and the adaptation hull")
    p.add_argument("--dmos", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--configs", choices=("spatial", "spacetime"), default="spacetime")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_hull)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--study-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--enforce-gating", action="store_true")
    p.add_argument("--ui", help="directory with the scoring UI bundle")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
