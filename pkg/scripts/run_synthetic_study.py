#!/usr/bin/env python3
"""Run the full desk-scale synthetic study and write its artifacts.

Generates textured source contents, ladders and renders every space-time
configuration through the synthetic codec, simulates the subject panel,
processes votes into DMOS, and exports RD curves plus the spatial-only and
space-time hulls.

Usage:
    python3 scripts/run_synthetic_study.py --out results/ [--seed 0]
        [--contents 4] [--width 192] [--height 108] [--frames 24]
"""

import argparse
import json
from pathlib import Path

from vqlab.design import build_study_playlists
from vqlab.errors import DesignInfeasibleError
from vqlab.hull import compare_hulls
from vqlab.scores import split_half_srcc, session_zscores, difference_scores
from vqlab.server import write_study_dir
from vqlab.synthetic import run_synthetic_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--contents", type=int, default=4)
    parser.add_argument("--width", type=int, default=192)
    parser.add_argument("--height", type=int, default=108)
    parser.add_argument("--frames", type=int, default=24)
    parser.add_argument(
        "--study-participants", type=int, default=0,
        help="also write a servable study dir (manifest + playlists) for N live participants",
    )
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    study = run_synthetic_study(
        n_contents=args.contents,
        width=args.width,
        height=args.height,
        frames=args.frames,
        seed=args.seed,
    )

    with open(args.out / "manifest.json", "w") as fh:
        json.dump(study.manifest, fh, indent=2)
    study.votes.to_csv(args.out / "votes.csv", index=False)
    study.dmos.write_csv(args.out / "dmos.csv")
    with open(args.out / "rejection.json", "w") as fh:
        json.dump(study.rejection.to_json(), fh, indent=2)

    zm = session_zscores(difference_scores(study.votes))
    consistency = split_half_srcc(zm, study.rejection.rejected, iterations=100, seed=args.seed)

    curves = {label: curve.to_json() for label, curve in study.curves.items()}
    payload = {
        "curves": curves,
        "spatial_hull": study.spatial_hull.to_json(),
        "spacetime_hull": study.spacetime_hull.to_json(),
        "fixed_2160p_full": study.fixed_curve.to_json(),
        "hull_comparison": compare_hulls(
            [study.spacetime_hull, study.spatial_hull, study.fixed_curve]
        ),
        "split_half_srcc": consistency,
    }
    with open(args.out / "rd_analysis.json", "w") as fh:
        json.dump(payload, fh, indent=2)

    if args.study_participants > 0:
        stimuli = [
            (e["stimulus_id"], e["content"])
            for e in study.manifest if not e["is_reference"]
        ]
        references = [
            (e["stimulus_id"], e["content"])
            for e in study.manifest if e["is_reference"]
        ]
        try:
            _, playlists = build_study_playlists(
                stimuli, references, participants=args.study_participants, seed=args.seed
            )
        except DesignInfeasibleError as exc:
            # few contents -> one content owns too much of a session for the
            # >=4 spacing; more contents fixes it
            raise SystemExit(
                f"cannot build playlists: {exc}\n"
                f"(a servable study needs more contents; try --contents 8 or more)"
            )
        media_paths = {
            e["stimulus_id"]: f"/media/{e['stimulus_id']}.yuv" for e in study.manifest
        }
        write_study_dir(
            args.out / "study",
            study.manifest,
            [pl.to_json(media_paths) for pl in playlists.values()],
        )
        print(f"servable study dir for {args.study_participants} participants "
              f"in {args.out}/study/ (media not rendered to disk)")

    print(f"{len(study.manifest)} stimuli, "
          f"{len(study.votes)} votes, "
          f"rejected subjects: {sorted(study.rejection.rejected)}")
    print(f"split-half SRCC median {consistency['median']:.3f}")
    print(f"artifacts in {args.out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
