#!/usr/bin/env python3
"""End-to-end demo: synthesize a scene, render along a shifted trajectory
with a dynamic-object edit, train the toy refiner, refine the renders, and
report metrics. Everything goes through the public CLI so the script doubles
as usage documentation.

    python3 scripts/run_pipeline.py --out /tmp/pipeline [--fast]

--fast shrinks training to a smoke-test size (a few seconds); the default
settings take a few minutes on CPU.
"""

import argparse
import sys
from pathlib import Path

from geoscaffold.cli import main as cli


def run(argv: list[str]) -> None:
    print("$ geoscaffold " + " ".join(argv))
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="/tmp/geoscaffold-pipeline")
    ap.add_argument("--fast", action="store_true", help="tiny training run")
    args = ap.parse_args()
    out = Path(args.out)

    scene = out / "scene"
    run(["synth", "--seed", "0", "--out", str(scene)])

    frames = out / "frames"
    run([
        "render",
        "--pointmap", str(scene / "pointmap.gpm1"),
        "--traj", str(scene / "trajectory.json"),
        "--edits", str(scene / "tracks.json"),
        "--out", str(frames),
    ])

    ckpt = out / "toy.gsck"
    train_args = ["train-toy", "--data", str(out / "clips"), "--out", str(ckpt)]
    if args.fast:
        train_args += ["--clips", "8", "--steps", "50", "--pretrain-steps", "50"]
    run(train_args)

    refined = out / "refined"
    run(["refine", "--ckpt", str(ckpt), "--renders", str(frames),
         "--out", str(refined)])

    run([
        "evaluate",
        "--gt", str(frames),
        "--pred", str(refined),
        "--gt-traj", str(scene / "trajectory.json"),
        "--pred-traj", str(scene / "trajectory.json"),
    ])


if __name__ == "__main__":
    main()
