#!/usr/bin/env python3
"""Benchmark a 16-frame 480x720 render job on the default synthetic scene.

Run from the repo root:

    python3 scripts/benchmark_render.py

Prints the per-stage timings and asserts the render stays under the 2 s
budget recorded in README.md.
"""

import time

from geoscaffold.pointmap import threshold_cloud
from geoscaffold.renderer import render_sequence
from geoscaffold.scene_synth import (
    SceneConfig,
    export_pointmap,
    generate_scene,
    gt_edit_track,
    make_trajectory,
)


def main() -> None:
    cfg = SceneConfig(width=720, height=480, n_frames=16)
    t0 = time.perf_counter()
    scene = generate_scene(0, cfg)
    traj = make_trajectory(cfg)
    pm = export_pointmap(scene, traj.poses[0], traj.intrinsics)
    track = gt_edit_track(scene, traj)
    cloud = threshold_cloud(pm, 0.65)
    setup = time.perf_counter() - t0
    print(f"scene + point map setup: {setup:.2f}s ({len(cloud)} points)")

    # warm-up, then timed render including the dynamic edit
    render_sequence(cloud, traj, edits=[track])
    t0 = time.perf_counter()
    frames = render_sequence(cloud, traj, edits=[track])
    elapsed = time.perf_counter() - t0
    print(f"render 16 frames 480x720 (with edit): {elapsed:.3f}s")
    assert len(frames) == 16
    assert elapsed < 2.0, f"render budget exceeded: {elapsed:.3f}s >= 2s"
    print("PASS: render job under 2s")


if __name__ == "__main__":
    main()
