#!/usr/bin/env python3
"""Regenerate the byte-level fixtures the studio UI tests compare against.

Run from the repo root:

    python3 scripts/gen_frontend_fixtures.py

Writes frontend/tests/fixtures/: a canonical render-request body produced
by the `request-body` CLI for a curved synthetic scene (with and without
edits), and a float-formatting table mapping doubles (as hex bit patterns)
to their server-side JSON serialization.
"""

import io
import json
import math
import struct
import sys
import tempfile
from contextlib import redirect_stdout
from pathlib import Path

from geoscaffold.cli import main as cli

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def capture(argv: list[str]) -> str:
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli(argv)
    assert code == 0, argv
    return buf.getvalue()


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        scene = Path(tmp) / "scene"
        capture([
            "synth", "--seed", "7", "--out", str(scene),
            "--config", _write_config(Path(tmp) / "cfg.json"),
        ])
        traj = scene / "trajectory.json"
        tracks = scene / "tracks.json"
        (FIXTURES / "request_body_with_edits.json").write_text(
            capture(["request-body", "--traj", str(traj), "--edits", str(tracks)])
        )
        (FIXTURES / "request_body_no_edits.json").write_text(
            capture(["request-body", "--traj", str(traj), "--tau", "0.5",
                     "--splat-radius", "1"])
        )
        (FIXTURES / "trajectory.json").write_text(traj.read_text())
        (FIXTURES / "tracks.json").write_text(tracks.read_text())

    # float formatting table: hex bit pattern -> json.dumps output
    values = [
        0.0, -0.0, 1.0, -1.0, 0.5, 0.65, 0.1, 100.0, 1.5, -2.5,
        math.pi, -math.pi, 1 / 3, 2 / 3, 0.1 + 0.2,
        1e-4, 9.999e-5, 1e-5, 1.2e-5, -1.2e-5, 1e-7,
        1e15, 1e16, 1.5e16, 1e17, 123456789.123456789,
        5e-324, 1.7976931348623157e308, 2.2250738585072014e-308,
        0.9999999999999999, 1.0000000000000002,
        -0.7071067811865476, 0.7071067811865475,
        math.sin(0.1), math.cos(0.1), -math.sin(1e-3),
        256.0, 1024.5, -0.001953125, 3.0517578125e-05,
    ]
    # "canon" is the serialization after integral-float -> int conversion,
    # i.e. what the canonical request body contains
    table = [
        {
            "bits": struct.pack(">d", v).hex(),
            "json": json.dumps(v),
            "canon": json.dumps(int(v) if v.is_integer() else v),
        }
        for v in values
    ]
    (FIXTURES / "float_table.json").write_text(json.dumps(table, indent=2))
    print(f"wrote fixtures to {FIXTURES}", file=sys.stderr)


def _write_config(path: Path) -> str:
    path.write_text(json.dumps({"camera_style": "curved", "n_frames": 8}))
    return str(path)


if __name__ == "__main__":
    main()
