"""Self-describing checkpoint container.

Layout: magic "GSCK", u32 little-endian header length, UTF-8 JSON header,
then the named float32 parameter blobs in header order. The header lists
the model config and each parameter's name and shape.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from ..errors import BadMagic, TruncatedFile
from .model import ConditionedDiT, DiTBackbone, DiTConfig

MAGIC = b"GSCK"
CHECKPOINT_SCHEMA_VERSION = 1


def save_checkpoint(model: ConditionedDiT, path: str | Path) -> None:
    state = model.state_dict()
    names = sorted(state.keys())
    header = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "config": asdict(model.cfg),
        "params": [{"name": n, "shape": list(state[n].shape)} for n in names],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for n in names:
            f.write(
                np.ascontiguousarray(
                    state[n].detach().cpu().numpy(), dtype="<f4"
                ).tobytes()
            )


def load_checkpoint(path: str | Path) -> ConditionedDiT:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {data[:4]!r}")
    (hlen,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + hlen:
        raise TruncatedFile("checkpoint header truncated")
    header = json.loads(data[8 : 8 + hlen].decode("utf-8"))
    cfg = DiTConfig(**header["config"])
    model = ConditionedDiT(DiTBackbone(cfg))
    state = {}
    off = 8 + hlen
    for entry in header["params"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = 4 * count
        if len(data) < off + nbytes:
            raise TruncatedFile(f"blob for {entry['name']} truncated")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=off)
        state[entry["name"]] = torch.from_numpy(
            arr.reshape(entry["shape"]).copy()
        )
        off += nbytes
    model.load_state_dict(state)
    return model
