"""Single-file model checkpoints.

Layout: one JSON header line (model kind, config, seed, epoch, dev AUC, and
an ordered tensor manifest of (name, shape) pairs) terminated by a newline,
followed by the named tensors as little-endian float32 in manifest order.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError


def save_checkpoint(
    path: Path,
    kind: str,
    config: dict,
    seed: int,
    epoch: int,
    dev_auc: float,
    tensors: dict[str, np.ndarray],
) -> None:
    names = sorted(tensors)
    header = {
        "format": "humorkit-checkpoint-v1",
        "kind": kind,
        "config": config,
        "seed": seed,
        "epoch": epoch,
        "dev_auc": dev_auc,
        "tensors": [[name, list(tensors[name].shape)] for name in names],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for name in names:
            fh.write(np.ascontiguousarray(tensors[name], dtype="<f4").tobytes())


def load_checkpoint(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"{path}: malformed checkpoint header: {exc}") from exc
        if header.get("format") != "humorkit-checkpoint-v1":
            raise ValidationError(f"{path}: unknown checkpoint format {header.get('format')!r}")
        tensors: dict[str, np.ndarray] = {}
        for name, shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise ValidationError(f"{path}: truncated tensor {name}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        if fh.read(1):
            raise ValidationError(f"{path}: trailing bytes after last tensor")
    return header, tensors
