"""Per-run manifests: input hashes, configuration, seed, tool version."""

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    subcommand: str,
    config: dict,
    inputs: list[Path],
    outputs: list[Path],
    seed: int | None = None,
) -> Path:
    """Write manifest-<subcommand>.json next to the outputs.

    The created_utc timestamp is the only non-reproducible field; consumers
    comparing runs should exclude manifest files or that key.
    """
    manifest = {
        "tool": "humorkit",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "inputs": {str(p): sha256_file(Path(p)) for p in sorted(map(str, inputs))},
        "outputs": sorted(str(p) for p in outputs),
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    path = out_dir / f"manifest-{subcommand}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
