"""Model-ready datasets: leave-one-subject-out splits and style labels."""

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gold import SegmentTable

ROLES = ("train", "dev", "test")

SegmentKey = tuple[str, str, int]


@dataclass
class ModelDataset:
    """Segment keys with labels and (optionally) train/dev/test roles."""

    keys: list[SegmentKey]
    labels: np.ndarray
    roles: np.ndarray | None = None
    held_out_coach: str | None = None

    def __len__(self) -> int:
        return len(self.keys)

    def indices(self, role: str) -> np.ndarray:
        if self.roles is None:
            raise ValidationError("dataset has no split roles")
        return np.flatnonzero(self.roles == role)


def loso_split(
    table: SegmentTable, held_out: str, dev_fraction: float = 0.2, seed: int = 0
) -> ModelDataset:
    """Assign the held-out coach to test and shuffle the rest into train/dev.

    The dev split takes floor(dev_fraction * n_remaining) segments from the
    seeded shuffle; everything else is train. Deterministic given the seed.
    """
    coaches = set(table.coach_id)
    if held_out not in coaches:
        raise ValidationError(f"unknown coach {held_out!r}")
    if not 0 < dev_fraction < 1:
        raise ValidationError("dev_fraction must be in (0, 1)")
    keys = table.keys
    roles = np.array(["train"] * len(table), dtype=object)
    test = table.coach_id == held_out
    roles[test] = "test"
    rest = np.flatnonzero(~test)
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(rest)
    n_dev = int(dev_fraction * len(rest))
    roles[shuffled[:n_dev]] = "dev"
    return ModelDataset(
        keys=keys,
        labels=table.humor.astype(np.int64),
        roles=roles,
        held_out_coach=held_out,
    )


def style_dataset(table: SegmentTable, dimension: str) -> ModelDataset:
    """Humorous segments labeled {-1, +1} by the sign of one dimension.

    Segments whose pooled value is exactly 0 carry no sign and are excluded
    with a warning.
    """
    if dimension not in ("sentiment", "direction"):
        raise ValidationError(f"unknown dimension {dimension!r}")
    values = getattr(table, dimension)
    humorous = table.humor == 1
    if not np.any(humorous):
        raise ValidationError("no humorous segments; style dataset would be empty")
    zero_valued = humorous & (values == 0)
    if np.any(zero_valued):
        warnings.warn(
            f"excluding {int(zero_valued.sum())} humorous segments with {dimension} == 0"
        )
    keep = humorous & (values != 0)
    keys = [k for k, take in zip(table.keys, keep) if take]
    labels = np.sign(values[keep]).astype(np.int64)
    return ModelDataset(keys=keys, labels=labels, roles=None, held_out_coach=None)


def write_split_csv(path: Path, dataset: ModelDataset) -> None:
    if dataset.roles is None:
        raise ValidationError("dataset has no split roles to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coach_id", "video_id", "segment_index", "role"])
        for (coach, video, idx), role in zip(dataset.keys, dataset.roles):
            writer.writerow([coach, video, idx, role])


def read_split_csv(path: Path) -> dict[SegmentKey, str]:
    out: dict[SegmentKey, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["coach_id", "video_id", "segment_index", "role"]:
            raise ValidationError(f"{path}: unexpected split header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4 or row[3] not in ROLES:
                raise ValidationError(f"{path}:{lineno}: malformed split row")
            out[(row[0], row[1], int(row[2]))] = row[3]
    return out
