"""Sample pools and the windowed-minimum estimator.

A pool is the list of makespans from P rollouts, ordered by rollout index,
plus the provenance needed to regenerate it.  The estimator answers "what
would the best-of-s makespan have been, on average?" without re-sampling:
split the pool into floor(P/s) disjoint windows of size s, take each
window's minimum, and average those minima.  Any remainder entries are
discarded so every window has exactly s entries.

Pools persist as a two-column CSV (``index,makespan``) with a JSON sidecar
at ``<path>.json`` carrying the provenance fields.  Writes go through a
temp file and an atomic rename, and the sidecar is serialized with sorted
keys, so identical pools always produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .sampling import SampleBatch, SamplingConfig


@dataclass(frozen=True)
class SamplePool:
    """Rollout makespans in index order, with their reproduction recipe."""

    makespans: tuple[int, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "makespans", tuple(int(m) for m in self.makespans))
        if len(self.makespans) == 0:
            raise ValueError("a sample pool must contain at least one makespan")
        for index, makespan in enumerate(self.makespans):
            if makespan < 1:
                raise ValueError(f"makespan at index {index} is {makespan}, expected >= 1")

    @classmethod
    def from_batch(cls, batch: SampleBatch, config: SamplingConfig) -> "SamplePool":
        return cls(makespans=batch.makespans,
                   provenance=config.provenance(batch.instance_id))

    @property
    def size(self) -> int:
        return len(self.makespans)


def _pool_values(pool) -> tuple[int, ...]:
    if isinstance(pool, SamplePool):
        return pool.makespans
    return tuple(pool)


def windowed_min_mean(pool, s: int) -> float:
    """Mean of the minima of the floor(P/s) disjoint size-s windows.

    Accepts a SamplePool or any sequence of makespans.  Entries past the
    last full window are ignored.
    """
    values = _pool_values(pool)
    size = len(values)
    if s < 1:
        raise ValueError(f"window size must be >= 1, got {s}")
    if s > size:
        raise ValueError(f"window size {s} exceeds pool size {size}")
    windows = size // s
    total = 0
    for i in range(windows):
        total += min(values[s * i:s * (i + 1)])
    return total / windows


def estimate_curve(pool, sizes) -> list[tuple[int, float]]:
    """(s, windowed_min_mean) per requested size; sizes must be ascending."""
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ValueError("at least one sample size is required")
    for previous, current in zip(sizes, sizes[1:]):
        if current <= previous:
            raise ValueError(f"sizes must be strictly ascending, got {sizes}")
    return [(s, windowed_min_mean(pool, s)) for s in sizes]


def write_text_atomic(path, text: str) -> None:
    """Write a file via temp-and-rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except BaseException:
        try:
            os.unlink(temp_name)
        except OSError:
            pass
        raise


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_pool(pool: SamplePool, path) -> None:
    """Persist a pool as CSV plus its JSON provenance sidecar."""
    lines = ["index,makespan"]
    lines.extend(f"{index},{makespan}" for index, makespan in enumerate(pool.makespans))
    write_text_atomic(path, "\n".join(lines) + "\n")
    manifest = json.dumps(pool.provenance, sort_keys=True, indent=2) + "\n"
    write_text_atomic(sidecar_path(path), manifest)


def read_pool(path) -> SamplePool:
    """Load a pool CSV; provenance comes from the sidecar when present."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header != ["index", "makespan"]:
            raise ValueError(f"{path}: expected header 'index,makespan', got {header!r}")
        makespans = []
        for row_number, row in enumerate(reader):
            if len(row) != 2:
                raise ValueError(f"{path}: row {row_number + 2} has {len(row)} fields")
            try:
                index, makespan = int(row[0]), int(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}: row {row_number + 2} is not numeric: {row}") from exc
            if index != row_number:
                raise ValueError(
                    f"{path}: row {row_number + 2} has index {index}, expected {row_number}")
            makespans.append(makespan)
    provenance = {}
    sidecar = sidecar_path(path)
    if sidecar.exists():
        provenance = json.loads(sidecar.read_text(encoding="utf-8"))
    return SamplePool(makespans=tuple(makespans), provenance=provenance)
