"""Dataset directories: FSH1 record files plus a manifest.json with splits
"""

import json
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..core.exceptions import FishStreamError
from .waveform import WaveformRecord, read_waveform, write_waveform

MANIFEST = "manifest.json"
SPLITS = ("train", "val")


@dataclass
class DatasetEntry:
    file: str
    split: str


@dataclass
class Dataset:
    """Lazily loaded record collection rooted at a directory"""

    root: Path
    entries: list[DatasetEntry]
    metadata: dict[str, Any] = field(default_factory=dict)

    def split(self, name: str) -> "RecordSplit":
        if name not in SPLITS:
            raise FishStreamError(f"Unknown split '{name}', expected one of {SPLITS}")
        return RecordSplit(self.root, [e.file for e in self.entries if e.split == name])

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class RecordSplit(Sequence[WaveformRecord]):
    root: Path
    files: list[str]

    def __len__(self) -> int:
        return len(self.files)

    def __getitem__(self, index):  # type: ignore[override]
        if isinstance(index, slice):
            return RecordSplit(self.root, self.files[index])
        return read_waveform(self.root / self.files[index])

    def __iter__(self) -> Iterator[WaveformRecord]:
        for name in self.files:
            yield read_waveform(self.root / name)


def write_dataset(
    root: str | Path,
    records: Sequence[WaveformRecord],
    val_fraction: float = 0.2,
    metadata: dict[str, Any] | None = None,
) -> Dataset:
    """Write records as rec_NNNNN.fsh; the last val_fraction go to 'val'"""
    root = Path(root)
    n_val = int(round(len(records) * val_fraction))
    n_train = len(records) - n_val
    entries = []
    for i, record in enumerate(records):
        name = f"rec_{i:05d}.fsh"
        write_waveform(root / name, record)
        entries.append(DatasetEntry(name, "train" if i < n_train else "val"))

    manifest = {
        "format": "fishstream-dataset",
        "version": 1,
        "metadata": metadata or {},
        "records": [{"file": e.file, "split": e.split} for e in entries],
    }
    try:
        (root / MANIFEST).write_text(json.dumps(manifest, sort_keys=True, indent=1))
    except OSError as e:
        raise FishStreamError(f"Cannot write dataset manifest in {root}: {e}") from e
    return Dataset(root, entries, manifest["metadata"])


def load_dataset(root: str | Path) -> Dataset:
    root = Path(root)
    path = root / MANIFEST
    try:
        manifest = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise FishStreamError(f"Cannot read dataset manifest {path}: {e}") from e
    try:
        entries = [DatasetEntry(r["file"], r["split"]) for r in manifest["records"]]
    except (KeyError, TypeError) as e:
        raise FishStreamError(f"Malformed dataset manifest {path}: {e}") from e
    bad = [e.split for e in entries if e.split not in SPLITS]
    if bad:
        raise FishStreamError(f"Dataset manifest {path} has unknown splits {sorted(set(bad))}")
    return Dataset(root, entries, manifest.get("metadata", {}))
