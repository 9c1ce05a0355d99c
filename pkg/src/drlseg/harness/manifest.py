"""Dataset manifests: one JSON record per line with ``id``, ``image``, ``gt``
and ``split``. Paths are stored relative to the manifest file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError, ParseError

SPLITS = ("train", "test")
_FIELDS = ("id", "image", "gt", "split")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image: Path
    gt: Path
    split: str


def split_counts(n: int, train_fraction: float = 0.8) -> tuple[int, int]:
    n_train = int(round(n * train_fraction))
    return n_train, n - n_train


def write_manifest(path, entries) -> None:
    path = Path(path)
    root = path.parent.resolve()
    lines = []
    for e in entries:
        rec = {
            "id": e.id,
            "image": str(Path(e.image).resolve().relative_to(root)),
            "gt": str(Path(e.gt).resolve().relative_to(root)),
            "split": e.split,
        }
        lines.append(json.dumps(rec))
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path, split: str | None = None, check_paths: bool = True) -> list[ManifestEntry]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as err:
        raise ConfigError(f"manifest not found: {path}") from err
    entries, seen = [], set()
    offset = 0
    for line in data.splitlines(keepends=True):
        start, offset = offset, offset + len(line)
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as err:
            raise ParseError(f"manifest record is not valid JSON: {err.msg}", start + err.pos) from err
        if not isinstance(rec, dict) or set(rec) != set(_FIELDS):
            raise ParseError(f"manifest record needs exactly the keys {list(_FIELDS)}", start)
        if rec["split"] not in SPLITS:
            raise ParseError(f"unknown split {rec['split']!r}", start)
        if rec["id"] in seen:
            raise ParseError(f"duplicate case id {rec['id']!r}", start)
        seen.add(rec["id"])
        entry = ManifestEntry(str(rec["id"]), path.parent / rec["image"], path.parent / rec["gt"], rec["split"])
        if check_paths:
            for p in (entry.image, entry.gt):
                if not p.exists():
                    raise ConfigError(f"case {entry.id}: missing file {p}")
        entries.append(entry)
    if split is not None:
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}")
        entries = [e for e in entries if e.split == split]
    return entries
