"""CSV dataset manifests: ``path,label,subset`` with LF line endings, UTF-8."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

LABELS = ("bonafide", "spoof")
SUBSETS = ("train", "dev", "eval")
HEADER = ["path", "label", "subset"]


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    subset: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)   # relative paths resolve against this

    def subset(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.subset == name]

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def __len__(self) -> int:
        return len(self.entries)

    def require_subsets(self, *names: str) -> None:
        empty = [n for n in names if not self.subset(n)]
        if empty:
            raise ManifestError(f"manifest has no entries in subset(s): {', '.join(empty)}")


def _validate(entries: list[ManifestEntry], root: Path, check_files: bool) -> None:
    problems = []
    seen: dict[str, int] = {}
    for row, e in enumerate(entries, start=2):   # row 1 is the header
        if e.label not in LABELS:
            problems.append(f"row {row}: unknown label {e.label!r} (expected one of {', '.join(LABELS)})")
        if e.subset not in SUBSETS:
            problems.append(f"row {row}: unknown subset {e.subset!r} (expected one of {', '.join(SUBSETS)})")
        if e.path in seen:
            problems.append(f"row {row}: duplicate path {e.path!r} (first seen on row {seen[e.path]})")
        seen.setdefault(e.path, row)
        if check_files:
            p = Path(e.path)
            p = p if p.is_absolute() else root / p
            if not p.is_file():
                problems.append(f"row {row}: missing file {p}")
    if problems:
        raise ManifestError("invalid manifest:\n  " + "\n  ".join(problems))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    _validate(manifest.entries, manifest.root, check_files=False)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for e in manifest.entries:
        writer.writerow([e.path, e.label, e.subset])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def load_manifest(path: str | Path, check_files: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not text.strip():
        raise ManifestError(f"manifest {path} is empty")
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != HEADER:
        raise ManifestError(f"manifest {path}: header must be {','.join(HEADER)}, got {','.join(rows[0])}")
    entries = []
    for row_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ManifestError(f"manifest {path}: row {row_no} has {len(row)} fields, expected 3")
        entries.append(ManifestEntry(*row))
    root = path.parent
    _validate(entries, root, check_files)
    return DatasetManifest(entries, root=root)
