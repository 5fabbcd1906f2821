"""Dataset manifests: attribute schema, labeled image records, splits.

A manifest is a UTF-8 CSV with a fixed prefix of five columns
(``id,path,split,origin,batch_ref``) followed by one integer label column per
attribute.  Labels use the extended alphabet:

* ``-1`` uncertain presence (synthetic only)
* ``0``  absent (real only)
* ``1``  confirmed positive; on synthetic records, the generation target
* ``2``  legacy positive (real only, counted as positive everywhere)
* ``3``  positive implied by the generation prompt (synthetic only)

Manifests are immutable values: loading or construction validates every
invariant, and all edits go through constructing a new manifest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

LABEL_ALPHABET = frozenset({-1, 0, 1, 2, 3})
REAL_LABELS = frozenset({0, 1, 2})
SYNTHETIC_LABELS = frozenset({-1, 1, 3})
SPLITS = ("train", "test")
ORIGINS = ("real", "synthetic")
DEFAULT_EXCLUDED_TAGS = frozenset({"action-", "-Others", "-Other"})

_PREFIX_COLUMNS = ("id", "path", "split", "origin", "batch_ref")


class ManifestError(ValueError):
    """Raised for any structural or label-alphabet violation."""


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute vocabulary plus the non-generatable category tags."""

    names: tuple[str, ...]
    excluded_tags: frozenset[str] = DEFAULT_EXCLUDED_TAGS

    def __post_init__(self):
        if len(self.names) < 1:
            raise ManifestError("schema needs at least one attribute")
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ManifestError(f"duplicate attribute names: {dupes}")

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ManifestError(f"unknown attribute {name!r}") from None

    def is_excluded(self, name: str) -> bool:
        """True for categories that are never targeted for generation.

        Tags match as a name prefix or suffix, covering both the
        ``action-*`` family and the ``*-Others``/``*-Other`` catch-alls.
        """
        return any(name.startswith(t) or name.endswith(t)
                   for t in self.excluded_tags)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    split: str
    origin: str
    labels: tuple[int, ...]
    batch_ref: str = ""

    def validate(self, schema: AttributeSchema) -> None:
        if self.split not in SPLITS:
            raise ManifestError(f"record {self.id}: bad split {self.split!r}")
        if self.origin not in ORIGINS:
            raise ManifestError(f"record {self.id}: bad origin {self.origin!r}")
        if len(self.labels) != schema.size:
            raise ManifestError(
                f"record {self.id}: {len(self.labels)} labels for "
                f"{schema.size} attributes")
        for col, v in zip(schema.names, self.labels):
            if v not in LABEL_ALPHABET:
                raise ManifestError(
                    f"record {self.id}, column {col}: label {v} outside alphabet")
        allowed = REAL_LABELS if self.origin == "real" else SYNTHETIC_LABELS
        for col, v in zip(schema.names, self.labels):
            if v not in allowed:
                raise ManifestError(
                    f"record {self.id}, column {col}: label {v} not allowed "
                    f"for {self.origin} records")
        if self.origin == "synthetic":
            if self.labels.count(1) != 1:
                raise ManifestError(
                    f"record {self.id}: synthetic records need exactly one "
                    f"label 1, found {self.labels.count(1)}")
            if self.split != "train":
                raise ManifestError(
                    f"record {self.id}: synthetic records must be in the "
                    f"train split")


@dataclass(frozen=True)
class DatasetManifest:
    schema: AttributeSchema
    records: tuple[ImageRecord, ...]
    dataset_name: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ManifestError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            rec.validate(self.schema)

    def with_records(self, records: tuple[ImageRecord, ...]) -> DatasetManifest:
        return replace(self, records=records)


@dataclass(frozen=True)
class SplitStats:
    total_train: int
    total_test: int
    per_attribute_positive_train: tuple[int, ...]
    per_attribute_positive_test: tuple[int, ...]


def split_stats(m: DatasetManifest) -> SplitStats:
    """Per-split totals and positive counts; a label counts as positive
    iff it is >= 1 (so 1, 2 and 3)."""
    pos = {s: [0] * m.schema.size for s in SPLITS}
    totals = {s: 0 for s in SPLITS}
    for rec in m.records:
        totals[rec.split] += 1
        row = pos[rec.split]
        for i, v in enumerate(rec.labels):
            if v >= 1:
                row[i] += 1
    return SplitStats(
        total_train=totals["train"],
        total_test=totals["test"],
        per_attribute_positive_train=tuple(pos["train"]),
        per_attribute_positive_test=tuple(pos["test"]),
    )


def positive_train_count(m: DatasetManifest, attribute: str) -> int:
    idx = m.schema.index(attribute)
    return sum(1 for r in m.records if r.split == "train" and r.labels[idx] >= 1)


def load_manifest(path: str | Path, dataset_name: str | None = None,
                  excluded_tags: frozenset[str] = DEFAULT_EXCLUDED_TAGS,
                  ) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty file") from None
        if tuple(header[: len(_PREFIX_COLUMNS)]) != _PREFIX_COLUMNS:
            raise ManifestError(
                f"{path}: malformed header, expected prefix "
                f"{','.join(_PREFIX_COLUMNS)}")
        names = tuple(header[len(_PREFIX_COLUMNS):])
        schema = AttributeSchema(names, excluded_tags=excluded_tags)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ManifestError(
                    f"{path}:{lineno}: {len(row)} fields, expected {len(header)}")
            rid, rpath, split, origin, batch_ref = row[: len(_PREFIX_COLUMNS)]
            labels = []
            for col, cell in zip(names, row[len(_PREFIX_COLUMNS):]):
                try:
                    labels.append(int(cell))
                except ValueError:
                    raise ManifestError(
                        f"record {rid}, column {col}: non-integer label "
                        f"{cell!r}") from None
            records.append(ImageRecord(
                id=rid, path=rpath, split=split, origin=origin,
                labels=tuple(labels), batch_ref=batch_ref))
    return DatasetManifest(schema=schema, records=tuple(records),
                           dataset_name=dataset_name or path.stem)


def save_manifest(m: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(_PREFIX_COLUMNS) + list(m.schema.names))
        for rec in m.records:
            writer.writerow(
                [rec.id, rec.path, rec.split, rec.origin, rec.batch_ref]
                + [str(v) for v in rec.labels])


def save_schema(schema: AttributeSchema, path: str | Path) -> None:
    """Schema-only file: just the manifest header line."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        csv.writer(f, lineterminator="\n").writerow(
            list(_PREFIX_COLUMNS) + list(schema.names))


def load_schema(path: str | Path,
                excluded_tags: frozenset[str] = DEFAULT_EXCLUDED_TAGS,
                ) -> AttributeSchema:
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        header = next(csv.reader(f))
    if tuple(header[: len(_PREFIX_COLUMNS)]) != _PREFIX_COLUMNS:
        raise ManifestError(f"{path}: malformed schema header")
    return AttributeSchema(tuple(header[len(_PREFIX_COLUMNS):]),
                           excluded_tags=excluded_tags)
