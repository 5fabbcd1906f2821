"""Turning reviewed candidates into training records.

Synthetic records use the extended labels: the generation target gets 1
(it was reinforced at the end of the prompt and manually verified), every
attribute a chosen wildcard phrase implies gets 3, and everything else gets
-1 because absence is never certain for generated pedestrians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .generation import BatchLedger, LedgerRow
from .manifest import AttributeSchema, DatasetManifest, ImageRecord, ManifestError
from .prompts import PromptSpec


class AugmentError(ValueError):
    pass


def annotate_synthetic(spec: PromptSpec, schema: AttributeSchema) -> tuple[int, ...]:
    """Label vector for one accepted synthetic image."""
    target_idx = schema.index(spec.target_attribute)
    labels = [-1] * schema.size
    for name in spec.implied:
        idx = schema.index(name)  # unknown implied attribute -> error
        labels[idx] = 3
    labels[target_idx] = 1  # the target stays 1 even if it was implied too
    return tuple(labels)


@dataclass(frozen=True)
class DiscardList:
    batch: str
    rejected: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rejected",
                           tuple(sorted(set(self.rejected))))

    def to_json_bytes(self) -> bytes:
        """Canonical serialization, shared byte-for-byte with the review
        service's discards endpoint."""
        return (json.dumps({"batch": self.batch,
                            "rejected": list(self.rejected)},
                           sort_keys=True) + "\n").encode("utf-8")

    @classmethod
    def from_json_bytes(cls, data: bytes | str) -> DiscardList:
        d = json.loads(data)
        return cls(batch=d["batch"], rejected=tuple(d["rejected"]))


def write_discards(d: DiscardList, path: str | Path) -> None:
    Path(path).write_bytes(d.to_json_bytes())


def read_discards(path: str | Path) -> DiscardList:
    return DiscardList.from_json_bytes(Path(path).read_bytes())


def apply_discards(ledger: BatchLedger, discards: DiscardList,
                   n_images: int | None = None) -> list[int]:
    """Accepted candidate indices: pending minus rejected, in index order,
    truncated to the plan quota so oversampling absorbs rejections."""
    if discards.batch != ledger.batch_id:
        raise AugmentError(
            f"discard list is for batch {discards.batch!r}, ledger is "
            f"{ledger.batch_id!r}")
    known = set(ledger.by_index())
    out_of_range = [i for i in discards.rejected if i not in known]
    if out_of_range:
        raise AugmentError(f"rejected indices not in batch: {out_of_range}")
    accepted = [i for i in ledger.pending_indices()
                if i not in set(discards.rejected)]
    if n_images is not None:
        accepted = accepted[:n_images]
    return accepted


@dataclass(frozen=True)
class AcceptedImage:
    index: int
    path: str
    labels: tuple[int, ...]
    batch: str

    @property
    def record_id(self) -> str:
        return f"{self.batch}-{self.index:05d}"


def accepted_images(ledger: BatchLedger, schema: AttributeSchema,
                    accepted: list[int],
                    path_prefix: str = "") -> list[AcceptedImage]:
    rows = ledger.by_index()
    out = []
    for index in accepted:
        row: LedgerRow = rows[index]
        spec = PromptSpec.from_json(json.dumps(row.prompt))
        out.append(AcceptedImage(
            index=index,
            path=f"{path_prefix}{row.image}" if path_prefix else row.image,
            labels=annotate_synthetic(spec, schema),
            batch=ledger.batch_id,
        ))
    return out


def merge_manifests(base: DatasetManifest,
                    accepted: list[AcceptedImage]) -> DatasetManifest:
    """Append accepted synthetic train records; the base stays untouched."""
    existing = {r.id for r in base.records}
    new_records = []
    for img in accepted:
        if img.record_id in existing:
            raise ManifestError(f"record id collision: {img.record_id}")
        existing.add(img.record_id)
        new_records.append(ImageRecord(
            id=img.record_id,
            path=img.path,
            split="train",
            origin="synthetic",
            labels=img.labels,
            batch_ref=img.batch,
        ))
    return base.with_records(base.records + tuple(new_records))
