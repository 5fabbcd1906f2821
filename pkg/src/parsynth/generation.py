"""Batch planning and the generate -> crop -> degrade pipeline.

An augmentation plan for a target attribute adds ``pct`` percent of its
positive-train count as synthetic images; job i always uses seed
``initial_seed + i`` (the per-batch seed recurrence collapses to that), so
plans for increasing percentages are strict prefixes of one another and any
produced image is reproducible from its ledger row alone.

Each batch directory holds ``batch.json`` (plan + parameters),
``images/{index}.png`` for every kept candidate, and an append-only
``ledger.jsonl`` with one row per attempted index.  Re-running a batch skips
indices already in the ledger, which makes interrupted runs resumable.
"""

from __future__ import annotations

import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

from .degrade import DegradeParams, degrade_chain
from .images import ImageBuffer
from .manifest import DatasetManifest, positive_train_count
from .prompts import (PromptTemplate, SeedPlan, WildcardTable,
                      compile_prompt, seed_for)
from .services import (DetectorBox, DetectorService, DiffusionService,
                       DimensionMismatchError, GenerationJob, NoDetectionError,
                       RetryPolicy, ServiceError, TransportError)

STATUS_PENDING = "pending-review"
STATUS_REJECTED_DETECTOR = "rejected-by-detector"
STATUS_FAILED = "failed"

AUGMENTATION_PERCENTAGES = (50, 100, 200, 300, 400, 500)
DEFAULT_OVERSAMPLE = 1.3


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentationPlan:
    target: str
    pct: int
    base_count: int
    n_images: int
    batch_size: int
    oversample_factor: float
    candidate_count: int
    initial_seed: int = 123456789

    def seed_plan(self, index: int) -> tuple[SeedPlan, int]:
        """Batch-structured seed bookkeeping for global candidate ``index``."""
        plan = SeedPlan(initial_seed=self.initial_seed,
                        batch_size=self.batch_size,
                        batch_number=index // self.batch_size + 1)
        return plan, index % self.batch_size

    def seed_at(self, index: int) -> int:
        plan, offset = self.seed_plan(index)
        return seed_for(plan, offset)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def plan_augmentation(manifest: DatasetManifest, target: str, pct: int,
                      batch_size: int = 100,
                      oversample_factor: float = DEFAULT_OVERSAMPLE,
                      initial_seed: int = 123456789) -> AugmentationPlan:
    base = positive_train_count(manifest, target)
    return plan_from_base(target, base, pct, batch_size=batch_size,
                          oversample_factor=oversample_factor,
                          initial_seed=initial_seed)


def plan_from_base(target: str, base_count: int, pct: int,
                   batch_size: int = 100,
                   oversample_factor: float = DEFAULT_OVERSAMPLE,
                   initial_seed: int = 123456789) -> AugmentationPlan:
    if base_count <= 0:
        raise PlanError(
            f"target {target!r} has no positive training images to scale from")
    if pct <= 0:
        raise PlanError("augmentation percentage must be positive")
    if oversample_factor < 1.0:
        raise PlanError("oversample_factor must be >= 1")
    n_images = round_half_up(base_count * pct / 100.0)
    return AugmentationPlan(
        target=target,
        pct=pct,
        base_count=base_count,
        n_images=n_images,
        batch_size=batch_size,
        oversample_factor=oversample_factor,
        candidate_count=math.ceil(n_images * oversample_factor),
        initial_seed=initial_seed,
    )


@dataclass(frozen=True)
class LedgerRow:
    index: int
    seed: int
    status: str
    image: str = ""
    attempts: int = 0
    error: str = ""
    prompt: dict | None = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["prompt"] is None:
            d.pop("prompt")
        return json.dumps(d, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> LedgerRow:
        d = json.loads(line)
        return cls(index=d["index"], seed=d["seed"], status=d["status"],
                   image=d.get("image", ""), attempts=d.get("attempts", 0),
                   error=d.get("error", ""), prompt=d.get("prompt"))


@dataclass
class BatchLedger:
    batch_id: str
    directory: Path
    rows: list[LedgerRow]

    def by_index(self) -> dict[int, LedgerRow]:
        # later rows supersede earlier ones for the same index
        return {r.index: r for r in sorted(self.rows, key=lambda r: r.index)}

    def pending_indices(self) -> list[int]:
        return sorted(i for i, r in self.by_index().items()
                      if r.status == STATUS_PENDING)


def ledger_path(batch_dir: str | Path) -> Path:
    return Path(batch_dir) / "ledger.jsonl"


def read_ledger(batch_dir: str | Path, batch_id: str | None = None) -> BatchLedger:
    batch_dir = Path(batch_dir)
    if batch_id is None:
        batch_id = read_batch_config(batch_dir)["batch_id"]
    rows = []
    path = ledger_path(batch_dir)
    if path.exists():
        with path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    rows.append(LedgerRow.from_json(line))
    return BatchLedger(batch_id=batch_id, directory=batch_dir, rows=rows)


def write_batch_config(batch_dir: Path, batch_id: str,
                       plan: AugmentationPlan, params: DegradeParams) -> None:
    cfg = {
        "batch_id": batch_id,
        "plan": asdict(plan),
        "degrade": asdict(params),
    }
    cfg["degrade"]["noise_size"] = list(params.noise_size)
    path = Path(batch_dir) / "batch.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def read_batch_config(batch_dir: str | Path) -> dict:
    path = Path(batch_dir) / "batch.json"
    if not path.exists():
        raise PlanError(f"not a batch directory (no batch.json): {batch_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def plan_from_config(cfg: dict) -> AugmentationPlan:
    return AugmentationPlan(**cfg["plan"])


class _LedgerWriter:
    """Serialized, durable appends to the ledger file."""

    def __init__(self, path: Path):
        self._lock = threading.Lock()
        self._f = path.open("a", encoding="utf-8")

    def append(self, row: LedgerRow) -> None:
        with self._lock:
            self._f.write(row.to_json() + "\n")
            self._f.flush()
            os.fsync(self._f.fileno())

    def close(self) -> None:
        self._f.close()


def submit_job(job: GenerationJob, service: DiffusionService,
               retry: RetryPolicy | None = None) -> tuple[ImageBuffer, int]:
    """Generate one image, retrying transient failures; validates canvas."""
    retry = retry or RetryPolicy()
    img, attempts = retry.run(lambda: service.generate(job))
    if (img.width, img.height) != job.canvas:
        raise DimensionMismatchError(
            f"expected {job.canvas[0]}x{job.canvas[1]}, got "
            f"{img.width}x{img.height}")
    return img, attempts


def pick_person_box(boxes: list[DetectorBox]) -> DetectorBox:
    """Highest confidence wins; ties go to the larger area."""
    if not boxes:
        raise NoDetectionError("detector returned no person boxes")
    return max(boxes, key=lambda b: (b.confidence, b.area))


def crop_person(img: ImageBuffer, detector: DetectorService) -> ImageBuffer:
    boxes = detector.detect(img.png_bytes())
    box = pick_person_box(boxes)
    box.validate_within(img.width, img.height)
    crop = img.data[box.y:box.y + box.h, box.x:box.x + box.w]
    return ImageBuffer(crop.copy())


def run_generation_batch(plan: AugmentationPlan, template: PromptTemplate,
                         table: WildcardTable, diffusion: DiffusionService,
                         detector: DetectorService, params: DegradeParams,
                         out_dir: str | Path, batch_id: str | None = None,
                         parallelism: int = 1,
                         retry: RetryPolicy | None = None,
                         canvas: tuple[int, int] | None = None,
                         ) -> BatchLedger:
    """Run (or resume) every candidate index of the plan, best-effort.

    Per-index failures are recorded as ledger rows, never raised; images are
    written before their ledger row so a pending-review row always has its
    PNG on disk.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "images").mkdir(exist_ok=True)
    if batch_id is None:
        batch_id = f"{plan.target}-{plan.pct}"
    config_path = out_dir / "batch.json"
    if not config_path.exists():
        write_batch_config(out_dir, batch_id, plan, params)
    existing = read_ledger(out_dir, batch_id)
    done = set(existing.by_index())
    todo = [i for i in range(plan.candidate_count) if i not in done]
    writer = _LedgerWriter(ledger_path(out_dir))

    def run_one(index: int) -> LedgerRow:
        seed = plan.seed_at(index)
        spec = compile_prompt(template, table, plan.target, seed)
        job_kwargs = {"canvas": canvas} if canvas else {}
        job = GenerationJob(spec=spec, job_id=f"{batch_id}-{index:05d}",
                            **job_kwargs)
        prompt_dict = json.loads(spec.to_json())
        try:
            img, attempts = submit_job(job, diffusion, retry)
            try:
                cropped = crop_person(img, detector)
            except NoDetectionError:
                return LedgerRow(index=index, seed=seed,
                                 status=STATUS_REJECTED_DETECTOR,
                                 attempts=attempts, prompt=prompt_dict)
            degraded = degrade_chain(cropped, params)
            rel = f"images/{index:05d}.png"
            degraded.save_png(out_dir / rel)
            return LedgerRow(index=index, seed=seed, status=STATUS_PENDING,
                             image=rel, attempts=attempts, prompt=prompt_dict)
        except (TransportError, ServiceError, DimensionMismatchError) as exc:
            return LedgerRow(index=index, seed=seed, status=STATUS_FAILED,
                             error=f"{type(exc).__name__}: {exc}",
                             prompt=prompt_dict)

    try:
        if parallelism <= 1:
            for i in todo:
                writer.append(run_one(i))
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                for row in pool.map(run_one, todo):
                    writer.append(row)
    finally:
        writer.close()
    return read_ledger(out_dir, batch_id)
