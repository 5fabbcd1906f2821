"""HTTP service backing the human review of generated candidates.

Serves batch summaries, pending-image queues, the PNGs themselves, and an
accept/reject decision endpoint.  Decisions are appended to a per-batch
``decisions.jsonl`` journal and fsynced before the response goes out, so an
acknowledged decision survives a crash; on (re)start the journal is replayed
with last-write-wins per image index, full history retained.  The service
never mutates images or ledgers.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, HTMLResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .augment import DiscardList
from .generation import (BatchLedger, plan_from_config, read_batch_config,
                         read_ledger)

VERDICTS = ("accept", "reject")


@dataclass(frozen=True)
class ReviewDecision:
    batch: str
    index: int
    verdict: str
    timestamp: float
    reviewer: str = ""


class DecisionJournal:
    """Append-only decision log with last-write-wins materialization."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self.history: list[ReviewDecision] = []
        self.effective: dict[int, str] = {}
        if path.exists():
            with path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self._apply(self._parse(line))

    @staticmethod
    def _parse(line: str) -> ReviewDecision:
        d = json.loads(line)
        return ReviewDecision(batch=d["batch"], index=d["index"],
                              verdict=d["verdict"], timestamp=d["timestamp"],
                              reviewer=d.get("reviewer", ""))

    def _apply(self, dec: ReviewDecision) -> None:
        self.history.append(dec)
        self.effective[dec.index] = dec.verdict

    def record(self, dec: ReviewDecision) -> None:
        line = json.dumps({
            "batch": dec.batch, "index": dec.index, "verdict": dec.verdict,
            "timestamp": dec.timestamp, "reviewer": dec.reviewer,
        }, sort_keys=True)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._apply(dec)


class BatchState:
    def __init__(self, directory: Path):
        self.directory = directory
        self.config = read_batch_config(directory)
        self.batch_id: str = self.config["batch_id"]
        self.plan = plan_from_config(self.config)
        self.journal = DecisionJournal(directory / "decisions.jsonl")

    def ledger(self) -> BatchLedger:
        return read_ledger(self.directory, self.batch_id)

    def counts(self) -> dict:
        pending_rows = self.ledger().pending_indices()
        eff = self.journal.effective
        accepted = sum(1 for i in pending_rows if eff.get(i) == "accept")
        rejected = sum(1 for i in pending_rows if eff.get(i) == "reject")
        return {
            "pending": len(pending_rows) - accepted - rejected,
            "accepted": accepted,
            "rejected": rejected,
            "required": self.plan.n_images,
        }

    def pending_items(self) -> list[dict]:
        eff = self.journal.effective
        rows = self.ledger().by_index()
        items = []
        for i in self.ledger().pending_indices():
            if i in eff:
                continue
            row = rows[i]
            prompt = row.prompt or {}
            items.append({
                "index": i,
                "seed": row.seed,
                "url": f"/img/{self.batch_id}/{i}.png",
                "target_attribute": prompt.get("target_attribute", ""),
                "positive": prompt.get("positive", ""),
                "positive_excerpt": (prompt.get("positive", "") or "")[:240],
                "choices": prompt.get("choices", {}),
            })
        return items

    def image_path(self, index: int) -> Path:
        rows = self.ledger().by_index()
        if index not in rows or not rows[index].image:
            raise KeyError(index)
        return self.directory / rows[index].image

    def discards(self) -> DiscardList:
        rejected = tuple(i for i, v in self.journal.effective.items()
                         if v == "reject")
        return DiscardList(batch=self.batch_id, rejected=rejected)


class ReviewStore:
    """All batches under one root directory (one subdirectory per batch)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._batches: dict[str, BatchState] = {}
        self.rescan()

    def rescan(self) -> None:
        candidates = []
        if (self.root / "batch.json").exists():
            candidates.append(self.root)
        candidates.extend(p for p in sorted(self.root.iterdir())
                          if p.is_dir() and (p / "batch.json").exists())
        for d in candidates:
            state = BatchState(d)
            self._batches.setdefault(state.batch_id, state)

    def get(self, batch_id: str) -> BatchState:
        if batch_id not in self._batches:
            raise KeyError(batch_id)
        return self._batches[batch_id]

    def all(self) -> list[BatchState]:
        return list(self._batches.values())


class DecisionBody(BaseModel):
    index: int
    verdict: str
    reviewer: str = ""


def create_app(batch_root: str | Path, ui_dir: str | Path | None = None,
               ) -> FastAPI:
    store = ReviewStore(batch_root)
    app = FastAPI(title="parsynth review")
    app.state.store = store

    @app.get("/api/batches")
    def batches():
        return [{"id": b.batch_id,
                 "target": b.plan.target,
                 "pct": b.plan.pct,
                 "counts": b.counts()} for b in store.all()]

    def _batch_or_404(batch_id: str) -> BatchState:
        try:
            return store.get(batch_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown batch {batch_id!r}") from None

    @app.get("/api/batches/{batch_id}/images")
    def images(batch_id: str, status: str = "pending", page: int = 0,
               page_size: int = 50):
        batch = _batch_or_404(batch_id)
        if status != "pending":
            raise HTTPException(status_code=400,
                                detail="only status=pending is queryable")
        items = batch.pending_items()
        start = page * page_size
        return {"total": len(items),
                "page": page,
                "items": items[start:start + page_size],
                "counts": batch.counts()}

    @app.get("/img/{batch_id}/{index}.png")
    def image(batch_id: str, index: int):
        batch = _batch_or_404(batch_id)
        try:
            path = batch.image_path(index)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"no image {index}") from None
        return FileResponse(path, media_type="image/png")

    @app.post("/api/batches/{batch_id}/decisions")
    def decide(batch_id: str, body: DecisionBody):
        batch = _batch_or_404(batch_id)
        if body.verdict not in VERDICTS:
            raise HTTPException(status_code=409,
                                detail=f"malformed verdict {body.verdict!r}")
        if body.index not in batch.ledger().by_index():
            raise HTTPException(status_code=404,
                                detail=f"unknown index {body.index}")
        batch.journal.record(ReviewDecision(
            batch=batch_id, index=body.index, verdict=body.verdict,
            timestamp=time.time(), reviewer=body.reviewer))
        return {"ok": True, "counts": batch.counts()}

    @app.get("/api/batches/{batch_id}/discards")
    def discards(batch_id: str):
        batch = _batch_or_404(batch_id)
        # byte-compatible with the merge step's discard-list file format
        return Response(content=batch.discards().to_json_bytes(),
                        media_type="application/json")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

        @app.get("/", response_class=HTMLResponse, include_in_schema=False)
        def root():
            return (Path(ui_dir) / "index.html").read_text(encoding="utf-8")

    return app


def serve(batch_root: str | Path, port: int = 8017,
          ui_dir: str | Path | None = None, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(batch_root, ui_dir=ui_dir), host=host, port=port)
