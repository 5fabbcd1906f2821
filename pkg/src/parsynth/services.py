"""Clients for the external generation services.

The diffusion model and the person detector run out of process behind small
wire contracts:

* diffusion: ``POST {base}/generate`` with the JSON job -> PNG bytes, or
  202 + ``{"id": ...}`` then ``GET {base}/result/{id}``;
* detector: ``POST {base}/detect`` with PNG bytes -> JSON
  ``{"boxes": [{x, y, w, h, confidence}, ...]}``.

Deterministic in-process mocks implement the same call surface so the whole
pipeline runs without any network; ``mock://`` addresses select them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import requests

from .images import ImageBuffer, load_png
from .prompts import PromptSpec
from .rng import SplitMix64

DEFAULT_CANVAS = (2784, 1024)  # (width, height)


class ServiceError(RuntimeError):
    """The service answered, but with an error payload."""


class TransportError(RuntimeError):
    """The service could not be reached (retryable)."""


class DimensionMismatchError(RuntimeError):
    """The service returned an image of the wrong size."""


class NoDetectionError(RuntimeError):
    """The detector found no person in the image."""


@dataclass(frozen=True)
class GenerationJob:
    spec: PromptSpec
    job_id: str
    canvas: tuple[int, int] = DEFAULT_CANVAS
    steps: int = 28
    cfg: float = 4.5
    sampler: str = "dpmpp_2m"
    scheduler: str = "sgm_uniform"
    shift: float = 3.0
    denoise: float = 1.0

    @property
    def seed(self) -> int:
        return self.spec.seed

    def to_payload(self) -> dict:
        return {
            "job_id": self.job_id,
            "positive": self.spec.positive,
            "negative": self.spec.negative,
            "seed": self.spec.seed,
            "width": self.canvas[0],
            "height": self.canvas[1],
            "steps": self.steps,
            "cfg": self.cfg,
            "sampler": self.sampler,
            "scheduler": self.scheduler,
            "shift": self.shift,
            "denoise": self.denoise,
        }


@dataclass(frozen=True)
class DetectorBox:
    x: int
    y: int
    w: int
    h: int
    confidence: float

    def validate_within(self, width: int, height: int) -> None:
        if self.w < 1 or self.h < 1:
            raise ServiceError(f"degenerate detector box {self}")
        if (self.x < 0 or self.y < 0
                or self.x + self.w > width or self.y + self.h > height):
            raise ServiceError(
                f"detector box {self} outside {width}x{height} image")

    @property
    def area(self) -> int:
        return self.w * self.h


class DiffusionService(Protocol):
    def generate(self, job: GenerationJob) -> ImageBuffer: ...


class DetectorService(Protocol):
    def detect(self, png: bytes) -> list[DetectorBox]: ...


@dataclass
class RetryPolicy:
    """Bounded exponential backoff over TransportError."""

    attempts: int = 5
    backoff: float = 0.5
    sleep: object = time.sleep  # injectable for tests

    def run(self, fn):
        """Returns (result, attempts_used); re-raises after the budget."""
        last: Exception | None = None
        for attempt in range(1, self.attempts + 1):
            try:
                return fn(), attempt
            except TransportError as exc:
                last = exc
                if attempt < self.attempts:
                    self.sleep(self.backoff * 2 ** (attempt - 1))
        raise TransportError(
            f"gave up after {self.attempts} attempts: {last}") from last


class HttpDiffusionClient:
    """Single-attempt HTTP client; retrying is the orchestrator's job."""

    def __init__(self, base_url: str, timeout: float = 300.0,
                 poll_interval: float = 0.5, max_polls: int = 600,
                 session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.poll_interval = poll_interval
        self.max_polls = max_polls
        self.session = session or requests.Session()

    def _post(self, job: GenerationJob) -> bytes:
        try:
            resp = self.session.post(f"{self.base_url}/generate",
                                     json=job.to_payload(),
                                     timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 202:
            return self._poll(resp.json()["id"])
        if resp.status_code >= 500:
            raise TransportError(f"server error {resp.status_code}")
        if resp.status_code != 200:
            raise ServiceError(
                f"generate failed with {resp.status_code}: {resp.text[:200]}")
        return resp.content

    def _poll(self, handle: str) -> bytes:
        for _ in range(self.max_polls):
            try:
                resp = self.session.get(f"{self.base_url}/result/{handle}",
                                        timeout=self.timeout)
            except requests.RequestException as exc:
                raise TransportError(str(exc)) from exc
            if resp.status_code == 202:
                time.sleep(self.poll_interval)
                continue
            if resp.status_code != 200:
                raise ServiceError(f"result fetch failed: {resp.status_code}")
            return resp.content
        raise TransportError(
            f"job {handle} still pending after {self.max_polls} polls")

    def generate(self, job: GenerationJob) -> ImageBuffer:
        # canvas conformance is checked by the orchestrator for every
        # service, mock or HTTP
        return load_png(self._post(job))


class HttpDetectorClient:
    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def detect(self, png: bytes) -> list[DetectorBox]:
        try:
            resp = self.session.post(
                f"{self.base_url}/detect", data=png,
                headers={"Content-Type": "image/png"},
                timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code >= 500:
            raise TransportError(f"server error {resp.status_code}")
        if resp.status_code != 200:
            raise ServiceError(f"detect failed: {resp.status_code}")
        try:
            payload = resp.json()
            # accept both a bare list and a {"boxes": [...]} wrapper
            boxes = payload["boxes"] if isinstance(payload, dict) else payload
            return [DetectorBox(x=int(b["x"]), y=int(b["y"]),
                                w=int(b["w"]), h=int(b["h"]),
                                confidence=float(b["confidence"]))
                    for b in boxes]
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"malformed detector response: {exc}") from exc


# --- deterministic in-process mocks --------------------------------------

@dataclass
class MockDiffusionClient:
    """Seeded gradient images; stands in for the diffusion service."""

    fail_first: int = 0  # raise TransportError for this many initial calls
    calls: int = 0

    def generate(self, job: GenerationJob) -> ImageBuffer:
        self.calls += 1
        if self.calls <= self.fail_first:
            raise TransportError("mock transient failure")
        w, h = job.canvas
        rng = SplitMix64(job.spec.seed)
        phase = rng.next_double()
        tone = 0.25 + 0.5 * rng.next_double()
        xs = np.linspace(0.0, 1.0, w, dtype=np.float32)[None, :]
        ys = np.linspace(0.0, 1.0, h, dtype=np.float32)[:, None]
        r = (xs + phase) % 1.0 * np.ones_like(ys)
        g = np.broadcast_to(ys * tone, (h, w)).astype(np.float32)
        b = np.full((h, w), tone, dtype=np.float32)
        return ImageBuffer(np.stack([r.astype(np.float32), g, b], axis=2))


@dataclass
class MockDetectorClient:
    """Scriptable detector; default is one centered person-shaped box."""

    boxes_by_call: dict[int, list[DetectorBox]] = field(default_factory=dict)
    default_relative: tuple[float, float, float, float] = (0.4, 0.05, 0.2, 0.9)
    calls: int = 0

    def detect(self, png: bytes) -> list[DetectorBox]:
        call = self.calls
        self.calls += 1
        if call in self.boxes_by_call:
            return self.boxes_by_call[call]
        img = load_png(png)
        rx, ry, rw, rh = self.default_relative
        return [DetectorBox(x=int(img.width * rx), y=int(img.height * ry),
                            w=max(1, int(img.width * rw)),
                            h=max(1, int(img.height * rh)),
                            confidence=0.97)]


def resolve_diffusion(address: str) -> DiffusionService:
    if address.startswith("mock://"):
        return MockDiffusionClient()
    return HttpDiffusionClient(address)


def resolve_detector(address: str) -> DetectorService:
    if address.startswith("mock://"):
        return MockDetectorClient()
    return HttpDetectorClient(address)
