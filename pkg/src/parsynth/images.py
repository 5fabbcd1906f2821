"""Float RGB image buffers with lossless PNG IO.

Pixels live as float32 in [0, 1], shape (height, width, 3); quantization to
8 bits happens only at PNG encode (round to nearest).  PNG is required so
byte-level golden tests stay meaningful.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ImageError(ValueError):
    pass


@dataclass(frozen=True)
class ImageBuffer:
    data: np.ndarray  # (h, w, 3) float32 in [0, 1]

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] != 3:
            raise ImageError(f"expected (h, w, 3) array, got shape {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ImageError("zero-sized image")
        if d.dtype != np.float32:
            raise ImageError(f"expected float32 data, got {d.dtype}")
        if not np.isfinite(d).all():
            raise ImageError("non-finite pixel values")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ImageError("pixel values outside [0, 1]")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_array(cls, arr: np.ndarray) -> ImageBuffer:
        return cls(np.ascontiguousarray(arr, dtype=np.float32))

    @classmethod
    def full(cls, width: int, height: int, value: float = 0.0) -> ImageBuffer:
        return cls(np.full((height, width, 3), value, dtype=np.float32))

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.rint(self.data * 255.0), 0, 255).astype(np.uint8)

    def png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.to_uint8(), mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    def save_png(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.png_bytes())


def clamp01(arr: np.ndarray) -> np.ndarray:
    return np.clip(arr, 0.0, 1.0).astype(np.float32, copy=False)


def load_png(source: str | Path | bytes) -> ImageBuffer:
    if isinstance(source, bytes):
        img = Image.open(io.BytesIO(source))
    else:
        img = Image.open(source)
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return ImageBuffer.from_array(arr)
