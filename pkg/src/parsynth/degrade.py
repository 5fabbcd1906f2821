"""Surveillance-style image degradation chain.

Stage order is fixed and intentional: seeded grayscale noise composited in
soft-light mode, pixelation (nearest-neighbor downscale then bilinear
upscale), a small truncated Gaussian blur, then a contrast/brightness pull.
Each stage maps [0, 1] into [0, 1] and the whole chain is a pure function
of (image, params), bit-identical regardless of scheduling.

Formula choices that golden tests lock down:

* soft-light uses the W3C compositing definition (base b, source s):
  ``b - (1-2s)·b·(1-b)`` for s <= 0.5, else ``b + (2s-1)·(D(b)-b)`` with
  ``D(x) = ((16x-12)x+4)x`` for x <= 0.25 and ``sqrt(x)`` above;
* resampling sizes round down: ``floor(dim * scale)``; sample positions use
  pixel-center alignment;
* blur kernels are truncated at +/- radius and renormalized, with
  clamp-to-edge borders;
* contrast pivots at 0.5, then brightness multiplies:
  ``((v - 0.5)·contrast + 0.5)·brightness``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .images import ImageBuffer, clamp01
from .rng import uniform_doubles


@dataclass(frozen=True)
class DegradeParams:
    noise_blend: float = 0.50
    noise_size: tuple[int, int] = (1024, 1024)  # (width, height)
    downscale: float = 0.33
    upscale: float = 3.00
    blur_radius: int = 5
    blur_sigma: float = 0.4
    contrast: float = 0.80
    brightness: float = 0.90
    noise_seed: int = 123456789

    def __post_init__(self):
        if not 0.0 <= self.noise_blend <= 1.0:
            raise ValueError("noise_blend must be in [0, 1]")
        if self.downscale <= 0 or self.upscale <= 0:
            raise ValueError("scales must be positive")
        if self.blur_sigma <= 0:
            raise ValueError("blur_sigma must be positive")
        if self.blur_radius < 0:
            raise ValueError("blur_radius must be non-negative")


def generate_noise(seed: int, width: int, height: int) -> ImageBuffer:
    """Seeded grayscale noise replicated across the three channels.

    Values are uniform in [0, 1), one PRNG draw per pixel in row-major
    order, so a (seed, size) pair always produces the same field.
    """
    if width < 1 or height < 1:
        raise ValueError("noise dimensions must be >= 1")
    flat = uniform_doubles(seed, width * height).astype(np.float32)
    gray = flat.reshape(height, width)
    return ImageBuffer(np.repeat(gray[:, :, None], 3, axis=2))


def _soft_light(base: np.ndarray, source: np.ndarray) -> np.ndarray:
    low = base - (1.0 - 2.0 * source) * base * (1.0 - base)
    d = np.where(base <= 0.25,
                 ((16.0 * base - 12.0) * base + 4.0) * base,
                 np.sqrt(np.maximum(base, 0.0)))
    high = base + (2.0 * source - 1.0) * (d - base)
    return np.where(source <= 0.5, low, high)


def _resample_nearest(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w = arr.shape[:2]
    xs = np.minimum(((np.arange(out_w) + 0.5) * in_w / out_w).astype(np.int64),
                    in_w - 1)
    ys = np.minimum(((np.arange(out_h) + 0.5) * in_h / out_h).astype(np.int64),
                    in_h - 1)
    return arr[ys[:, None], xs[None, :]]


def _resample_bilinear(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w = arr.shape[:2]
    # pixel-center alignment; coordinates clamped so borders extend
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * in_w / out_w - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * in_h / out_h - 0.5
    xs = np.clip(xs, 0.0, in_w - 1.0)
    ys = np.clip(ys, 0.0, in_h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    wx = (xs - x0).astype(np.float32)[None, :, None]
    wy = (ys - y0).astype(np.float32)[:, None, None]
    top = arr[y0[:, None], x0[None, :]] * (1 - wx) + arr[y0[:, None], x1[None, :]] * wx
    bot = arr[y1[:, None], x0[None, :]] * (1 - wx) + arr[y1[:, None], x1[None, :]] * wx
    return top * (1 - wy) + bot * wy


def soft_light_blend(base: ImageBuffer, noise: ImageBuffer,
                     t: float) -> ImageBuffer:
    """Blend ``t`` of the soft-light composite into the base image.

    The noise layer is resampled (nearest) to the base dimensions when they
    differ.  t=0 returns the base exactly.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("blend fraction must be in [0, 1]")
    src = noise.data
    if noise.data.shape[:2] != base.data.shape[:2]:
        src = _resample_nearest(noise.data, base.width, base.height)
    if t == 0.0:
        return base
    out = (1.0 - t) * base.data + t * _soft_light(base.data, src)
    return ImageBuffer(clamp01(out))


def pixelate(img: ImageBuffer, down: float, up: float) -> ImageBuffer:
    """Nearest-neighbor downscale then bilinear upscale, floor-rounded dims."""
    mid_w = int(np.floor(img.width * down))
    mid_h = int(np.floor(img.height * down))
    if mid_w < 1 or mid_h < 1:
        raise ValueError(
            f"downscale {down} collapses {img.width}x{img.height} to zero")
    out_w = int(np.floor(mid_w * up))
    out_h = int(np.floor(mid_h * up))
    if out_w < 1 or out_h < 1:
        raise ValueError("upscale produces a zero-sized image")
    mid = _resample_nearest(img.data, mid_w, mid_h)
    return ImageBuffer(clamp01(_resample_bilinear(mid, out_w, out_h)))


def gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_blur(img: ImageBuffer, radius: int, sigma: float) -> ImageBuffer:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if radius == 0:
        return img
    k = gaussian_kernel(radius, sigma)
    data = img.data.astype(np.float64)
    padded = np.pad(data, ((0, 0), (radius, radius), (0, 0)), mode="edge")
    horiz = np.zeros_like(data)
    for j, w in enumerate(k):
        horiz += w * padded[:, j:j + img.width]
    padded = np.pad(horiz, ((radius, radius), (0, 0), (0, 0)), mode="edge")
    out = np.zeros_like(data)
    for j, w in enumerate(k):
        out += w * padded[j:j + img.height, :]
    return ImageBuffer(clamp01(out.astype(np.float32)))


def brightness_contrast(img: ImageBuffer, contrast: float,
                        brightness: float) -> ImageBuffer:
    out = ((img.data - 0.5) * contrast + 0.5) * brightness
    return ImageBuffer(clamp01(out))


def degrade_chain(img: ImageBuffer, p: DegradeParams) -> ImageBuffer:
    noise = generate_noise(p.noise_seed, *p.noise_size)
    out = soft_light_blend(img, noise, p.noise_blend)
    out = pixelate(out, p.downscale, p.upscale)
    out = gaussian_blur(out, p.blur_radius, p.blur_sigma)
    return brightness_contrast(out, p.contrast, p.brightness)
