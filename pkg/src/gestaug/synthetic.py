"""Synthetic fixtures for benchmarks and tests: smooth images and random-walk skeletons."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import HardLabel, Image, sha256_hex, encode_png
from .datasets import SkeletonSequence
from .pipeline import IMAGES_DIR, MANIFEST_NAME, Manifest, ManifestEntry, file_stem


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(3 * sigma + 0.5))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of an (H, W, C) float array, edges reflected."""
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    out = np.pad(arr, ((r, r), (0, 0), (0, 0)), mode="reflect")
    out = sum(k[i] * out[i:i + arr.shape[0]] for i in range(len(k)))
    out = np.pad(out, ((0, 0), (r, r), (0, 0)), mode="reflect")
    return sum(k[i] * out[:, i:i + arr.shape[1]] for i in range(len(k)))


def smooth_image(rng: np.random.Generator, width: int = 227, height: int = 227,
                 channels: int = 3, sigma: float = 4.0) -> Image:
    """Gaussian-blurred uniform noise, contrast-stretched to the full 8-bit range."""
    noise = rng.random((height, width, channels))
    b = blur(noise, sigma)
    lo, hi = b.min(), b.max()
    b = (b - lo) / (hi - lo if hi > lo else 1.0) * 255.0
    return Image(np.floor(b + 0.5).astype(np.uint8))


def random_walk_sequence(rng: np.random.Generator, frames: int = 20, joints: int = 22,
                         step: float = 0.01) -> SkeletonSequence:
    base = rng.normal(scale=0.05, size=(1, joints, 3))
    drift = np.cumsum(rng.normal(scale=step, size=(frames, 1, 3)), axis=0)
    return SkeletonSequence(base + drift)


def write_image_dataset(out_dir, images, num_classes: int = 14, prefix: str = "syn") -> Manifest:
    """Write ``images`` as originals of a fresh manifest (copies_per_sample 0)."""
    out_dir = Path(out_dir)
    (out_dir / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    entries = []
    for i, img in enumerate(images):
        sid = f"{prefix}/{i:05d}"
        rel = f"{IMAGES_DIR}/{file_stem(sid)}.png"
        png = encode_png(img)
        (out_dir / rel).write_bytes(png)
        entries.append(ManifestEntry(sid, HardLabel(i % num_classes, num_classes), rel,
                                     sha256_hex(png), shape=img.shape))
    m = Manifest(copies_per_sample=0, entries=entries, root=out_dir).sort()
    m.save(out_dir / MANIFEST_NAME)
    return m


def synthetic_dataset(out_dir, n: int, size: int = 227, seed: int = 0, num_classes: int = 14) -> Manifest:
    rng = np.random.default_rng(seed)
    return write_image_dataset(out_dir, (smooth_image(rng, size, size) for _ in range(n)), num_classes)
