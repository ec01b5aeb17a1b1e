"""MixUp and CutMix, the sample-mixing baselines.

Unlike the transforms in :mod:`gestaug.transforms` these change the label:
the result carries a soft label weighted by ``lam``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

from .core import (
    GestureSample, Image, SoftLabel, encode_png, quantize, read_png, round_half_away, sha256_hex,
)
from .pipeline import IMAGES_DIR, file_stem
from .sampler import derive_rng


class MixError(ValueError):
    pass


@dataclass(frozen=True)
class MixedSample:
    image: Image
    label: SoftLabel
    parents: Tuple[str, str]
    lam: float
    box: Tuple[int, int, int, int] = None  # CutMix patch (x1, y1, x2, y2), end-exclusive

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise MixError(f"lambda must lie in [0, 1], got {self.lam}")


def _check_pair(a: GestureSample, b: GestureSample):
    if a.image.shape != b.image.shape:
        raise MixError(f"image shapes differ: {a.image.shape} vs {b.image.shape}")
    if a.label.num_classes != b.label.num_classes:
        raise MixError(f"label spaces differ: {a.label.num_classes} vs {b.label.num_classes} classes")


def mix_labels(a: GestureSample, b: GestureSample, lam: float) -> SoftLabel:
    probs = [0.0] * a.label.num_classes
    probs[a.label.class_index] += lam
    probs[b.label.class_index] += 1.0 - lam
    # same-class pairs can sum to 1 + ulp
    return SoftLabel(tuple(min(p, 1.0) for p in probs))


def mixup(a: GestureSample, b: GestureSample, lam: float) -> MixedSample:
    """Pixel-wise convex combination ``lam * a + (1 - lam) * b``."""
    _check_pair(a, b)
    if not 0.0 <= lam <= 1.0:
        raise MixError(f"lambda must lie in [0, 1], got {lam}")
    pa = a.image.pixels.astype(np.float64)
    pb = b.image.pixels.astype(np.float64)
    pixels = quantize(lam * pa + (1.0 - lam) * pb)
    return MixedSample(Image(pixels), mix_labels(a, b, lam), (a.sample_id, b.sample_id), lam)


def paste_box(a: GestureSample, b: GestureSample, box: Tuple[int, int, int, int]) -> MixedSample:
    """Replace ``a``'s pixels inside ``box`` (x1, y1, x2, y2; end-exclusive) with ``b``'s."""
    _check_pair(a, b)
    w, h = a.image.width, a.image.height
    x1, y1, x2, y2 = box
    x1, x2 = min(max(x1, 0), w), min(max(x2, 0), w)
    y1, y2 = min(max(y1, 0), h), min(max(y2, 0), h)
    x2, y2 = max(x1, x2), max(y1, y2)
    pixels = a.image.pixels.copy()
    pixels[y1:y2, x1:x2] = b.image.pixels[y1:y2, x1:x2]
    lam = (w * h - (x2 - x1) * (y2 - y1)) / (w * h)  # one rounding, exact for the area ratio
    return MixedSample(Image(pixels), mix_labels(a, b, lam), (a.sample_id, b.sample_id), lam, (x1, y1, x2, y2))


def cutmix_box(width: int, height: int, rng) -> Tuple[int, int, int, int]:
    """Draw a patch: ``lam0 ~ U[0,1]``, sides scaled by ``sqrt(1 - lam0)``, uniform center.

    Draws exactly three uniforms from ``rng`` (lam0, center x, center y).
    """
    lam0 = rng.random()
    cx = rng.random() * width
    cy = rng.random() * height
    cut = math.sqrt(1.0 - lam0)
    half_w = width * cut / 2.0
    half_h = height * cut / 2.0
    x1 = min(max(round_half_away(cx - half_w), 0), width)
    x2 = min(max(round_half_away(cx + half_w), 0), width)
    y1 = min(max(round_half_away(cy - half_h), 0), height)
    y2 = min(max(round_half_away(cy + half_h), 0), height)
    return x1, y1, x2, y2


def cutmix(a: GestureSample, b: GestureSample, rng) -> MixedSample:
    """Paste a random patch of ``b`` into ``a``; ``lam`` is the exact surviving area of ``a``."""
    _check_pair(a, b)
    return paste_box(a, b, cutmix_box(a.image.width, a.image.height, rng))


# -- mixed datasets -------------------------------------------------------------

MIXED_FORMAT = "gestaug-mixed"
MIXED_VERSION = 1


def mix_dataset(manifest, out_dir, method: str = "mixup", seed: int = 0, lam="uniform"):
    """Mix every original with a seeded partner and write images plus a soft-label manifest.

    Partner and mixing weight for sample ``s`` come from
    ``derive_rng(seed, s, 0)``: first the partner index (``next_u64() % N``),
    then either ``lam`` (MixUp, uniform law) or the CutMix patch draws.
    Returns the list of written entry records.
    """
    if method not in ("mixup", "cutmix"):
        raise MixError(f"unknown mixing method {method!r}")
    if lam != "uniform" and not 0.0 <= float(lam) <= 1.0:
        raise MixError(f"lambda must be 'uniform' or lie in [0, 1], got {lam}")
    out_dir = Path(out_dir)
    (out_dir / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    originals = sorted(manifest.originals, key=lambda e: e.sample_id)
    records = []
    for e in originals:
        rng = derive_rng(seed, e.sample_id, 0)
        partner = originals[rng.next_u64() % len(originals)]
        a = GestureSample(read_png(manifest.resolve(e)), e.label, e.sample_id)
        b = GestureSample(read_png(manifest.resolve(partner)), partner.label, partner.sample_id)
        if method == "mixup":
            mixed = mixup(a, b, rng.random() if lam == "uniform" else float(lam))
        else:
            mixed = cutmix(a, b, rng)
        rel = f"{IMAGES_DIR}/{file_stem(e.sample_id)}__{method}.png"
        png = encode_png(mixed.image)
        (out_dir / rel).write_bytes(png)
        records.append({
            "record": "entry",
            "sample_id": f"{e.sample_id}#{method}",
            "parents": list(mixed.parents),
            "lambda": mixed.lam,
            "soft_label": list(mixed.label.probabilities),
            "box": None if mixed.box is None else list(mixed.box),
            "image_path": rel,
            "digest": sha256_hex(png),
        })
    header = {"record": "header", "format": MIXED_FORMAT, "version": MIXED_VERSION,
              "method": method, "seed": seed, "lambda_law": str(lam), "count": len(records)}
    lines = [json.dumps(header, sort_keys=True)] + [json.dumps(r, sort_keys=True) for r in records]
    (out_dir / "mixed.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return records
