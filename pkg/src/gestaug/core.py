"""Domain types and raster utilities shared by the rest of the package.

Images are stored as read-only ``uint8`` arrays of shape ``(H, W, C)``
(row-major, channel-interleaved) with ``C`` in ``{1, 3}``.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from PIL import Image as PILImage

VALID_CHANNELS = (1, 3)
VALID_NUM_CLASSES = (14, 21, 28)
SOFT_LABEL_TOLERANCE = 1e-9
PNG_COMPRESS_LEVEL = 6
# zlib Z_RLE: several times faster than the default strategy on these rasters, similar size
PNG_ZLIB_STRATEGY = 3


class ImageError(ValueError):
    """Raised for malformed rasters or undecodable image files."""


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to ``[0, 255]``.

    Negative inputs always clamp to 0, so ``floor(v + 0.5)`` is equivalent
    to round-half-away-from-zero on the whole real line here.
    """
    out = np.floor(np.asarray(values, dtype=np.float64) + 0.5)
    np.clip(out, 0.0, 255.0, out=out)
    return out.astype(np.uint8)


def round_half_away(value: float) -> int:
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


class Image:
    """Immutable 8-bit raster."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ImageError(f"expected an (H, W, C) array, got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ImageError(f"image must be at least 1x1, got {w}x{h}")
        if c not in VALID_CHANNELS:
            raise ImageError(f"channels must be 1 or 3, got {c}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ImageError(f"pixel dtype must be integral, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ImageError("pixel values must lie in [0, 255]")
        arr = np.ascontiguousarray(arr, dtype=np.uint8).copy()
        arr.flags.writeable = False
        self._pixels = arr

    @classmethod
    def from_bytes(cls, width: int, height: int, channels: int, data: bytes) -> "Image":
        if width < 1 or height < 1:
            raise ImageError(f"image must be at least 1x1, got {width}x{height}")
        if len(data) != width * height * channels:
            raise ImageError(
                f"data length {len(data)} != W*H*C = {width * height * channels}"
            )
        arr = np.frombuffer(bytes(data), dtype=np.uint8).reshape(height, width, channels)
        return cls(arr)

    @classmethod
    def full(cls, width: int, height: int, value: Union[int, Sequence[int]], channels: int = 3) -> "Image":
        arr = np.empty((height, width, channels), dtype=np.uint8)
        arr[...] = value
        return cls(arr)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def channels(self) -> int:
        return self._pixels.shape[2]

    @property
    def shape(self) -> tuple:
        return self._pixels.shape

    @property
    def data(self) -> bytes:
        return self._pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._pixels, other._pixels)

    def __hash__(self):
        return hash((self.shape, self.data))

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height}, channels={self.channels})"


@dataclass(frozen=True)
class HardLabel:
    class_index: int
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be positive, got {self.num_classes}")
        if not 0 <= self.class_index < self.num_classes:
            raise ValueError(
                f"class_index {self.class_index} outside [0, {self.num_classes})"
            )

    def to_dict(self) -> dict:
        return {"class_index": self.class_index, "num_classes": self.num_classes}

    @classmethod
    def from_dict(cls, d: dict) -> "HardLabel":
        return cls(int(d["class_index"]), int(d["num_classes"]))


@dataclass(frozen=True)
class SoftLabel:
    probabilities: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        if not probs:
            raise ValueError("soft label must have at least one class")
        if any(p < 0.0 or p > 1.0 or math.isnan(p) for p in probs):
            raise ValueError("soft label entries must lie in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > SOFT_LABEL_TOLERANCE:
            raise ValueError(f"soft label sums to {math.fsum(probs)}, expected 1")
        object.__setattr__(self, "probabilities", probs)

    @property
    def num_classes(self) -> int:
        return len(self.probabilities)


@dataclass(frozen=True)
class GestureSample:
    """An image plus its label and identity.

    ``copy_index`` is ``None`` for originals and 1..3 (or up to the configured
    copy count) for augmented variants.
    """

    image: Image
    label: HardLabel
    sample_id: str
    copy_index: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.copy_index is not None and self.copy_index < 1:
            raise ValueError(f"copy_index must be >= 1, got {self.copy_index}")

    @property
    def is_original(self) -> bool:
        return self.copy_index is None


def image_mean(img: Image) -> np.ndarray:
    """Per-channel arithmetic mean, shape ``(C,)``."""
    return img.pixels.reshape(-1, img.channels).mean(axis=0, dtype=np.float64)


def hard_to_soft(label: HardLabel) -> SoftLabel:
    probs = [0.0] * label.num_classes
    probs[label.class_index] = 1.0
    return SoftLabel(tuple(probs))


# -- PNG I/O ---------------------------------------------------------------

def encode_png(img: Image, compress_level: int = PNG_COMPRESS_LEVEL) -> bytes:
    px = img.pixels
    if img.channels == 1:
        pil = PILImage.fromarray(px[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(px, mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG", compress_level=compress_level, compress_type=PNG_ZLIB_STRATEGY)
    return buf.getvalue()


def decode_png(data: bytes) -> Image:
    try:
        pil = PILImage.open(io.BytesIO(data))
        pil.load()
    except Exception as exc:  # PIL raises a zoo of exception types
        raise ImageError(f"cannot decode PNG: {exc}") from exc
    if pil.mode in ("RGBA", "LA", "PA") or "transparency" in pil.info:
        raise ImageError(f"alpha channels are not supported (mode {pil.mode})")
    if pil.mode == "1":
        pil = pil.convert("L")
    elif pil.mode not in ("L", "RGB"):
        pil = pil.convert("RGB")
    return Image(np.asarray(pil))


def read_png(path: Union[str, Path]) -> Image:
    return decode_png(Path(path).read_bytes())


def write_png(img: Image, path: Union[str, Path], compress_level: int = PNG_COMPRESS_LEVEL) -> str:
    """Write ``img`` and return the SHA-256 hex digest of the file bytes."""
    data = encode_png(img, compress_level)
    Path(path).write_bytes(data)
    return sha256_hex(data)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
