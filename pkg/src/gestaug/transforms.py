"""Crop, rotation, zoom and brightness/contrast transforms and their fixed chain.

Every transform maps an :class:`~gestaug.core.Image` to a new image of the
same size (crop resizes its window back to the input size unless told not
to). Geometric transforms resample by inverse mapping with bilinear
interpolation; every op quantizes exactly once, at its output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import _backend
from ._warp_py import BORDER_CLAMP, BORDER_CONSTANT
from .core import Image, image_mean, quantize, round_half_away

CROP_SCALES = (0.90, 0.95)
THETA_RANGE = (-15.0, 15.0)
ZETA_RANGE = (0.90, 1.10)
BETA_RANGE = (0.8, 1.2)
GAMMA_RANGE = (0.8, 1.2)
OFFSET_RANGE = (0.0, 1.0)
CONTRAST_PIVOT = 127.5

PARAM_RANGES = {
    "crop_offset_x": OFFSET_RANGE,
    "crop_offset_y": OFFSET_RANGE,
    "theta_deg": THETA_RANGE,
    "zeta": ZETA_RANGE,
    "beta": BETA_RANGE,
    "gamma": GAMMA_RANGE,
}


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentationParams:
    crop_scale: float
    crop_offset_x: float
    crop_offset_y: float
    theta_deg: float
    zeta: float
    beta: float
    gamma: float

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise TransformError("; ".join(problems))

    def violations(self) -> list:
        """Describe every field outside its permitted range (empty if valid)."""
        return params_violations(asdict(self))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentationParams":
        return cls(**{f.name: float(d[f.name]) for f in fields(cls)})

    @classmethod
    def identity(cls) -> "AugmentationParams":
        # 1.0 is not a sampled crop scale; build without validation
        obj = object.__new__(cls)
        for name, value in (("crop_scale", 1.0), ("crop_offset_x", 0.0), ("crop_offset_y", 0.0),
                            ("theta_deg", 0.0), ("zeta", 1.0), ("beta", 1.0), ("gamma", 1.0)):
            object.__setattr__(obj, name, value)
        return obj


def params_violations(d: dict) -> list:
    problems = []
    scale = d.get("crop_scale")
    if scale not in CROP_SCALES:
        problems.append(f"crop_scale={scale!r} not in {CROP_SCALES}")
    for name, (lo, hi) in PARAM_RANGES.items():
        v = d.get(name)
        if not isinstance(v, (int, float)) or not lo <= v <= hi:
            problems.append(f"{name}={v!r} outside [{lo}, {hi}]")
    return problems


@dataclass(frozen=True)
class TransformOptions:
    """Knobs that are fixed per run rather than sampled per image."""

    fill: int = 0
    contrast_pivot: str = "fixed"  # "fixed" (127.5) or "mean" (per-channel image mean)
    crop_resize: bool = True

    def __post_init__(self):
        if not 0 <= self.fill <= 255:
            raise TransformError(f"fill must be in [0, 255], got {self.fill}")
        if self.contrast_pivot not in ("fixed", "mean"):
            raise TransformError(f"contrast_pivot must be 'fixed' or 'mean', got {self.contrast_pivot!r}")


@dataclass(frozen=True)
class Toggles:
    """Per-transform enable flags; a disabled transform is the identity."""

    crop: bool = True
    rotate: bool = True
    zoom: bool = True
    brightness_contrast: bool = True

    @classmethod
    def none(cls) -> "Toggles":
        return cls(False, False, False, False)

    @classmethod
    def only(cls, name: str) -> "Toggles":
        if name not in {f.name for f in fields(cls)}:
            raise TransformError(f"unknown transform {name!r}")
        return cls(**{f.name: f.name == name for f in fields(cls)})


DEFAULT_OPTIONS = TransformOptions()
ALL_ON = Toggles()


def _warp(img: Image, out_h: int, out_w: int, matrix, border: int, fill: int = 0) -> Image:
    (m00, m01, m02), (m10, m11, m12) = matrix
    out = _backend.warp_affine(img.pixels, out_h, out_w, m00, m01, m02, m10, m11, m12, border, fill)
    return Image(out)


def crop_window(width: int, height: int, crop_scale: float, offset_x: float, offset_y: float):
    """Return ``(x, y, w, h)`` of the crop window inside a ``width`` x ``height`` image."""
    if not 0.0 < crop_scale <= 1.0:
        raise TransformError(f"crop_scale must lie in (0, 1], got {crop_scale}")
    if not (0.0 <= offset_x <= 1.0 and 0.0 <= offset_y <= 1.0):
        raise TransformError(f"crop offsets must lie in [0, 1], got ({offset_x}, {offset_y})")
    # 0.95 * 20 is 18.999... in binary; the epsilon keeps the floor exact
    ww = math.floor(crop_scale * width + 1e-9)
    wh = math.floor(crop_scale * height + 1e-9)
    if ww == 0 or wh == 0:
        raise TransformError(f"crop window is empty for a {width}x{height} image at scale {crop_scale}")
    x = round_half_away(offset_x * (width - ww))
    y = round_half_away(offset_y * (height - wh))
    return x, y, ww, wh


def resize(img: Image, width: int, height: int) -> Image:
    """Bilinear resize with pixel-center alignment and edge clamping."""
    sx = img.width / width
    sy = img.height / height
    matrix = ((sx, 0.0, 0.5 * sx - 0.5), (0.0, sy, 0.5 * sy - 0.5))
    return _warp(img, height, width, matrix, BORDER_CLAMP)


def crop(img: Image, crop_scale: float, offset_x: float, offset_y: float, resize_back: bool = True) -> Image:
    x, y, ww, wh = crop_window(img.width, img.height, crop_scale, offset_x, offset_y)
    window = Image(img.pixels[y:y + wh, x:x + ww])
    if not resize_back:
        return window
    return resize(window, img.width, img.height)


_RIGHT_ANGLES = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def _cos_sin(theta_deg: float):
    turns = theta_deg % 360.0
    if turns in _RIGHT_ANGLES:
        return _RIGHT_ANGLES[int(turns)]
    rad = math.radians(theta_deg)
    return math.cos(rad), math.sin(rad)


def rotate(img: Image, theta_deg: float, fill: int = 0) -> Image:
    """Rotate counter-clockwise (as displayed, rows growing downward) about the center."""
    if not math.isfinite(theta_deg):
        raise TransformError(f"theta must be finite, got {theta_deg}")
    c, s = _cos_sin(theta_deg)
    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0
    matrix = (
        (c, -s, cx - c * cx + s * cy),
        (s, c, cy - s * cx - c * cy),
    )
    return _warp(img, img.height, img.width, matrix, BORDER_CONSTANT, fill)


def zoom(img: Image, zeta: float, fill: int = 0) -> Image:
    """Scale about the center; ``zeta > 1`` magnifies, ``zeta < 1`` shrinks onto a ``fill`` band."""
    if not zeta > 0.0 or not math.isfinite(zeta):
        raise TransformError(f"zoom factor must be positive, got {zeta}")
    inv = 1.0 / zeta
    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0
    matrix = ((inv, 0.0, cx - cx * inv), (0.0, inv, cy - cy * inv))
    return _warp(img, img.height, img.width, matrix, BORDER_CONSTANT, fill)


def _apply_lut(img: Image, luts: np.ndarray) -> Image:
    px = img.pixels
    if luts.ndim == 1:
        return Image(np.take(luts, px))
    out = np.empty_like(px)
    for k in range(img.channels):
        out[:, :, k] = np.take(luts[k], px[:, :, k])
    return Image(out)


_LEVELS = np.arange(256, dtype=np.float64)


def brightness_lut(beta: float) -> np.ndarray:
    if not beta > 0.0:
        raise TransformError(f"brightness factor must be positive, got {beta}")
    return quantize(beta * _LEVELS)


def contrast_lut(gamma: float, pivot: float = CONTRAST_PIVOT) -> np.ndarray:
    if not gamma > 0.0:
        raise TransformError(f"contrast factor must be positive, got {gamma}")
    return quantize((_LEVELS - pivot) * gamma + pivot)


def adjust_brightness(img: Image, beta: float) -> Image:
    return _apply_lut(img, brightness_lut(beta))


def adjust_contrast(img: Image, gamma: float, pivot: Optional[float] = CONTRAST_PIVOT) -> Image:
    """Stretch values about ``pivot``; ``pivot=None`` uses each channel's mean."""
    if pivot is None:
        return _apply_lut(img, np.stack([contrast_lut(gamma, m) for m in image_mean(img)]))
    return _apply_lut(img, contrast_lut(gamma, pivot))


def apply_chain(
    img: Image,
    p: AugmentationParams,
    options: TransformOptions = DEFAULT_OPTIONS,
    toggles: Toggles = ALL_ON,
) -> Image:
    """crop -> rotate -> zoom -> brightness -> contrast."""
    out = img
    if toggles.crop:
        out = crop(out, p.crop_scale, p.crop_offset_x, p.crop_offset_y, resize_back=options.crop_resize)
    if toggles.rotate:
        out = rotate(out, p.theta_deg, options.fill)
    if toggles.zoom:
        out = zoom(out, p.zeta, options.fill)
    if toggles.brightness_contrast:
        if options.contrast_pivot == "fixed":
            # both are per-value maps, so composing the tables is exact
            out = _apply_lut(out, np.take(contrast_lut(p.gamma), brightness_lut(p.beta)))
        else:
            out = adjust_contrast(adjust_brightness(out, p.beta), p.gamma, None)
    return out
