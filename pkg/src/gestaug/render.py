"""Render a skeleton sequence into one static spatiotemporal image.

All frames are projected orthographically onto the canvas and drawn oldest
first, each in a color whose luminance grows with time, so the trace of the
gesture and its direction are visible in a single RGB image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Image
from .datasets import SkeletonSequence

# SHREC'17 / DHG joint order: wrist, palm, then four joints per finger from thumb to pinky.
HAND_BONES = (
    (0, 1), (0, 2), (2, 3), (3, 4), (4, 5),
    (1, 6), (6, 7), (7, 8), (8, 9),
    (1, 10), (10, 11), (11, 12), (12, 13),
    (1, 14), (14, 15), (15, 16), (16, 17),
    (1, 18), (18, 19), (19, 20), (20, 21),
)
# JHMDB puppet joints: neck, belly, face, r/l shoulder, r/l hip, r/l elbow, r/l knee, r/l wrist, r/l ankle.
BODY15_BONES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (1, 5), (1, 6),
    (3, 7), (4, 8), (7, 11), (8, 12), (5, 9), (6, 10), (9, 13), (10, 14),
)
DEFAULT_BONES = {22: HAND_BONES, 15: BODY15_BONES}

# (t, R, G, B) anchors, dark blue -> magenta -> pale yellow. No channel ever
# decreases, so luminance stays monotone after per-channel rounding too.
RAMP_ANCHORS = ((0.0, 30, 30, 140), (0.5, 200, 60, 150), (1.0, 255, 240, 160))
LUMA = (0.299, 0.587, 0.114)

# normalized coordinates are snapped to this grid before rasterization so that
# translating or scaling a sequence cannot flip a pixel through float noise
_GRID = float(1 << 20)


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class Viewpoint:
    name: str
    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        if self.name not in ("top_down", "front_away", "side_left", "custom"):
            raise ValueError(f"unknown viewpoint {self.name!r}")
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ValueError("viewpoint angles must be finite")

    @classmethod
    def parse(cls, text: str) -> "Viewpoint":
        """``top_down``, ``front_away``, ``side_left`` or ``custom:<azimuth>,<elevation>`` (degrees)."""
        if text.startswith("custom"):
            _, _, rest = text.partition(":")
            try:
                az, el = (float(v) for v in rest.split(","))
            except ValueError:
                raise ValueError(f"custom viewpoint must look like custom:AZ,EL, got {text!r}") from None
            return cls("custom", az, el)
        return cls(text)

    def __str__(self):
        if self.name == "custom":
            return f"custom:{self.azimuth:g},{self.elevation:g}"
        return self.name


TOP_DOWN = Viewpoint("top_down")
FRONT_AWAY = Viewpoint("front_away")
SIDE_LEFT = Viewpoint("side_left")


@dataclass(frozen=True)
class RenderSettings:
    width: int = 227
    height: int = 227
    joint_radius: int = 2
    draw_bones: bool = True
    margin: float = 0.1
    bones: Optional[Tuple[Tuple[int, int], ...]] = None  # None: pick by joint count

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise RenderError(f"canvas must be at least 32x32, got {self.width}x{self.height}")
        if not 0.0 <= self.margin < 0.4:
            raise RenderError(f"margin must lie in [0, 0.4), got {self.margin}")
        if self.joint_radius < 0:
            raise RenderError(f"joint_radius must be >= 0, got {self.joint_radius}")
        if min(self._span()) < 0:
            raise RenderError("joint_radius too large for canvas and margin")

    def inset(self) -> Tuple[int, int]:
        return math.floor(self.margin * self.width), math.floor(self.margin * self.height)

    def _span(self) -> Tuple[int, int]:
        mx, my = self.inset()
        r = self.joint_radius
        return self.width - 1 - 2 * mx - 2 * r, self.height - 1 - 2 * my - 2 * r


def color_ramp(t: float) -> Tuple[int, int, int]:
    """Map a frame fraction in [0, 1] to an 8-bit RGB color."""
    t = min(max(t, 0.0), 1.0)
    for (t0, *c0), (t1, *c1) in zip(RAMP_ANCHORS, RAMP_ANCHORS[1:]):
        if t <= t1:
            f = (t - t0) / (t1 - t0)
            return tuple(int(math.floor(a + (b - a) * f + 0.5)) for a, b in zip(c0, c1))
    return tuple(RAMP_ANCHORS[-1][1:])


def luminance(rgb) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb[..., 0] * LUMA[0] + rgb[..., 1] * LUMA[1] + rgb[..., 2] * LUMA[2]


def project_points(points: np.ndarray, view: Viewpoint) -> np.ndarray:
    """Project ``(..., 3)`` points to ``(..., 2)`` plane coordinates ``(u, v)``, v pointing up."""
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    if view.name == "top_down":
        return np.stack([x, z], axis=-1)
    if view.name == "front_away":
        return np.stack([x, y], axis=-1)
    if view.name == "side_left":
        return np.stack([z, y], axis=-1)
    az = math.radians(view.azimuth)
    el = math.radians(view.elevation)
    ca, sa, ce, se = math.cos(az), math.sin(az), math.cos(el), math.sin(el)
    # yaw about the vertical axis, then pitch about the horizontal one; depth is dropped
    x1 = ca * x + sa * z
    z1 = ca * z - sa * x
    y2 = ce * y - se * z1
    return np.stack([x1, y2], axis=-1)


def project(joint: Sequence[float], view: Viewpoint) -> Tuple[float, float]:
    u, v = project_points(np.asarray(joint, dtype=np.float64), view)
    return float(u), float(v)


def _disk_offsets(r: int) -> np.ndarray:
    d = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(d, d, indexing="ij")
    keep = dx * dx + dy * dy <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1)


def _line_pixels(r0: int, c0: int, r1: int, c1: int) -> np.ndarray:
    n = max(abs(r1 - r0), abs(c1 - c0))
    if n == 0:
        return np.array([[r0, c0]])
    i = np.arange(n + 1)
    # integer round-half-up of r0 + i*dr/n, exact for any coordinates
    rows = r0 + (2 * i * (r1 - r0) + n) // (2 * n)
    cols = c0 + (2 * i * (c1 - c0) + n) // (2 * n)
    return np.stack([rows, cols], axis=1)


def _pixel_centers(uv: np.ndarray, settings: RenderSettings) -> np.ndarray:
    """Map projected coordinates (T, J, 2) to integer (row, col) disk centers."""
    lo = uv.reshape(-1, 2).min(axis=0)
    hi = uv.reshape(-1, 2).max(axis=0)
    size = hi - lo
    if not np.all(np.isfinite(size)):
        # huge but finite coordinates; power-of-two rescale is exact
        k = int(np.ceil(np.log2(np.max(np.abs(uv))))) + 2
        uv = np.ldexp(uv, -k)
        lo, hi = np.ldexp(lo, -k), np.ldexp(hi, -k)
        size = hi - lo
    extent = float(size.max())
    mx, my = settings.inset()
    r = settings.joint_radius
    span_x, span_y = settings._span()
    span = min(span_x, span_y)
    if extent <= 0.0:
        rows = np.full(uv.shape[:2], my + r + span_y / 2.0)
        cols = np.full(uv.shape[:2], mx + r + span_x / 2.0)
    else:
        nu = np.floor((uv[..., 0] - lo[0]) / extent * _GRID + 0.5) / _GRID
        nv = np.floor((hi[1] - uv[..., 1]) / extent * _GRID + 0.5) / _GRID
        used_u = np.floor(size[0] / extent * _GRID + 0.5) / _GRID
        used_v = np.floor(size[1] / extent * _GRID + 0.5) / _GRID
        cols = mx + r + (span_x - used_u * span) / 2.0 + nu * span
        rows = my + r + (span_y - used_v * span) / 2.0 + nv * span
    rows = np.clip(np.floor(rows + 0.5), my + r, settings.height - 1 - my - r).astype(np.int64)
    cols = np.clip(np.floor(cols + 0.5), mx + r, settings.width - 1 - mx - r).astype(np.int64)
    return np.stack([rows, cols], axis=-1)


def render_sequence(seq: SkeletonSequence, view: Viewpoint = FRONT_AWAY,
                    settings: RenderSettings = RenderSettings()) -> Image:
    if seq.num_frames == 0 or seq.joint_count == 0:
        raise RenderError("cannot render an empty sequence")
    if not np.all(np.isfinite(seq.frames)):
        raise RenderError("sequence contains non-finite coordinates")
    centers = _pixel_centers(project_points(seq.frames, view), settings)
    canvas = np.zeros((settings.height, settings.width, 3), dtype=np.uint8)
    offsets = _disk_offsets(settings.joint_radius)
    bones = ()
    if settings.draw_bones:
        bones = settings.bones if settings.bones is not None else DEFAULT_BONES.get(seq.joint_count, ())
    T = seq.num_frames
    for t in range(T):
        color = color_ramp(t / (T - 1) if T > 1 else 0.0)
        pts = centers[t]
        for a, b in bones:
            if a < seq.joint_count and b < seq.joint_count:
                line = _line_pixels(*pts[a], *pts[b])
                canvas[line[:, 0], line[:, 1]] = color
        disk = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        canvas[disk[:, 0], disk[:, 1]] = color
    return Image(canvas)
