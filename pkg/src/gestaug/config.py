"""Run configuration: YAML file, environment override, then command-line flags.

Schema (version 1), every key optional::

    version: 1
    seed: 0
    copies: 3
    workers: 1
    fill: 0                    # rotate/zoom fill value
    contrast_pivot: fixed      # fixed (127.5) | mean
    crop_resize: true          # resize the crop window back to W x H
    png_compress_level: 6
    transforms: {crop: true, rotate: true, zoom: true, brightness_contrast: true}
    render: {width: 227, height: 227, joint_radius: 2, draw_bones: true,
             margin: 0.1, view: front_away, scheme: 14}

The file path comes from ``--config`` or, failing that, ``$GESTAUG_CONFIG``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .core import PNG_COMPRESS_LEVEL
from .render import RenderError, RenderSettings, Viewpoint
from .transforms import Toggles, TransformError, TransformOptions

CONFIG_ENV = "GESTAUG_CONFIG"
CONFIG_VERSION = 1

_TOP_KEYS = {"version", "seed", "copies", "workers", "fill", "contrast_pivot", "crop_resize",
             "png_compress_level", "transforms", "render"}
_RENDER_KEYS = {"width", "height", "joint_radius", "draw_bones", "margin", "view", "scheme"}
_TOGGLE_KEYS = {"crop", "rotate", "zoom", "brightness_contrast"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    copies: int = 3
    workers: int = 1
    options: TransformOptions = field(default_factory=TransformOptions)
    toggles: Toggles = field(default_factory=Toggles)
    render: RenderSettings = field(default_factory=RenderSettings)
    view: Viewpoint = field(default_factory=lambda: Viewpoint("front_away"))
    scheme: int = 14
    png_compress_level: int = PNG_COMPRESS_LEVEL

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.copies < 0:
            raise ConfigError(f"copies must be >= 0, got {self.copies}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.scheme not in (14, 21, 28):
            raise ConfigError(f"scheme must be 14, 21 or 28, got {self.scheme}")
        if not 0 <= self.png_compress_level <= 9:
            raise ConfigError(f"png_compress_level must be 0..9, got {self.png_compress_level}")


def _check_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def config_from_dict(d: dict, base: RunConfig = RunConfig()) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a mapping")
    _check_keys(d, _TOP_KEYS, "config")
    version = d.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}, expected {CONFIG_VERSION}")
    try:
        options = replace(
            base.options,
            **{k: d[k] for k in ("fill", "contrast_pivot", "crop_resize") if k in d},
        )
        toggles = base.toggles
        if "transforms" in d:
            _check_keys(d["transforms"], _TOGGLE_KEYS, "transforms")
            toggles = replace(toggles, **{k: bool(v) for k, v in d["transforms"].items()})
        render, view, scheme = base.render, base.view, base.scheme
        if "render" in d:
            r = dict(d["render"])
            _check_keys(r, _RENDER_KEYS, "render")
            if "view" in r:
                view = Viewpoint.parse(str(r.pop("view")))
            scheme = int(r.pop("scheme", scheme))
            render = replace(render, **r)
        return replace(
            base,
            seed=int(d.get("seed", base.seed)),
            copies=int(d.get("copies", base.copies)),
            workers=int(d.get("workers", base.workers)),
            png_compress_level=int(d.get("png_compress_level", base.png_compress_level)),
            options=options,
            toggles=toggles,
            render=render,
            view=view,
            scheme=scheme,
        )
    except (TransformError, RenderError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def config_path(explicit: Optional[str]) -> Optional[Path]:
    if explicit:
        return Path(explicit)
    env = os.environ.get(CONFIG_ENV)
    return Path(env) if env else None


def load_config(explicit: Optional[str] = None) -> RunConfig:
    path = config_path(explicit)
    if path is None:
        return RunConfig()
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data)
