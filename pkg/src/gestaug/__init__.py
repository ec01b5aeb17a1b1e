"""Deterministic augmentation of rendered skeleton-gesture datasets."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .core import GestureSample, HardLabel, Image, SoftLabel, hard_to_soft, image_mean
from .transforms import (
    AugmentationParams,
    Toggles,
    TransformOptions,
    adjust_brightness,
    adjust_contrast,
    apply_chain,
    crop,
    rotate,
    zoom,
)
from .sampler import derive_rng, sample_params
from .pipeline import augment_dataset, augment_sample, load_manifest, verify_manifest
from .baselines import cutmix, mixup

__all__ = [
    "BACKEND", "GestureSample", "HardLabel", "Image", "SoftLabel", "hard_to_soft", "image_mean",
    "AugmentationParams", "Toggles", "TransformOptions", "adjust_brightness", "adjust_contrast",
    "apply_chain", "crop", "rotate", "zoom", "derive_rng", "sample_params",
    "augment_dataset", "augment_sample", "load_manifest", "verify_manifest", "cutmix", "mixup",
]
