"""Seeded parameter sampling.

Each (global seed, sample id, copy index) triple gets its own generator so
that a sample's parameters never depend on processing order or on which
worker handles it.

Algorithm (fixed, so ports in other languages reproduce datasets exactly):

* key: ``BLAKE2b`` with an 8-byte digest over
  ``seed as uint64 little-endian || copy_index as uint32 little-endian || utf-8(sample_id)``,
  read as a little-endian uint64.
* stream: SplitMix64 seeded with that key.
* uniform double: ``(next_u64() >> 11) * 2**-53``, in ``[0, 1)``.
"""

from __future__ import annotations

import hashlib
import struct

from .transforms import (
    BETA_RANGE,
    CROP_SCALES,
    GAMMA_RANGE,
    THETA_RANGE,
    ZETA_RANGE,
    AugmentationParams,
)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Tiny deterministic 64-bit generator (Steele, Lea & Flood)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()


def derive_key(global_seed: int, sample_id: str, copy_index: int) -> int:
    payload = struct.pack("<QI", global_seed & MASK64, copy_index) + sample_id.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def derive_rng(global_seed: int, sample_id: str, copy_index: int) -> SplitMix64:
    if copy_index < 0:
        raise ValueError(f"copy_index must be non-negative, got {copy_index}")
    return SplitMix64(derive_key(global_seed, sample_id, copy_index))


def sample_params(rng: SplitMix64) -> AugmentationParams:
    """Draw one parameter set; consumes exactly seven uniforms in field order."""
    crop_scale = CROP_SCALES[0] if rng.random() < 0.5 else CROP_SCALES[1]
    offset_x = rng.random()
    offset_y = rng.random()
    theta = rng.uniform(*THETA_RANGE)
    zeta = rng.uniform(*ZETA_RANGE)
    beta = rng.uniform(*BETA_RANGE)
    gamma = rng.uniform(*GAMMA_RANGE)
    return AugmentationParams(crop_scale, offset_x, offset_y, theta, zeta, beta, gamma)


def params_for(global_seed: int, sample_id: str, copy_index: int) -> AugmentationParams:
    return sample_params(derive_rng(global_seed, sample_id, copy_index))
