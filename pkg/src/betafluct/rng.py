"""Deterministic, splittable random sampling primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class RngStream:
    """A reproducible random stream addressed by (master_seed, stream_index).

    Equal addresses always replay the same sequence; distinct stream indices
    give statistically independent streams, so parallel workers can each own
    one stream and merged results do not depend on scheduling.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError(f"stream_index must be non-negative, got {stream_index}")
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        self._generator = np.random.default_rng(seq)

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


@dataclass(frozen=True)
class DistParams:
    """Validated parameter record for the sampling primitives.

    u: chi degrees of freedom (> 0), s: second Beta parameter (> 0),
    mean/sd: Gaussian location and scale (sd >= 0).
    """

    u: float = 1.0
    s: float = 1.0
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError(f"chi degrees of freedom must be positive, got {self.u}")
        if self.s <= 0:
            raise ValueError(f"beta parameter s must be positive, got {self.s}")
        if self.sd < 0:
            raise ValueError(f"standard deviation must be non-negative, got {self.sd}")


def gaussian_sample(mean, sd, rng: RngStream, size=None):
    """Draw from N(mean, sd^2); sd = 0 returns mean exactly."""
    if np.any(np.asarray(sd) < 0):
        raise ValueError("standard deviation must be non-negative")
    return rng.generator.normal(mean, sd, size)


def chi_sample(u, rng: RngStream, size=None):
    """Draw a chi variable with u > 0 (possibly non-integer) degrees of freedom.

    Uses the identity chi_u = sqrt(2 * Gamma(u/2)); the gamma sampler handles
    every real shape, including shape < 1.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("chi degrees of freedom must be positive")
    shape = u / 2.0 if size is None else np.broadcast_to(u / 2.0, size)
    return np.sqrt(2.0 * rng.generator.standard_gamma(shape))


def beta_1s_sample(s, rng: RngStream, size=None):
    """Draw from Beta(1, s) by inverse CDF: x = 1 - U^(1/s)."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("beta parameter s must be positive")
    u = rng.generator.random(size if size is not None else s.shape or None)
    return 1.0 - u ** (1.0 / s)


TWO_PI = 2.0 * math.pi
