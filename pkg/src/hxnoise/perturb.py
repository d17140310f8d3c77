"""Seeded Gaussian perturbation of training targets.

Noise is drawn once per training run from NumPy's PCG64 bit generator
(pinned; changing it changes every stored digest) and added to the two
output channels only. Inputs, test and validation data are never touched.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .prep import RegularFrame

BIT_GENERATOR = "PCG64"


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise scale must be non-negative, got {self.sigma}")


def derive_stream_seed(master_seed: int, task_label: str) -> int:
    """Stable 64-bit seed for one task: first 8 bytes of SHA-256 over ``"<seed>/<label>"``."""
    digest = hashlib.sha256(f"{int(master_seed)}/{task_label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def inject_noise(targets: np.ndarray, cfg: NoiseConfig) -> np.ndarray:
    """Return ``targets + N(0, sigma^2)`` drawn independently per scalar.

    ``targets`` is an ``(n, 2)`` array of ``(T_co, T_ho)``. With ``sigma == 0``
    the input is returned as an identical copy and no generator is created.
    """
    x = np.array(targets, dtype=np.float64)
    if cfg.sigma == 0:
        return x
    return x + make_rng(cfg.seed).normal(0.0, cfg.sigma, size=x.shape)


def perturb_training_frame(frame: RegularFrame, cfg: NoiseConfig) -> RegularFrame:
    """Copy of a training frame with noise-injected outputs; input columns are shared unchanged."""
    return frame.with_outputs(inject_noise(frame.outputs(), cfg))
