"""Seedable random source whose draws are reproducible bit-for-bit.

Uniforms come from PCG64, whose raw stream numpy guarantees stable across
releases. Gaussian draws deliberately avoid numpy's ziggurat sampler (an
implementation detail that has changed before) and instead apply an explicit
Box-Muller transform to the uniform stream, so trajectories generated with the
same seed are identical on every platform.
"""
from __future__ import annotations

import numpy as np


class PortableRng:
    """PCG64-backed generator with a fixed Gaussian transform."""

    name = "pcg64-boxmuller"

    def __init__(self, seed):
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normal draws via Box-Muller on consecutive uniform pairs."""
        scalar = size is None
        shape = () if scalar else size
        count = int(np.prod(shape, dtype=int)) if not scalar else 1
        pairs = (count + 1) // 2
        # 1 - U keeps the log argument in (0, 1], avoiding log(0)
        u1 = 1.0 - self._gen.random(pairs)
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        draws = np.empty(2 * pairs)
        draws[0::2] = radius * np.cos(angle)
        draws[1::2] = radius * np.sin(angle)
        if scalar:
            return float(draws[0])
        return draws[:count].reshape(shape)


def derive_seed(base: int, stream: int) -> int:
    """Independent child seed for (base, stream), stable across runs."""
    return int(np.random.SeedSequence((int(base), int(stream))).generate_state(1)[0])
