"""Reproducible random streams for replicate blocks.

Replicates are grouped into fixed-size blocks; block ``k`` of a run seeded
with ``seed`` draws from a Philox stream keyed by ``(seed, purpose, k)``.
Results therefore do not depend on how blocks are spread over workers.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 1024
MASK64 = (1 << 64) - 1

# purpose tags keep independent consumers of one seed on disjoint streams
PATHS = 1
PICKANDS = 2
F_CONSTANT = 3
BROWNIAN = 4


def block_rng(seed: int, block: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=(purpose, block))
    return np.random.Generator(np.random.Philox(ss))


def blocks(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """``(block_index, size)`` pairs covering ``n`` replicates."""
    if n < 1:
        raise ValueError("need at least one replicate")
    out = []
    for k, start in enumerate(range(0, n, block_size)):
        out.append((k, min(block_size, n - start)))
    return out


def step_major_normals(gen: np.random.Generator, n_steps: int, n_paths: int) -> np.ndarray:
    """Standard normals of shape ``(n_paths, n_steps)`` filled time step by time step.

    Filling step-major means a longer horizon extends, rather than reshuffles,
    the draws of a shorter one.
    """
    return gen.standard_normal((n_steps, n_paths)).T
