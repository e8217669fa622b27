"""Per-particle Brownian streams derived from (seed, particle index)."""

import numpy as np

from engine.workers import map_chunks


def particle_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def brownian_increments(seed: int, n_particles: int, steps: int, dim: int, dt: float,
                        workers: int = 1) -> np.ndarray:
    """Increments of shape (N, M, d) with variance dt; particle i always draws from stream (seed, i)."""
    scale = np.sqrt(dt)

    def block(start: int, stop: int) -> np.ndarray:
        out = np.empty((stop - start, steps, dim))
        for offset, i in enumerate(range(start, stop)):
            out[offset] = particle_generator(seed, i).standard_normal((steps, dim))
        return out * scale

    return map_chunks(block, n_particles, workers)
