"""Deterministic, counter-based random streams for trial-parallel Monte Carlo.

Each stream is a Philox generator whose key is derived from the global seed and
whose counter words encode ``(block, step)``. Trials are grouped in fixed-size
blocks, so any partition of the blocks over workers reproduces the same draws.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import os

import numpy as np

__all__ = ["TrialStreams", "as_streams", "run_blocks"]

DEFAULT_BLOCK = 8192


@dataclass(frozen=True)
class TrialStreams:
    seed: int
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")

    @property
    def key(self) -> np.ndarray:
        return np.random.SeedSequence(int(self.seed)).generate_state(2, dtype=np.uint64)

    def generator(self, block: int, step: int = 0) -> np.random.Generator:
        """Independent stream for ``(block, step)``.

        Philox increments the low counter words while drawing, so the two high
        words are free to carry the stream coordinates.
        """
        counter = np.array([0, 0, step, block], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=self.key, counter=counter))

    def blocks(self, trials: int):
        """``(block_id, start, stop)`` triples covering ``range(trials)``."""
        return [
            (b, start, min(start + self.block_size, trials))
            for b, start in enumerate(range(0, trials, self.block_size))
        ]


def as_streams(rng) -> TrialStreams:
    """Accept a seed or a :class:`TrialStreams`."""
    if isinstance(rng, TrialStreams):
        return rng
    if isinstance(rng, (int, np.integer)):
        return TrialStreams(int(rng))
    raise TypeError(f"expected an integer seed or TrialStreams, got {type(rng).__name__}")


def run_blocks(fn, trials: int, streams: TrialStreams, workers: int | None = None):
    """Evaluate ``fn(count, step_rng)`` per block and return results in block order.

    ``step_rng(step)`` hands out the block's stream for a given circuit step.
    """
    jobs = streams.blocks(trials)

    def one(job):
        b, start, stop = job
        return fn(stop - start, lambda step: streams.generator(b, step))

    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        return [one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))
