"""Coordinate-keyed random streams for reproducible parallel Monte Carlo.

A stream is named by a master seed plus a path of integer coordinates
(trial index, lane, time index, ...).  Every draw is a pure function of
(master_seed, path, position within the stream): distinct paths give
statistically independent Philox streams, identical paths reproduce
identical draws bit for bit, and nothing depends on scheduling or worker
count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_COORD = 2**32 - 1


@dataclass(frozen=True)
class RngStream:
    """An addressable random stream: master seed + coordinate path."""

    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master seed must fit in 64 bits, got {self.master_seed}")
        for c in self.path:
            if not 0 <= c <= _MAX_COORD:
                raise ValueError(f"stream coordinate {c} outside [0, 2^32)")

    def child(self, *coords: int) -> "RngStream":
        """Stream at an extended coordinate path."""
        return RngStream(self.master_seed, self.path + tuple(int(c) for c in coords))

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator keyed by this stream's coordinates.

        Each call returns a generator positioned at the start of the
        stream, so the m-th draw from it is itself addressable.
        """
        ss = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def uniforms(self, shape) -> np.ndarray:
        """Uniform [0,1) draws from the start of this stream."""
        return self.generator().random(shape)
