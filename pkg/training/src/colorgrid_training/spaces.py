"""Minimal space descriptions for the parallel-env API.

Self-contained stand-ins for the usual gym-style spaces, carrying just
enough structure (shape, dtype, bounds, containment, seeded sampling) for
adapter consumers and the conformance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Discrete:
    n: int

    def contains(self, x) -> bool:
        try:
            value = int(x)
        except (TypeError, ValueError):
            return False
        return 0 <= value < self.n

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))


@dataclass(frozen=True)
class Box:
    low: float
    high: float
    shape: tuple[int, ...]
    dtype: str = "float32"

    def contains(self, x) -> bool:
        arr = np.asarray(x)
        return arr.shape == self.shape and bool(
            np.all(arr >= self.low) and np.all(arr <= self.high)
        )

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high, self.shape).astype(self.dtype)


@dataclass(frozen=True)
class DictSpace:
    spaces: dict = field(default_factory=dict)

    def contains(self, x) -> bool:
        if not isinstance(x, dict) or set(x) != set(self.spaces):
            return False
        return all(space.contains(x[key]) for key, space in self.spaces.items())

    def sample(self, rng: np.random.Generator) -> dict:
        return {key: space.sample(rng) for key, space in self.spaces.items()}
