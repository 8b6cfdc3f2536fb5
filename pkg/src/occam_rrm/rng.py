"""Deterministic randomness plumbing.

Every stochastic component draws from named substreams derived from a single
episode seed, so that (a) two runs with the same seed are bit-identical,
(b) exogenous processes consume draws indexed by step number and are therefore
unaffected by the agent's actions, and (c) adding diagnostics or extra
consumers never perturbs existing draws.
"""

from __future__ import annotations

import numpy as np

# Stream ids used across the package. Environments reserve 0-15, policies 16+.
STREAM_EXOGENOUS = 0
STREAM_ACTION = 1
STREAM_POLICY = 16


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for (seed, path).

    Distinct paths give statistically independent streams; the same path
    always gives the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, path) into a fresh 63-bit integer seed."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class StepStream:
    """Per-step draws that are a pure function of (seed, stream id, step).

    Draws are generated in blocks of ``block`` steps so that sequential access
    is cheap, yet ``values(t)`` is independent of the order or number of times
    it is called. ``per_step`` values of the declared kind are produced for
    every step index.
    """

    def __init__(self, seed: int, stream_id: int, per_step: int = 1,
                 kind: str = "normal", block: int = 1024):
        if kind not in ("normal", "uniform"):
            raise ValueError(f"unknown draw kind {kind!r}")
        self._seed = seed
        self._stream_id = stream_id
        self._per_step = per_step
        self._kind = kind
        self._block = block
        self._cache: dict[int, np.ndarray] = {}

    def _block_values(self, b: int) -> np.ndarray:
        arr = self._cache.get(b)
        if arr is None:
            rng = substream(self._seed, self._stream_id, b)
            shape = (self._block, self._per_step)
            arr = rng.normal(size=shape) if self._kind == "normal" else rng.random(size=shape)
            if len(self._cache) >= 4:  # keep the cache tiny; regeneration is deterministic
                self._cache.pop(next(iter(self._cache)))
            self._cache[b] = arr
        return arr

    def values(self, t: int) -> np.ndarray:
        """Vector of ``per_step`` draws for step ``t`` (read-only view)."""
        if t < 0:
            raise ValueError("step index must be nonnegative")
        return self._block_values(t // self._block)[t % self._block]

    def value(self, t: int) -> float:
        """Scalar draw for step ``t`` (first component)."""
        return float(self.values(t)[0])
