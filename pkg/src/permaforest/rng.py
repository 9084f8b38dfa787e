"""Seeded, splittable random streams.

Every source of randomness in an episode is one of a small set of named
streams (weather, disturbance, parameters, preference), each backed by a
Philox counter-based generator keyed on ``(seed, stream name, episode
index)``. The same triple always reproduces the same draw sequence on any
platform, which is what makes episode replay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Fixed stream identifiers; the spawn key of the SeedSequence is
# (STREAM_IDS[name], episode_index), so streams never collide.
STREAM_IDS = {
    "weather": 1,
    "disturbance": 2,
    "parameters": 3,
    "preference": 4,
}

ALGORITHM = "philox4x64"


@dataclass
class RngStream:
    """Single-owner random stream with a draw counter for replay audits."""

    seed: int
    stream: str = "parameters"
    episode: int = 0
    draws: int = field(default=0, init=False)

    def __post_init__(self):
        if self.stream not in STREAM_IDS:
            raise ValueError(f"unknown stream name: {self.stream!r}")
        ss = np.random.SeedSequence(
            entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(STREAM_IDS[self.stream], int(self.episode)),
        )
        self._gen = np.random.Generator(np.random.Philox(ss))

    @property
    def algorithm(self) -> str:
        return ALGORITHM

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        self.draws += int(np.prod(size)) if size is not None else 1
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        self.draws += int(np.prod(size)) if size is not None else 1
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int) -> int:
        self.draws += 1
        return int(self._gen.integers(low, high))


def episode_streams(seeds: dict, episode: int) -> dict:
    """Build the per-episode stream set from base seeds.

    ``seeds`` maps stream names to base seeds; the episode index is folded
    into the spawn key so that episode k is reconstructible from
    (base seeds, k) alone.
    """
    return {
        name: RngStream(seed, stream=name, episode=episode)
        for name, seed in seeds.items()
        if name in STREAM_IDS
    }
