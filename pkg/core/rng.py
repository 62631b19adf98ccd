"""
Reproducible random streams.

Each stream is keyed by (seed, purpose, client, round, substream) and backed by
numpy's counter-based Philox generator, so a stream yields the same draws no
matter which thread consumes it or what other streams were used before it.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Stream owner id used for server-side draws (plans, partitions, initialization).
SERVER = -1


def hash64(*parts) -> int:
    """Stable 64-bit hash of the string forms of ``parts`` (BLAKE2b, little endian)."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def child_seed(master_seed: int, run_index: int) -> int:
    """Seed of Monte Carlo run ``run_index``; adding runs never changes earlier ones."""
    return hash64("run", master_seed, run_index)


@dataclass
class RngStream:
    """A replayable random stream owned by one logical actor."""

    seed: int
    purpose: str
    client: int = SERVER
    round: int = 0
    substream: int = 0
    _generator: Optional[np.random.Generator] = field(default=None, init=False, repr=False, compare=False)

    @property
    def stream_id(self):
        return (self.purpose, self.client, self.round, self.substream)

    @property
    def generator(self) -> np.random.Generator:
        """The underlying generator, created on first use."""
        if self._generator is None:
            spawn_key = (hash64(self.purpose), self.client + 1, self.round + 1, self.substream)
            sequence = np.random.SeedSequence(entropy=self.seed % (1 << 64), spawn_key=spawn_key)
            self._generator = np.random.Generator(np.random.Philox(sequence))
        return self._generator

    def replay(self) -> "RngStream":
        """A fresh stream with the same identity, positioned at the first draw."""
        return RngStream(self.seed, self.purpose, self.client, self.round, self.substream)


class StreamFactory:
    """Hands out streams for one simulation run.

    Args:
        seed: Run seed shared by every stream the factory creates
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, purpose: str, client: int = SERVER, round: int = 0,
               substream: int = 0) -> RngStream:
        return RngStream(self.seed, purpose, client, round, substream)
