"""
Seeded randomness with hierarchical, hash-derived sub-streams.

A scene seed becomes a root `RngStream`; every consumer derives its own
child stream by label (`derive_stream(root, "trees")`). The child state is a
pure function of the root seed and the ordered lineage of labels, so work
items can be evaluated in any order or in parallel without perturbing each
other.

Pinned algorithms (changing either changes every generated artifact):
  - lineage key: BLAKE2b-64 over the length-prefixed seed and labels
  - sequential draws: numpy PCG64 seeded with the lineage key
  - counter draws: SplitMix64 finalizer over (key, counters, draw index)
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Sequence

import numpy as np

from sylva_forge.core.exceptions import ForgeValidationError

SEED_MAX = 2**64 - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(values: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array."""
    with np.errstate(over="ignore"):
        z = np.asarray(values, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def as_uint64(values) -> np.ndarray:
    """Reinterpret integers (possibly negative) as uint64 bit patterns."""
    return np.ascontiguousarray(np.asarray(values, dtype=np.int64)).view(np.uint64)


def unit_interval(bits: np.ndarray) -> np.ndarray:
    """Map uint64 bit patterns to floats in [0, 1) using the top 53 bits."""
    return (bits >> np.uint64(11)).astype(np.float64) * _INV_2_53


def lineage_key(seed: int, lineage: Sequence[str]) -> int:
    """64-bit key of a stream, a pure function of (seed, lineage)."""
    digest = hashlib.blake2b(digest_size=8)
    digest.update(struct.pack("<Q", seed))
    for label in lineage:
        encoded = label.encode("utf-8")
        digest.update(struct.pack("<I", len(encoded)))
        digest.update(encoded)
    return int.from_bytes(digest.digest(), "little")


def derive_seed(seed: int, *labels: str) -> int:
    """Derive a child seed from a seed and labels without building a stream."""
    return lineage_key(seed, labels)


class RngStream:
    """Deterministic single-owner random stream with a derivation lineage."""

    __slots__ = ("seed", "lineage", "key", "_generator")

    def __init__(self, seed: int, lineage: tuple[str, ...] = ()):
        if not 0 <= seed <= SEED_MAX:
            raise ForgeValidationError(f"Seed must be a 64-bit non-negative integer, got {seed}")
        self.seed = seed
        self.lineage = tuple(lineage)
        self.key = lineage_key(seed, self.lineage)
        self._generator: np.random.Generator | None = None

    @classmethod
    def root(cls, seed: int) -> RngStream:
        return cls(seed)

    @property
    def generator(self) -> np.random.Generator:
        """Lazily built numpy generator owned by this stream."""
        if self._generator is None:
            self._generator = np.random.Generator(np.random.PCG64(self.key))
        return self._generator

    def derive(self, label: str) -> RngStream:
        return derive_stream(self, label)

    def counter_uniform(self, *counters, draws: int = 1) -> np.ndarray:
        """
        Counter-based uniforms in [0, 1), shape (n_items, draws).

        Row i depends only on this stream's key, the i-th value of every
        counter array and the draw index, never on how many items are
        requested or in which order they are processed.
        """
        arrays = [as_uint64(np.atleast_1d(c)) for c in counters]
        if not arrays:
            raise ForgeValidationError("counter_uniform needs at least one counter array")
        h = np.full(arrays[0].shape, np.uint64(self.key), dtype=np.uint64)
        for arr in arrays:
            h = mix64(h ^ mix64(arr))
        draw_ids = np.arange(draws, dtype=np.uint64)
        with np.errstate(over="ignore"):
            bits = mix64(h[:, None] + draw_ids[None, :] * _GOLDEN)
        return unit_interval(bits)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, lineage={list(self.lineage)})"


def derive_stream(parent: RngStream, label: str) -> RngStream:
    """Child stream keyed by the parent lineage plus `label`."""
    if not label:
        raise ForgeValidationError("Stream label must be non-empty")
    return RngStream(parent.seed, parent.lineage + (label,))


def uniform(stream: RngStream, lo: float, hi: float) -> float:
    """One draw in [lo, hi); advances the stream exactly one step."""
    if lo > hi:
        raise ForgeValidationError(f"uniform requires lo <= hi, got lo={lo} hi={hi}")
    u = stream.generator.random()
    if lo == hi:
        return float(lo)
    value = lo + (hi - lo) * u
    # Rounding can land exactly on hi for wide intervals
    return float(min(value, np.nextafter(hi, lo)))


def normal(stream: RngStream, mean: float, sigma: float) -> float:
    """Gaussian draw; sigma == 0 returns the mean exactly."""
    if sigma < 0:
        raise ForgeValidationError(f"normal requires sigma >= 0, got {sigma}")
    z = stream.generator.standard_normal()
    if sigma == 0:
        return float(mean)
    return float(mean + sigma * z)
