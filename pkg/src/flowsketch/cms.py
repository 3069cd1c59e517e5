"""Count-Min sketch: the approximate tier for small flows, and the baseline.

d rows of w counters; each row has its own hash. Inserting adds the delta to
one counter per row; querying returns the minimum of the mapped counters, so
estimates never undershoot the true total while no counter has saturated.

Counters saturate instead of wrapping. Narrow counters (8-bit) save memory
but clip large values; saturation events are counted so callers can tell when
the one-sided guarantee has degraded.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import ConfigError, FlowKey, hash64

_MAGIC = 0x4D43  # "CM" little-endian
_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32}

# Per-key row-index cache; cleared wholesale when it grows past this.
_CACHE_LIMIT = 1 << 20


class CountMinSketch:
    def __init__(self, width: int, depth: int, counter_bits: int = 8, seed: int = 0):
        if width < 1 or depth < 1:
            raise ConfigError(f"width and depth must be >= 1, got {width}, {depth}")
        if counter_bits not in _DTYPES:
            raise ConfigError(f"unsupported counter width: {counter_bits}")
        self.width = width
        self.depth = depth
        self.counter_bits = counter_bits
        self.seed = seed
        self.counter_max = (1 << counter_bits) - 1
        self.rows = np.zeros((depth, width), dtype=_DTYPES[counter_bits])
        self.saturation_events = 0
        self._row_seeds = [seed ^ i for i in range(depth)]
        self._idx_cache: dict[bytes, tuple[int, ...]] = {}

    def _indices(self, material: bytes) -> tuple[int, ...]:
        idx = self._idx_cache.get(material)
        if idx is None:
            if len(self._idx_cache) >= _CACHE_LIMIT:
                self._idx_cache.clear()
            idx = tuple(hash64(material, s) % self.width for s in self._row_seeds)
            self._idx_cache[material] = idx
        return idx

    def insert(self, key: FlowKey, delta: int = 1) -> None:
        if delta < 1:
            raise ConfigError(f"delta must be >= 1, got {delta}")
        rows = self.rows
        cap = self.counter_max
        for i, j in enumerate(self._indices(key.material)):
            value = int(rows[i, j]) + delta
            if value > cap:
                value = cap
                self.saturation_events += 1
            rows[i, j] = value

    def query(self, key: FlowKey) -> int:
        rows = self.rows
        return int(min(rows[i, j] for i, j in enumerate(self._indices(key.material))))

    def row_total(self, row: int) -> int:
        """Sum of one row's counters; equals total inserted mass absent saturation."""
        return int(self.rows[row].sum(dtype=np.uint64))

    def memory_bytes(self) -> int:
        return self.width * self.depth * (self.counter_bits // 8)

    def reset(self) -> None:
        self.rows.fill(0)
        self.saturation_events = 0
        self._idx_cache.clear()

    def serialize(self) -> bytes:
        """8-byte header (magic, depth, counter_bits, width) + row-major
        little-endian counters."""
        header = struct.pack("<HBBI", _MAGIC, self.depth, self.counter_bits, self.width)
        body = self.rows.astype(self.rows.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
        return header + body

    @classmethod
    def deserialize(cls, blob: bytes, seed: int = 0) -> "CountMinSketch":
        if len(blob) < 8:
            raise ConfigError("counter dump too short for header")
        magic, depth, counter_bits, width = struct.unpack("<HBBI", blob[:8])
        if magic != _MAGIC:
            raise ConfigError(f"bad counter dump magic: {magic:#x}")
        sk = cls(width, depth, counter_bits, seed)
        expected = width * depth * (counter_bits // 8)
        if len(blob) - 8 != expected:
            raise ConfigError(f"counter dump body is {len(blob) - 8} B, expected {expected}")
        dtype = np.dtype(_DTYPES[counter_bits]).newbyteorder("<")
        sk.rows = np.frombuffer(blob[8:], dtype=dtype).astype(_DTYPES[counter_bits]).reshape(depth, width)
        return sk
