"""Exact key-value tier for large flows: bucketized cells with lock flags.

Each flow hashes to one bucket of d_h cells; a resident cell records the flow
key, the packets counted while resident (size_hat), and a one-bit lock. The
lock is updated probabilistically so that it is an unbiased estimator of the
fraction of the flow's classified packets that were predicted large; locked
cells are passed over by the eviction policy whenever any unlocked cell
exists.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import ConfigError, FlowKey, hash64


@dataclass(slots=True)
class HeavyCell:
    key: FlowKey
    size_hat: int
    lock: int  # 0 or 1


def lock_rule(lock: int, size: int, y_hat: int, rng: random.Random) -> int:
    """One probabilistic lock update.

    `size` is the number of packets recorded for the flow BEFORE the packet
    that triggered this update (0 at first insertion). The new lock is 1 with
    probability (lock*size + y_hat) / (size + 1), which keeps the flag an
    unbiased running mean of the 0/1 predictions.
    """
    p = (lock * size + y_hat) / (size + 1)
    return 1 if rng.random() < p else 0


def lock_update(cell: HeavyCell, y_hat: int, rng: random.Random) -> HeavyCell:
    """Apply lock_rule to a resident cell, treating size_hat as the
    pre-increment size. Mutates and returns the cell."""
    cell.lock = lock_rule(cell.lock, cell.size_hat, y_hat, rng)
    return cell


class HeavyTable:
    """w_h buckets x d_h cells; a key lives in at most one cell of its bucket."""

    def __init__(self, w_h: int, d_h: int, seed: int, rng_seed: int | None = None):
        if w_h < 1 or d_h < 1:
            raise ConfigError(f"heavy table needs w_h, d_h >= 1, got {w_h}, {d_h}")
        self.w_h = w_h
        self.d_h = d_h
        self.seed = seed
        self.buckets: list[list[HeavyCell | None]] = [[None] * d_h for _ in range(w_h)]
        self.rng = random.Random(seed if rng_seed is None else rng_seed)

    def bucket_index(self, key: FlowKey) -> int:
        return hash64(key.material, self.seed) % self.w_h

    def probe(self, key: FlowKey) -> tuple[int, HeavyCell | None, int]:
        """One bucket pass: (bucket index, resident cell or None, first empty
        cell index or -1). Occupied cells form a prefix (cells are only
        emptied by reset), so the scan can stop at the first empty cell."""
        b = self.bucket_index(key)
        for ci, cell in enumerate(self.buckets[b]):
            if cell is None:
                return b, None, ci
            if cell.key == key:
                return b, cell, -1
        return b, None, -1

    def find(self, key: FlowKey) -> tuple[int, int, HeavyCell] | None:
        b = self.bucket_index(key)
        for ci, cell in enumerate(self.buckets[b]):
            if cell is not None and cell.key == key:
                return b, ci, cell
        return None

    def lookup(self, key: FlowKey) -> tuple[int, int] | None:
        """(size_hat, lock) when resident, else None. Only the mapped bucket
        is examined."""
        hit = self.find(key)
        if hit is None:
            return None
        cell = hit[2]
        return cell.size_hat, cell.lock

    def increment(self, key: FlowKey) -> bool:
        """Count one packet for a resident flow. False (and no mutation) when
        the key is absent."""
        hit = self.find(key)
        if hit is None:
            return False
        hit[2].size_hat += 1
        return True

    def try_insert_empty(self, key: FlowKey) -> bool:
        """Place (key, 1) in the first empty cell of its bucket, lock 0.

        No classification happens on this path, so the lock starts unlocked
        and the flow stays evictable until it is classified large.
        """
        bucket = self.buckets[self.bucket_index(key)]
        for ci, cell in enumerate(bucket):
            if cell is None:
                bucket[ci] = HeavyCell(key, 1, 0)
                return True
        return False

    def evict_candidate(self, bucket_index: int) -> int:
        """Cell index to evict from a full bucket: smallest size among
        unlocked cells, else smallest overall; ties go to the lowest index."""
        bucket = self.buckets[bucket_index]
        best = -1
        best_size = None
        for ci, cell in enumerate(bucket):
            if cell is None:
                raise ConfigError("evict_candidate called on a bucket with empty cells")
            if cell.lock == 0 and (best_size is None or cell.size_hat < best_size):
                best, best_size = ci, cell.size_hat
        if best >= 0:
            return best
        for ci, cell in enumerate(bucket):
            if best_size is None or cell.size_hat < best_size:
                best, best_size = ci, cell.size_hat
        return best

    def replace(self, bucket_index: int, cell_index: int, new_key: FlowKey, y_hat: int) -> tuple[FlowKey, int]:
        """Evict the cell and install (new_key, 1); returns the evicted
        (key, size). The fresh lock comes from lock_rule at size 0, i.e. it
        equals y_hat."""
        cell = self.buckets[bucket_index][cell_index]
        if cell is None:
            raise ConfigError("replace target cell is empty")
        evicted = (cell.key, cell.size_hat)
        lock = lock_rule(0, 0, y_hat, self.rng)
        self.buckets[bucket_index][cell_index] = HeavyCell(new_key, 1, lock)
        return evicted

    def iter_cells(self):
        for b, bucket in enumerate(self.buckets):
            for ci, cell in enumerate(bucket):
                if cell is not None:
                    yield b, ci, cell

    def cell_count(self) -> int:
        return self.w_h * self.d_h

    def total_recorded(self) -> int:
        return sum(cell.size_hat for _, _, cell in self.iter_cells())

    def reset(self) -> None:
        for bucket in self.buckets:
            for ci in range(self.d_h):
                bucket[ci] = None

    def dump(self) -> str:
        """Deterministic per-bucket listing: key hex, size, lock."""
        lines = []
        for b, ci, cell in self.iter_cells():
            lines.append(f"bucket={b} cell={ci} key={cell.key.hex()} size={cell.size_hat} lock={cell.lock}")
        return "\n".join(lines)

    def check_invariants(self) -> None:
        """Debug check: no key occupies two cells, sizes positive, locks 0/1."""
        seen: set[FlowKey] = set()
        for b, _, cell in self.iter_cells():
            if cell.key in seen:
                raise AssertionError(f"key {cell.key!r} occupies two cells")
            seen.add(cell.key)
            if cell.size_hat < 1:
                raise AssertionError("occupied cell with size_hat < 1")
            if cell.lock not in (0, 1):
                raise AssertionError(f"lock out of range: {cell.lock}")
            if self.bucket_index(cell.key) != b:
                raise AssertionError("cell is in the wrong bucket")
