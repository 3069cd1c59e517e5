"""Unbiased key-value light part and hierarchical heavy hitter aggregation.

Each slot keeps one candidate key and the total mass routed to the slot. On
insert the count always grows by the delta, and the slot's key is replaced by
the incoming key with probability delta / new_count. That replacement rule
makes count * 1(slot key == k) an unbiased estimator of k's true count, and
generalizes to delta-weighted inserts from heavy-part evictions.

Hierarchical heavy hitters are computed over the merged heavy + light table,
grouping by source-IP prefix, longest level first, with reported descendants'
counts fully discounted from their ancestors.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import ConfigError, FlowKey, hash64


@dataclass(slots=True)
class Slot:
    key: FlowKey | None
    count: int


class SlotSketch:
    def __init__(self, width: int, depth: int = 2, seed: int = 0, rng_seed: int | None = None):
        if width < 1 or depth < 1:
            raise ConfigError(f"slot sketch needs width, depth >= 1, got {width}, {depth}")
        self.width = width
        self.depth = depth
        self.seed = seed
        self.rows = [[Slot(None, 0) for _ in range(width)] for _ in range(depth)]
        self._row_seeds = [seed ^ i for i in range(depth)]
        self.rng = random.Random(seed if rng_seed is None else rng_seed)

    def insert(self, key: FlowKey, delta: int = 1) -> None:
        if delta < 1:
            raise ConfigError(f"delta must be >= 1, got {delta}")
        material = key.material
        for row, row_seed in zip(self.rows, self._row_seeds):
            slot = row[hash64(material, row_seed) % self.width]
            slot.count += delta
            if self.rng.random() < delta / slot.count:
                slot.key = key

    def query(self, key: FlowKey) -> int:
        material = key.material
        best = 0
        for row, row_seed in zip(self.rows, self._row_seeds):
            slot = row[hash64(material, row_seed) % self.width]
            if slot.key == key and slot.count > best:
                best = slot.count
        return best

    def row_total(self, row: int) -> int:
        return sum(slot.count for slot in self.rows[row])

    def occupied(self):
        for row in self.rows:
            for slot in row:
                if slot.key is not None:
                    yield slot.key, slot.count

    def memory_bytes(self) -> int:
        # key bytes are whatever the key representation costs; assume full keys
        return self.width * self.depth * (13 + 4)

    def reset(self) -> None:
        for row in self.rows:
            for slot in row:
                slot.key, slot.count = None, 0


@dataclass(frozen=True)
class Hierarchy:
    """Source-IP prefix levels, strictly increasing, /32 always present."""

    levels: tuple[int, ...] = (8, 16, 24, 32)

    def __post_init__(self):
        if not self.levels or list(self.levels) != sorted(set(self.levels)):
            raise ConfigError(f"levels must be strictly increasing, got {self.levels}")
        if any(not 1 <= l <= 32 for l in self.levels):
            raise ConfigError(f"levels must be within 1..32, got {self.levels}")
        if self.levels[-1] != 32:
            raise ConfigError("the full-key level /32 must be present")


def merge_tables(heavy_items, slot_items) -> dict[FlowKey, int]:
    """Single key -> count table from both tiers; duplicates keep the larger
    count (heavy is exact for residents, slots may under-report)."""
    merged: dict[FlowKey, int] = {}
    for key, count in heavy_items:
        if count > merged.get(key, 0):
            merged[key] = count
    for key, count in slot_items:
        if count > merged.get(key, 0):
            merged[key] = count
    return merged


def _prefix_str(prefix: int, level: int) -> str:
    base = prefix << (32 - level)
    return f"{(base >> 24) & 255}.{(base >> 16) & 255}.{(base >> 8) & 255}.{base & 255}/{level}"


def hhh_from_table(table: dict[FlowKey, int], hierarchy: Hierarchy, threshold: int) -> list[tuple[str, int, int]]:
    """Hierarchical heavy hitters of a key->count table.

    Aggregates counts by source IP, walks levels longest-prefix first, and
    reports a prefix when its count minus the counts of already-reported
    descendants exceeds the threshold (strictly). Reported mass is removed
    before ancestors are tested, which implements exactly that discounting.
    Rows are (prefix_cidr, level, conditioned_count), longest levels first,
    prefixes ascending within a level.
    """
    residual: dict[int, int] = {}
    for key, count in table.items():
        ip = key.src_ip_int
        residual[ip] = residual.get(ip, 0) + count

    out: list[tuple[str, int, int]] = []
    for level in sorted(hierarchy.levels, reverse=True):
        shift = 32 - level
        groups: dict[int, int] = {}
        for ip, count in residual.items():
            p = ip >> shift
            groups[p] = groups.get(p, 0) + count
        reported = [(p, total) for p, total in sorted(groups.items()) if total > threshold]
        for p, total in reported:
            out.append((_prefix_str(p, level), level, total))
        if reported:
            hit = {p for p, _ in reported}
            residual = {ip: c for ip, c in residual.items() if (ip >> shift) not in hit}
    return out
