"""The assembled two-tier sketch: insertion dispatch, queries, reports.

Insertion of a packet of flow f:

  Case 1  f is resident in its bucket: increment its size. (With
          classify_resident on, the packet is also classified and the lock
          updated first, against the pre-increment size.)
  Case 2  bucket has an empty cell: insert (f, 1) unlocked.
  Case 3  bucket full: classify the packet. Predicted large: evict the
          eviction candidate to the light part with its full recorded size
          and insert (f, 1) with the lock seeded from the prediction.
          Predicted small: add (f, 1) to the light part.

Queries report the heavy value when the flow is resident, otherwise the light
estimate; heavy hitters come from the heavy part alone. In hierarchical mode
the light part is the unbiased key-value structure instead of a CMS, and the
query merges both tiers before aggregating prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classifier import ClassificationError, binarize, classify
from .cms import CountMinSketch
from .slots import SlotSketch, Hierarchy, hhh_from_table, merge_tables
from .heavy import HeavyCell, HeavyTable, lock_update
from .model import ConfigError, FlowKey, PacketRecord, SketchConfig, cell_cost_bytes, derive_seed, make_fingerprint

MODES = ("size", "hh", "hhh")


@dataclass
class SketchStats:
    packets: int = 0
    case1: int = 0
    case2: int = 0
    case3: int = 0
    evictions: int = 0
    classifier_errors: int = 0
    dropped_mass: int = 0        # mass discarded in hh mode (no light part)
    light_mass: int = 0          # total deltas routed to the light part
    light_keys: set = field(default_factory=set, repr=False)

    @property
    def n_light(self) -> int:
        """Distinct flows that ended up in the light part."""
        return len(self.light_keys)

    def as_dict(self) -> dict:
        return {
            "packets": self.packets,
            "case1": self.case1,
            "case2": self.case2,
            "case3": self.case3,
            "evictions": self.evictions,
            "classifier_errors": self.classifier_errors,
            "dropped_mass": self.dropped_mass,
            "light_mass": self.light_mass,
            "n_light": self.n_light,
        }


class TieredSketch:
    """Heavy key-value part + light approximate part + pluggable classifier."""

    def __init__(self, cfg: SketchConfig, backend, mode: str = "size"):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        cfg.validate()
        if cfg.w_h < 1:
            raise ConfigError("cfg.w_h is unset; call memory_budget_split or set it explicitly")
        if cfg.w_light < 1 and mode != "hh":
            raise ConfigError(f"mode {mode!r} needs a light part (cfg.w_light >= 1)")
        if cfg.fingerprint_bits and mode == "hhh":
            raise ConfigError("hierarchical mode needs full keys; disable fingerprints")
        self.cfg = cfg
        self.mode = mode
        self.backend = backend
        self.heavy = HeavyTable(cfg.w_h, cfg.d_h, seed=derive_seed(cfg.seed, 1), rng_seed=derive_seed(cfg.seed, 3))
        self.light: CountMinSketch | SlotSketch | None
        if cfg.w_light < 1:
            self.light = None
        elif mode == "hhh":
            self.light = SlotSketch(cfg.w_light, depth=2, seed=derive_seed(cfg.seed, 2), rng_seed=derive_seed(cfg.seed, 4))
        else:
            self.light = CountMinSketch(cfg.w_light, cfg.d_light, cfg.light_counter_bits, seed=derive_seed(cfg.seed, 2))
        self._fp_seed = derive_seed(cfg.seed, 5)
        self._fp_cache: dict[FlowKey, FlowKey] = {}
        self.stats = SketchStats()

    # -- key handling ------------------------------------------------------

    def effective_key(self, key: FlowKey) -> FlowKey:
        """The key the structures see: the raw key, or its fingerprint."""
        bits = self.cfg.fingerprint_bits
        if not bits:
            return key
        fp = self._fp_cache.get(key)
        if fp is None:
            fp = make_fingerprint(key, bits, self._fp_seed)
            self._fp_cache[key] = fp
        return fp

    # -- insertion ---------------------------------------------------------

    def _classify(self, pkt: PacketRecord) -> int:
        try:
            return binarize(classify(self.backend, pkt))
        except ClassificationError:
            self.stats.classifier_errors += 1
            return 0

    def _light_add(self, key: FlowKey, delta: int) -> None:
        if self.light is None:
            self.stats.dropped_mass += delta
            return
        self.light.insert(key, delta)
        self.stats.light_mass += delta
        self.stats.light_keys.add(key)

    def insert(self, pkt: PacketRecord) -> None:
        stats = self.stats
        stats.packets += 1
        key = self.effective_key(pkt.key)
        heavy = self.heavy

        b, cell, empty_ci = heavy.probe(key)
        if cell is not None:                     # Case 1
            stats.case1 += 1
            if self.cfg.classify_resident:
                lock_update(cell, self._classify(pkt), heavy.rng)
            cell.size_hat += 1
            return

        if empty_ci >= 0:                        # Case 2
            stats.case2 += 1
            heavy.buckets[b][empty_ci] = HeavyCell(key, 1, 0)
            return

        stats.case3 += 1                         # Case 3
        y_hat = self._classify(pkt)
        if y_hat == 1:
            ci = heavy.evict_candidate(b)
            evicted_key, evicted_size = heavy.replace(b, ci, key, y_hat)
            self._light_add(evicted_key, evicted_size)
            stats.evictions += 1
        else:
            self._light_add(key, 1)

    def insert_many(self, packets) -> None:
        for pkt in packets:
            self.insert(pkt)

    # -- queries -----------------------------------------------------------

    def query_size(self, key: FlowKey) -> int:
        """Heavy value when resident, else the light estimate (never summed)."""
        key = self.effective_key(key)
        hit = self.heavy.lookup(key)
        if hit is not None:
            return hit[0]
        if self.light is None:
            return 0
        return self.light.query(key)

    def query_heavy_hitters(self, threshold: int) -> list[tuple[FlowKey, int]]:
        """Heavy-part flows with recorded size strictly above the threshold,
        largest first. The light part is never consulted."""
        out = [(cell.key, cell.size_hat) for _, _, cell in self.heavy.iter_cells() if cell.size_hat > threshold]
        out.sort(key=lambda kv: (-kv[1], kv[0].material))
        return out

    def hh_threshold(self) -> int:
        """Packet-count threshold from the configured traffic fraction."""
        return int(self.cfg.hh_threshold_fraction * self.stats.packets)

    def merged_table(self) -> dict[FlowKey, int]:
        if self.mode != "hhh":
            raise ConfigError("merged_table is only defined in hierarchical mode")
        slot_items = self.light.occupied() if self.light is not None else ()
        heavy_items = ((cell.key, cell.size_hat) for _, _, cell in self.heavy.iter_cells())
        return merge_tables(heavy_items, slot_items)

    def query_hhh(self, hierarchy: Hierarchy, threshold: int) -> list[tuple[str, int, int]]:
        return hhh_from_table(self.merged_table(), hierarchy, threshold)

    # -- lifecycle ---------------------------------------------------------

    def reset(self) -> None:
        """Zero all cells, counters, locks and stats; seeds are retained."""
        self.heavy.reset()
        if self.light is not None:
            self.light.reset()
        self.stats = SketchStats()

    def memory_bytes(self) -> int:
        heavy = self.cfg.w_h * self.cfg.d_h * cell_cost_bytes(self.cfg)
        light = self.light.memory_bytes() if self.light is not None else 0
        return heavy + light

    def report_dict(self, top_k: int = 20) -> dict:
        top = self.query_heavy_hitters(0)[:top_k]
        report = {
            "mode": self.mode,
            "memory_bytes": self.memory_bytes(),
            "config": self.cfg.as_dict(),
            "stats": self.stats.as_dict(),
            "top_k": [{"key_hex": k.hex(), "estimate": n} for k, n in top],
        }
        if isinstance(self.light, CountMinSketch):
            report["light_saturation_events"] = self.light.saturation_events
        return report
