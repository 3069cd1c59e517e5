import random

import pytest

from flowsketch.slots import SlotSketch, Hierarchy, hhh_from_table, merge_tables
from flowsketch.model import ConfigError, FlowKey, PacketRecord, SketchConfig
from flowsketch.sketch import TieredSketch
from flowsketch.classifier import StaticBackend

from .conftest import key_from_int, random_key


def ip_key(a, b, c, d, salt=0) -> FlowKey:
    return FlowKey.from_tuple(f"{a}.{b}.{c}.{d}", "192.168.0.1", 1000 + salt, 80, 6)


def brute_force_hhh(table, levels, threshold):
    """Independent implementation straight from the definition: a prefix is
    reported when its subtree count minus the conditioned counts of reported
    descendants strictly exceeds the threshold."""
    per_ip = {}
    for key, count in table.items():
        ip = key.src_ip_int
        per_ip[ip] = per_ip.get(ip, 0) + count
    reported = {}  # (prefix, level) -> conditioned count
    for level in sorted(levels, reverse=True):
        shift = 32 - level
        prefixes = sorted({ip >> shift for ip in per_ip})
        for p in prefixes:
            subtree = sum(c for ip, c in per_ip.items() if ip >> shift == p)
            discounted = sum(
                c for (q, l), c in reported.items()
                if l > level and (q >> (l - level)) == p
            )
            cond = subtree - discounted
            if cond > threshold:
                reported[(p, level)] = cond
    out = []
    for level in sorted(levels, reverse=True):
        for (p, l), c in sorted(reported.items()):
            if l == level:
                base = p << (32 - l)
                cidr = f"{(base >> 24) & 255}.{(base >> 16) & 255}.{(base >> 8) & 255}.{base & 255}/{l}"
                out.append((cidr, l, c))
    return out


class TestSlotInsertQuery:
    def test_empty_slot_takes_key(self):
        c = SlotSketch(1, 1, seed=1)
        k = key_from_int(1)
        c.insert(k, 1)
        assert c.query(k) == 1

    def test_fresh_structure_queries_zero(self):
        c = SlotSketch(4, 2, seed=1)
        assert c.query(key_from_int(5)) == 0

    def test_single_key_stream_exact(self):
        c = SlotSketch(1, 1, seed=1)
        k = key_from_int(2)
        for _ in range(50):
            c.insert(k)
        assert c.query(k) == 50  # self-replacement keeps the key

    def test_replacement_probability_delta_over_count(self):
        # slot holds (k1, 9); inserting (k2, 1) must hand over the slot with
        # probability 1/10
        trials = 100_000
        rng = random.Random(31)
        k1, k2 = key_from_int(1), key_from_int(2)
        takeovers = 0
        for _ in range(trials):
            c = SlotSketch(1, 1, seed=0, rng_seed=rng.getrandbits(32))
            c.insert(k1, 9)
            c.insert(k2, 1)
            assert c.rows[0][0].count == 10
            takeovers += c.query(k2) > 0
        assert abs(takeovers / trials - 0.1) < 0.01

    def test_row_totals_conserve_mass(self, rng):
        c = SlotSketch(8, 2, seed=7)
        total = 0
        for _ in range(500):
            delta = rng.randrange(1, 6)
            c.insert(random_key(rng), delta)
            total += delta
        assert c.row_total(0) == total and c.row_total(1) == total

    def test_unbiased_two_key_single_slot(self):
        # E[count * 1(slot key == k)] equals k's true count, including under
        # delta-weighted inserts.
        trials = 100_000
        rng = random.Random(77)
        k1, k2 = key_from_int(1), key_from_int(2)
        est1 = est2 = 0
        for _ in range(trials):
            c = SlotSketch(1, 1, seed=0, rng_seed=rng.getrandbits(32))
            c.insert(k1, 4)
            c.insert(k2, 2)
            c.insert(k1, 2)
            c.insert(k2, 2)
            est1 += c.query(k1)
            est2 += c.query(k2)
        assert abs(est1 / trials - 6.0) < 0.02 * 6.0
        assert abs(est2 / trials - 4.0) < 0.02 * 4.0

    def test_rejects_bad_delta(self):
        with pytest.raises(ConfigError):
            SlotSketch(4, 1, seed=1).insert(key_from_int(1), 0)


class TestHierarchy:
    def test_levels_must_increase_and_include_full(self):
        Hierarchy((8, 16, 24, 32))
        with pytest.raises(ConfigError):
            Hierarchy((24, 16, 32))
        with pytest.raises(ConfigError):
            Hierarchy((8, 16))


class TestMerge:
    def test_duplicates_keep_max(self):
        k = key_from_int(1)
        merged = merge_tables([(k, 5)], [(k, 9), (key_from_int(2), 1)])
        assert merged[k] == 9 and merged[key_from_int(2)] == 1


class TestHHHAggregation:
    def test_single_flow_fully_discounted(self):
        table = {ip_key(10, 1, 2, 3): 100}
        rows = hhh_from_table(table, Hierarchy((8, 32)), 50)
        assert rows == [("10.1.2.3/32", 32, 100)]  # /8 conditioned count is 0

    def test_sibling_flows_aggregate_to_parent(self):
        table = {ip_key(10, 1, 2, 3): 30, ip_key(10, 1, 2, 4): 30}
        rows = hhh_from_table(table, Hierarchy((8, 16, 24, 32)), 50)
        assert rows == [("10.1.2.0/24", 24, 60)]

    def test_empty_table(self):
        assert hhh_from_table({}, Hierarchy(), 10) == []

    def test_threshold_is_strict(self):
        table = {ip_key(10, 0, 0, 1): 50}
        assert hhh_from_table(table, Hierarchy((32,)), 50) == []

    def test_same_ip_flows_aggregate_at_full_level(self):
        table = {ip_key(10, 1, 2, 3, salt=0): 30, ip_key(10, 1, 2, 3, salt=1): 40}
        rows = hhh_from_table(table, Hierarchy((8, 32)), 50)
        assert ("10.1.2.3/32", 32, 70) in rows

    def test_matches_brute_force_on_random_instances(self):
        rng = random.Random(2025)
        levels = (8, 16, 24, 32)
        for _ in range(100):
            table = {}
            for _ in range(rng.randrange(1, 50)):
                key = ip_key(rng.choice([10, 11]), rng.randrange(4), rng.randrange(4),
                             rng.randrange(8), salt=rng.randrange(3))
                table[key] = table.get(key, 0) + rng.randrange(1, 120)
            threshold = rng.randrange(1, 150)
            assert hhh_from_table(table, Hierarchy(levels), threshold) == \
                brute_force_hhh(table, levels, threshold)


class TestHHHMode:
    def test_sketch_query_matches_brute_force_of_merged_table(self, rng):
        cfg = SketchConfig(w_h=8, d_h=2, w_light=32, seed=4)
        sk = TieredSketch(cfg, StaticBackend(0.4), "hhh")
        keys = [ip_key(10, rng.randrange(3), rng.randrange(3), rng.randrange(6), salt=s)
                for s in range(40)]
        for _ in range(3_000):
            sk.insert(PacketRecord(rng.choice(keys)))
        table = sk.merged_table()
        hier = Hierarchy()
        assert sk.query_hhh(hier, 100) == brute_force_hhh(table, hier.levels, 100)

    def test_merged_table_only_in_hhh_mode(self):
        cfg = SketchConfig(w_h=4, d_h=2, w_light=16, seed=4)
        sk = TieredSketch(cfg, StaticBackend(0.4), "size")
        with pytest.raises(ConfigError):
            sk.merged_table()
