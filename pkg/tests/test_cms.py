import math
import random
from collections import Counter

import pytest

from flowsketch.analysis import cms_full_accuracy_prob
from flowsketch.cms import CountMinSketch
from flowsketch.model import ConfigError

from .conftest import key_from_int, random_key


class TestBasics:
    def test_fresh_insert_query(self):
        sk = CountMinSketch(64, 3, 32, seed=1)
        k = key_from_int(1)
        sk.insert(k, 1)
        assert sk.query(k) == 1

    def test_never_inserted_is_zero(self):
        sk = CountMinSketch(64, 3, 32, seed=1)
        assert sk.query(key_from_int(9)) == 0

    def test_saturation_clamp_8bit(self):
        sk = CountMinSketch(16, 2, 8, seed=1)
        k = key_from_int(2)
        sk.insert(k, 300)
        assert sk.query(k) == 255
        assert sk.saturation_events > 0

    def test_delta_must_be_positive(self):
        sk = CountMinSketch(16, 2, 8, seed=1)
        with pytest.raises(ConfigError):
            sk.insert(key_from_int(1), 0)

    def test_forced_full_collision(self):
        # width 1 collides everything in every row; exact counter simulation
        # says both keys share one counter per row.
        sk = CountMinSketch(1, 3, 32, seed=5)
        k1, k2 = key_from_int(1), key_from_int(2)
        sk.insert(k1, 2)
        sk.insert(k2, 3)
        assert sk.query(k1) == 5
        assert sk.query(k2) == 5


class TestProperties:
    def test_one_sided_error_random_streams(self, rng):
        for _ in range(25):
            w = rng.choice([32, 64, 256, 1024])
            d = rng.randrange(1, 5)
            sk = CountMinSketch(w, d, 32, seed=rng.getrandbits(32))
            truth = Counter()
            keys = [random_key(rng) for _ in range(rng.randrange(10, 400))]
            for _ in range(2_000):
                k = rng.choice(keys)
                truth[k] += 1
                sk.insert(k)
            for k, n in truth.items():
                assert sk.query(k) >= n

    def test_monotone_under_insertion(self, rng):
        sk = CountMinSketch(8, 2, 32, seed=3)
        keys = [random_key(rng) for _ in range(20)]
        watched = keys[0]
        last = 0
        for _ in range(500):
            sk.insert(rng.choice(keys))
            est = sk.query(watched)
            assert est >= last
            last = est

    def test_determinism(self, rng):
        ops = [(random_key(rng), rng.randrange(1, 5)) for _ in range(300)]
        a = CountMinSketch(128, 3, 16, seed=11)
        b = CountMinSketch(128, 3, 16, seed=11)
        for k, delta in ops:
            a.insert(k, delta)
            b.insert(k, delta)
        assert a.serialize() == b.serialize()

    def test_fully_accurate_fraction_matches_poisson_formula(self):
        # Exact hash-table oracle vs the closed-form collision model:
        # fraction of flows whose estimate equals truth, averaged over seeds.
        w, d = 1024, 3
        num_flows, num_packets = 2000, 10_000
        fractions = []
        for seed in range(5):
            rng = random.Random(900 + seed)
            keys = [random_key(rng) for _ in range(num_flows)]
            truth = Counter()
            sk = CountMinSketch(w, d, 32, seed=seed)
            for k in keys:  # every flow appears at least once
                truth[k] += 1
            for _ in range(num_packets - num_flows):
                truth[rng.choice(keys)] += 1
            for k, n in truth.items():
                sk.insert(k, n)
            exact = sum(1 for k, n in truth.items() if sk.query(k) == n)
            fractions.append(exact / num_flows)
        expected = cms_full_accuracy_prob(w, d, num_flows)
        assert abs(sum(fractions) / len(fractions) - expected) < 0.02


class TestSerialization:
    def test_round_trip(self, rng):
        sk = CountMinSketch(32, 2, 16, seed=4)
        for _ in range(100):
            sk.insert(random_key(rng), rng.randrange(1, 9))
        clone = CountMinSketch.deserialize(sk.serialize(), seed=4)
        assert clone.width == 32 and clone.depth == 2 and clone.counter_bits == 16
        assert (clone.rows == sk.rows).all()

    def test_golden_bytes(self):
        # Frozen dump: header (magic, d, bits, w) + row-major LE counters.
        sk = CountMinSketch(4, 2, 8, seed=7)
        sk.insert(key_from_int(1), 3)
        sk.insert(key_from_int(2), 5)
        blob = sk.serialize()
        assert blob[:8] == bytes.fromhex("434d020804000000")
        assert len(blob) == 8 + 4 * 2
        expected = [0] * 8
        for row in range(2):
            for k, delta in ((key_from_int(1), 3), (key_from_int(2), 5)):
                from flowsketch.model import hash64

                idx = hash64(k.material, 7 ^ row) % 4
                expected[row * 4 + idx] += delta
        assert list(blob[8:]) == expected

    def test_reject_garbage(self):
        with pytest.raises(ConfigError):
            CountMinSketch.deserialize(b"\x00" * 4)
        with pytest.raises(ConfigError):
            CountMinSketch.deserialize(b"\xff" * 16)
