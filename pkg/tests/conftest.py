import random

import pytest

from flowsketch.model import FlowKey


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_key(rng: random.Random) -> FlowKey:
    return FlowKey(data=rng.getrandbits(104).to_bytes(13, "big"))


def key_from_int(i: int) -> FlowKey:
    """Distinct 13-byte keys from small integers; stable across runs."""
    return FlowKey(data=i.to_bytes(13, "big"))
