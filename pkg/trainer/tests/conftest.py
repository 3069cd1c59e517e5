import csv
import io
import random
from pathlib import Path

import pytest

SHARED_VECTORS = Path(__file__).resolve().parent.parent.parent / "shared_vectors"

TRACE_HEADER = "ts_us,src_ip,dst_ip,src_port,dst_port,proto,header_hex"


def make_header(src: str, dst: str, sport: int, dport: int, proto: int = 17) -> bytes:
    """IPv4 + UDP header bytes for a synthetic packet."""
    import ipaddress
    import struct

    ip = struct.pack(">BBHHHBBH", 0x45, 0, 28, 0, 0, 64, proto, 0) \
        + ipaddress.IPv4Address(src).packed + ipaddress.IPv4Address(dst).packed
    udp = sport.to_bytes(2, "big") + dport.to_bytes(2, "big") + (8).to_bytes(2, "big") + bytes(2)
    return ip + udp


def write_port_separable_trace(path, num_large=30, num_small=120, large_size=256, small_size=4, seed=3):
    """Toy trace where the destination port alone decides the size class:
    large flows talk to port 443, small flows to port 53."""
    rng = random.Random(seed)
    rows = []
    ts = 0
    for i in range(num_large + num_small):
        large = i < num_large
        src = f"10.{(i >> 8) & 255}.{i & 255}.1"
        dst = "192.168.0.1"
        sport = rng.randint(1024, 60000)
        dport = 443 if large else 53
        size = large_size if large else small_size
        header = make_header(src, dst, sport, dport).hex()
        for _ in range(size):
            rows.append(f"{ts},{src},{dst},{sport},{dport},17,{header}")
            ts += 1
    rng.shuffle(rows)
    Path(path).write_text(TRACE_HEADER + "\n" + "\n".join(rows) + "\n")
    return num_large * large_size + num_small * small_size


@pytest.fixture
def separable_trace(tmp_path):
    path = tmp_path / "separable.csv"
    write_port_separable_trace(path)
    return path
