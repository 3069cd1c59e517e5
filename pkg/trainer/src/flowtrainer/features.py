"""Header tokenization and soft labels.

Both functions must stay bit-identical to the measurement library's versions;
the shared vector files under shared_vectors/ are the conformance contract
(tested on both sides). The trainer deliberately has its own copies so it can
run without the measurement package installed.
"""

from __future__ import annotations

import math

IPV4_HEADER_MIN = 20


def tokenize_header(header_bytes: bytes) -> tuple[tuple[int, ...], bool]:
    """Two-byte big-endian tokens; IPv4 source/destination address bytes
    (offsets 12..19) removed first; odd lengths padded with one zero byte.
    Returns (tokens, short_header)."""
    short = len(header_bytes) < IPV4_HEADER_MIN
    data = header_bytes if short else header_bytes[:12] + header_bytes[20:]
    if len(data) & 1:
        data += b"\x00"
    tokens = tuple((data[i] << 8) | data[i + 1] for i in range(0, len(data), 2))
    return tokens, short


def soft_label(n: float, threshold: int = 64, scale: float = 2.298) -> float:
    """sigma(scale * (log2 n - log2 threshold)); 0.5 at the threshold."""
    if n < 1 or threshold < 1 or scale <= 0:
        raise ValueError("soft_label needs n >= 1, threshold >= 1, scale > 0")
    x = scale * (math.log2(n) - math.log2(threshold))
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)
