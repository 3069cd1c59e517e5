"""Trace reading and training-set construction.

The trace format is the measurement library's CSV:
ts_us,src_ip,dst_ip,src_port,dst_port,proto,header_hex (header row required).
One training example per packet: the tokenized header and the soft label of
the flow's final size in the trace.
"""

from __future__ import annotations

import csv
import ipaddress
from collections import Counter
from dataclasses import dataclass

from .features import soft_label, tokenize_header

TRACE_COLUMNS = ["ts_us", "src_ip", "dst_ip", "src_port", "dst_port", "proto", "header_hex"]


@dataclass(frozen=True)
class TraceRow:
    key_hex: str          # 13-byte packed 5-tuple, hex
    header_hex: str


@dataclass(frozen=True)
class TrainingExample:
    tokens: tuple[int, ...]
    target: float
    key_hex: str


@dataclass
class Dataset:
    examples: list[TrainingExample]
    skipped: int          # malformed/empty-header rows dropped

    def __len__(self) -> int:
        return len(self.examples)


def _pack_key(src_ip: str, dst_ip: str, sport: int, dport: int, proto: int) -> str:
    packed = (ipaddress.IPv4Address(src_ip).packed + ipaddress.IPv4Address(dst_ip).packed
              + sport.to_bytes(2, "big") + dport.to_bytes(2, "big") + bytes([proto]))
    return packed.hex()


def read_trace(path: str) -> list[TraceRow]:
    rows: list[TraceRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != TRACE_COLUMNS:
            raise ValueError(f"{path}: expected header row {','.join(TRACE_COLUMNS)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(TRACE_COLUMNS)} columns")
            key_hex = _pack_key(row[1], row[2], int(row[3]), int(row[4]), int(row[5]))
            rows.append(TraceRow(key_hex, row[6].strip()))
    return rows


def build_dataset(rows: list[TraceRow], threshold: int = 64, scale: float = 2.298) -> Dataset:
    """One example per packet; targets from exact final flow sizes. Rows with
    missing or malformed header hex are skipped and counted."""
    if not rows:
        raise ValueError("trace is empty")
    final_sizes = Counter(r.key_hex for r in rows)
    examples: list[TrainingExample] = []
    skipped = 0
    for row in rows:
        try:
            header = bytes.fromhex(row.header_hex)
        except ValueError:
            skipped += 1
            continue
        if not header:
            skipped += 1
            continue
        tokens, _ = tokenize_header(header)
        target = soft_label(final_sizes[row.key_hex], threshold, scale)
        examples.append(TrainingExample(tokens, target, row.key_hex))
    return Dataset(examples, skipped)
