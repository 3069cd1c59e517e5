"""Trace ingestion and synthetic generation.

The trace file format is CSV with a required header row:

    ts_us,src_ip,dst_ip,src_port,dst_port,proto,header_hex

header_hex may be empty; runs that classify from exact sizes need no bytes.
The packet-dump ingest reads a minimal binary capture format: per record a
little-endian (ts_sec u32, ts_usec u32, caplen u32) prefix followed by caplen
bytes of an Ethernet frame; IPv4 TCP/UDP frames become rows, everything else
is counted and skipped.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

from .model import FlowKey, InputError, PacketRecord

TRACE_COLUMNS = ["ts_us", "src_ip", "dst_ip", "src_port", "dst_port", "proto", "header_hex"]

_ETHERTYPE_IPV4 = 0x0800
_PROTO_TCP = 6
_PROTO_UDP = 17


def _key_fields(key: FlowKey) -> tuple[str, str, int, int, int]:
    d = key.data
    src = ".".join(str(b) for b in d[0:4])
    dst = ".".join(str(b) for b in d[4:8])
    return src, dst, int.from_bytes(d[8:10], "big"), int.from_bytes(d[10:12], "big"), d[12]


def write_trace(path: str, records: list[PacketRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            src, dst, sport, dport, proto = _key_fields(rec.key)
            writer.writerow([rec.timestamp_us, src, dst, sport, dport, proto, rec.header_bytes.hex()])


def read_trace(path: str) -> list[PacketRecord]:
    """Parse a trace CSV; malformed rows raise InputError with the row number.
    Flow keys are interned so identical 5-tuples share one FlowKey object."""
    interned: dict[bytes, FlowKey] = {}
    records: list[PacketRecord] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read trace {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != TRACE_COLUMNS:
            raise InputError(f"{path}: expected header row {','.join(TRACE_COLUMNS)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_COLUMNS):
                raise InputError(f"{path}:{lineno}: expected {len(TRACE_COLUMNS)} columns, got {len(row)}")
            try:
                ts = int(row[0])
                sport, dport, proto = int(row[3]), int(row[4]), int(row[5])
                key = FlowKey.from_tuple(row[1], row[2], sport, dport, proto)
                header_bytes = bytes.fromhex(row[6]) if row[6] else b""
            except (ValueError, InputError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            key = interned.setdefault(key.data, key)
            records.append(PacketRecord(key, header_bytes, ts))
    return records


def synth_header(key: FlowKey, udp: bool = False) -> bytes:
    """Deterministic IPv4 + TCP/UDP header bytes for a synthesized flow."""
    d = key.data
    proto = d[12]
    l4 = d[8:12] + (b"\x00\x08\x00\x00" if udp or proto == _PROTO_UDP
                    else b"\x00\x00\x00\x01\x00\x00\x00\x00\x50\x10\x20\x00\x00\x00\x00\x00")
    total_len = 20 + len(l4)
    ip = struct.pack(">BBHHHBBH", 0x45, 0, total_len, 0, 0, 64, proto, 0) + d[0:4] + d[4:8]
    return ip + l4


@dataclass(frozen=True)
class ZipfParams:
    num_flows: int
    num_packets: int
    alpha: float = 1.0
    seed: int = 1
    include_headers: bool = True

    def __post_init__(self):
        if self.num_flows < 1:
            raise InputError("num_flows must be >= 1")
        if self.num_packets < self.num_flows:
            raise InputError("num_packets must be >= num_flows")
        if self.alpha <= 0:
            raise InputError("zipf alpha must be positive")


def zipf_sizes(num_flows: int, num_packets: int, alpha: float) -> list[int]:
    """Deterministic flow sizes: Zipf masses apportioned by largest remainder,
    every flow at least 1 packet, sizes summing exactly to num_packets."""
    ranks = np.arange(1, num_flows + 1, dtype=np.float64)
    weights = ranks ** -alpha
    raw = weights * (num_packets / weights.sum())
    sizes = np.maximum(np.floor(raw).astype(np.int64), 1)
    leftover = num_packets - int(sizes.sum())
    if leftover > 0:
        remainders = raw - np.floor(raw)
        order = np.lexsort((ranks, -remainders))
        sizes[order[:leftover]] += 1
    elif leftover < 0:
        # min-1 bumps overshot the target; take the excess off the largest flows
        for i in range(num_flows):
            give = min(int(sizes[i]) - 1, -leftover)
            sizes[i] -= give
            leftover += give
            if leftover == 0:
                break
    return [int(s) for s in sizes]


def generate_zipf(params: ZipfParams) -> list[PacketRecord]:
    """Synthetic skewed trace: Zipf(alpha) flow sizes, seeded shuffle of the
    packet order, synthesized 5-tuples. Same params -> identical trace."""
    sizes = zipf_sizes(params.num_flows, params.num_packets, params.alpha)
    rng = np.random.default_rng(params.seed)

    keys: list[FlowKey] = []
    for i in range(params.num_flows):
        src = f"10.{(i >> 16) & 255}.{(i >> 8) & 255}.{i & 255}"
        dst = f"192.{168 + ((i >> 18) & 3)}.{(i >> 9) & 255}.{(i >> 1) & 255}"
        sport = 1024 + int(rng.integers(0, 60000))
        dport = int(rng.choice([53, 80, 123, 443, 8080]))
        proto = _PROTO_UDP if (i & 3) == 0 else _PROTO_TCP
        keys.append(FlowKey.from_tuple(src, dst, sport, dport, proto))

    flow_of_packet = np.repeat(np.arange(params.num_flows), sizes)
    rng.shuffle(flow_of_packet)

    headers = [synth_header(k) if params.include_headers else b"" for k in keys]
    return [
        PacketRecord(keys[f], headers[f], ts)
        for ts, f in enumerate(flow_of_packet.tolist())
    ]


def ingest_packet_dump(path: str) -> tuple[list[PacketRecord], int]:
    """Convert the binary packet-dump subset to trace records.

    Returns (records, skipped) where skipped counts non-IPv4/non-TCP-UDP
    frames. Truncated records raise InputError with the byte offset.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read dump {path!r}: {exc}") from exc

    records: list[PacketRecord] = []
    skipped = 0
    interned: dict[bytes, FlowKey] = {}
    off = 0
    while off < len(blob):
        if off + 12 > len(blob):
            raise InputError(f"{path}: truncated record header at offset {off}")
        ts_sec, ts_usec, caplen = struct.unpack_from("<III", blob, off)
        off += 12
        if off + caplen > len(blob):
            raise InputError(f"{path}: truncated record body at offset {off} (caplen {caplen})")
        frame = blob[off : off + caplen]
        off += caplen

        parsed = _parse_frame(frame)
        if parsed is None:
            skipped += 1
            continue
        key, header = parsed
        key = interned.setdefault(key.data, key)
        records.append(PacketRecord(key, header, ts_sec * 1_000_000 + ts_usec))
    return records, skipped


def _parse_frame(frame: bytes) -> tuple[FlowKey, bytes] | None:
    if len(frame) < 14 + 20:
        return None
    ethertype = (frame[12] << 8) | frame[13]
    if ethertype != _ETHERTYPE_IPV4:
        return None
    ip = frame[14:]
    if (ip[0] >> 4) != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl + 4:
        return None
    proto = ip[9]
    if proto not in (_PROTO_TCP, _PROTO_UDP):
        return None
    sport = (ip[ihl] << 8) | ip[ihl + 1]
    dport = (ip[ihl + 2] << 8) | ip[ihl + 3]
    packed = ip[12:16] + ip[16:20] + ip[ihl : ihl + 4] + bytes([proto])
    key = FlowKey(data=packed)
    l4_len = 8 if proto == _PROTO_UDP else min(20, len(ip) - ihl)
    header = ip[: ihl + l4_len]
    return key, header


def trace_to_csv_bytes(records: list[PacketRecord]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in records:
        src, dst, sport, dport, proto = _key_fields(rec.key)
        writer.writerow([rec.timestamp_us, src, dst, sport, dport, proto, rec.header_bytes.hex()])
    return buf.getvalue().encode()
