"""Domain types shared by every structure: flow identity, packets, configuration.

A flow is identified either by its packed 13-byte 5-tuple (srcIP, dstIP,
srcPort, dstPort, proto) or by a short fingerprint hash of it. All hashing
throughout the package is seeded 64-bit xxhash, so results are reproducible
across runs and platforms.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field, fields

import xxhash

FULL_KEY_BYTES = 13          # 4 + 4 + 2 + 2 + 1 packed bytes, no alignment padding
SIZE_COUNTER_BYTES = 4       # heavy-part per-cell size counter
FINGERPRINT_WIDTHS = (16, 32)

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Structural or parameter misconfiguration (CLI exit code 2)."""


class InputError(ValueError):
    """Unreadable or malformed input data (CLI exit code 3)."""


def hash64(data: bytes, seed: int) -> int:
    """Seeded 64-bit hash of raw bytes."""
    return xxhash.xxh64_intdigest(data, seed & _MASK64)


def derive_seed(seed: int, tag: int) -> int:
    """Independent child seed for substructure number `tag`."""
    return xxhash.xxh64_intdigest(tag.to_bytes(8, "little"), seed & _MASK64)


def pad_to_even(data: bytes) -> bytes:
    """Append one zero byte when the length is odd, so two-byte chunking is total."""
    return data + b"\x00" if len(data) & 1 else data


class FlowKey:
    """Flow identity: exactly one of a packed byte key or an integer fingerprint.

    Equality and hashing are defined over whichever representation is active;
    a byte key and a fingerprint never compare equal.
    """

    __slots__ = ("data", "fp", "fp_bits", "_hash")

    def __init__(self, data: bytes | None = None, fp: int | None = None, fp_bits: int = 0):
        if (data is None) == (fp is None):
            raise ConfigError("FlowKey needs exactly one of data bytes or a fingerprint")
        if fp is not None:
            if fp_bits not in FINGERPRINT_WIDTHS:
                raise ConfigError(f"unsupported fingerprint width: {fp_bits}")
            if not 0 <= fp < (1 << fp_bits):
                raise ConfigError(f"fingerprint {fp} out of range for {fp_bits} bits")
        self.data = data
        self.fp = fp
        self.fp_bits = fp_bits if fp is not None else 0
        self._hash = hash((data, fp, self.fp_bits))

    @classmethod
    def from_tuple(cls, src_ip: str, dst_ip: str, src_port: int, dst_port: int, proto: int) -> "FlowKey":
        if not (0 <= src_port <= 0xFFFF and 0 <= dst_port <= 0xFFFF):
            raise InputError(f"port out of range: {src_port}, {dst_port}")
        if not 0 <= proto <= 0xFF:
            raise InputError(f"protocol out of range: {proto}")
        try:
            sip = ipaddress.IPv4Address(src_ip).packed
            dip = ipaddress.IPv4Address(dst_ip).packed
        except ipaddress.AddressValueError as exc:
            raise InputError(f"bad IPv4 address: {exc}") from exc
        packed = sip + dip + src_port.to_bytes(2, "big") + dst_port.to_bytes(2, "big") + bytes([proto])
        return cls(data=packed)

    @classmethod
    def from_hex(cls, hex_str: str) -> "FlowKey":
        try:
            return cls(data=bytes.fromhex(hex_str))
        except ValueError as exc:
            raise InputError(f"bad flow key hex: {hex_str!r}") from exc

    @property
    def material(self) -> bytes:
        """Bytes fed to hash functions."""
        if self.data is not None:
            return self.data
        return self.fp.to_bytes(self.fp_bits // 8, "little")

    @property
    def src_ip_int(self) -> int:
        if self.data is None or len(self.data) < 4:
            raise ConfigError("source IP is only defined for byte-keyed flows")
        return int.from_bytes(self.data[:4], "big")

    def hex(self) -> str:
        return self.material.hex()

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, FlowKey):
            return NotImplemented
        return self.data == other.data and self.fp == other.fp and self.fp_bits == other.fp_bits

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if self.data is not None:
            return f"FlowKey({self.data.hex()})"
        return f"FlowKey(fp={self.fp:#x}/{self.fp_bits})"


@dataclass(frozen=True)
class PacketRecord:
    """One packet: flow key, raw header bytes, microsecond timestamp.

    header_bytes may be empty when only key-based processing is needed.
    Tokenization pads to an even length, so any length is acceptable here.
    """

    key: FlowKey
    header_bytes: bytes = b""
    timestamp_us: int = 0


def make_fingerprint(key: FlowKey, bits: int, seed: int) -> FlowKey:
    """Short hash standing in for the full key; collisions are permitted."""
    if bits not in FINGERPRINT_WIDTHS:
        raise ConfigError(f"unsupported fingerprint width: {bits}")
    if key.data is None:
        raise ConfigError("fingerprints are derived from byte-keyed flows")
    value = hash64(key.data, seed) & ((1 << bits) - 1)
    return FlowKey(fp=value, fp_bits=bits)


@dataclass
class SketchConfig:
    """Structural parameters for the two-tier sketch.

    w_h / w_light of 0 mean "derive from a memory budget" via
    memory_budget_split, which writes the computed widths back.
    """

    w_h: int = 0
    d_h: int = 8
    w_light: int = 0
    d_light: int = 3
    light_counter_bits: int = 8
    threshold_T: int = 64
    scale_a: float = 2.298
    heavy_ratio: float = 0.20
    hh_threshold_fraction: float = 0.0001
    seed: int = 1
    fingerprint_bits: int = 0
    classify_resident: bool = False

    def validate(self) -> None:
        if self.d_h < 1 or self.d_light < 1:
            raise ConfigError("bucket depth and light rows must be >= 1")
        if self.light_counter_bits not in (8, 16, 32):
            raise ConfigError(f"unsupported light counter width: {self.light_counter_bits}")
        if self.threshold_T < 1:
            raise ConfigError("threshold_T must be >= 1")
        if self.scale_a <= 0:
            raise ConfigError("scale_a must be positive")
        if not 0 < self.heavy_ratio <= 1.0:
            raise ConfigError("heavy_ratio must be in (0, 1]")
        if self.fingerprint_bits not in (0, *FINGERPRINT_WIDTHS):
            raise ConfigError(f"unsupported fingerprint width: {self.fingerprint_bits}")

    def copy(self) -> "SketchConfig":
        return SketchConfig(**{f.name: getattr(self, f.name) for f in fields(self)})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def cell_cost_bytes(cfg: SketchConfig) -> int:
    """Per-cell heavy-part cost: key bytes + size counter; the lock flag rides
    in a spare counter bit and costs nothing extra."""
    key_bytes = cfg.fingerprint_bits // 8 if cfg.fingerprint_bits else FULL_KEY_BYTES
    return key_bytes + SIZE_COUNTER_BYTES


def memory_budget_split(total_bytes: int, cfg: SketchConfig, mode: str = "size") -> tuple[int, int]:
    """Split a byte budget between the tiers and derive w_h / w_light.

    heavy gets round(heavy_ratio * total); light gets the remainder. The
    derived widths are written back into cfg. A zero-width light part is only
    legal in heavy-hitter mode, where the light tier is omitted entirely.
    """
    cfg.validate()
    heavy_bytes = round(cfg.heavy_ratio * total_bytes)
    light_bytes = total_bytes - heavy_bytes

    cell = cell_cost_bytes(cfg)
    w_h = heavy_bytes // (cfg.d_h * cell)
    if w_h < 1:
        raise ConfigError(
            f"budget {total_bytes} B leaves {heavy_bytes} B for the heavy part; "
            f"one bucket needs {cfg.d_h * cell} B"
        )

    counter_bytes = cfg.light_counter_bits // 8
    w_light = light_bytes // (cfg.d_light * counter_bytes)
    if w_light < 1 and mode != "hh":
        raise ConfigError(
            f"budget {total_bytes} B leaves {light_bytes} B for the light part; "
            f"one counter row needs {cfg.d_light * counter_bytes} B (use mode 'hh' to omit it)"
        )
    if mode == "hh" and w_light < 1:
        w_light = 0

    cfg.w_h = w_h
    cfg.w_light = w_light
    return heavy_bytes, light_bytes
