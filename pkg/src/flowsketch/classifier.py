"""Flow-classifier surface the sketch calls when a bucket is full.

A backend maps a packet to a score in [0, 1]; binarize() turns the score into
the large/small decision. Built-in backends cover testing and deployment:

  OracleBackend        exact future sizes from a preloaded truth map
  NoisyOracle          oracle with the decision flipped per flow w.p. 1 - A
  StaticBackend        constant score, for ablations
  PredictionFileBackend  scores exported by the trainer (CSV)
  RemoteBackend        scores served over a newline-delimited socket protocol

Model execution itself lives behind the file/remote backends; nothing in this
package runs a neural net.
"""

from __future__ import annotations

import csv
import math
import socket
import threading
from typing import Iterable, Mapping, NamedTuple

from .model import FlowKey, ConfigError, InputError, PacketRecord, hash64, pad_to_even

IPV4_HEADER_MIN = 20
_IP_FIELDS = slice(12, 20)  # src + dst address bytes inside the IPv4 header


class ClassificationError(RuntimeError):
    """Backend could not produce a score (timeout, protocol violation)."""


def soft_label(n: float, threshold: int = 64, scale: float = 2.298) -> float:
    """Sigmoid-smoothed large/small label: sigma(scale * (log2 n - log2 T)).

    Strictly increasing in n; 0.5 exactly at n == T; flows 4x above the
    threshold land above 0.99 and 4x below land under 0.01 at the default
    scale.
    """
    if n < 1 or threshold < 1:
        raise ConfigError("soft_label needs n >= 1 and threshold >= 1")
    if scale <= 0:
        raise ConfigError("soft_label scale must be positive")
    x = scale * (math.log2(n) - math.log2(threshold))
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def binarize(score: float) -> int:
    """Large/small decision: 1 iff score >= 0.5 (size-T flows count as large)."""
    return 1 if score >= 0.5 else 0


class TokenizedHeader(NamedTuple):
    tokens: tuple[int, ...]
    short_header: bool  # too short for an IPv4 header; tokenized raw


def tokenize_header(header_bytes: bytes) -> TokenizedHeader:
    """Two-byte big-endian tokens of the header with the IP addresses removed.

    The source and destination address fields (bytes 12..19 of the IPv4
    header) are stripped before chunking so models cannot overfit specific
    endpoints. Headers too short to hold an IPv4 header are tokenized
    unmodified and flagged. Odd lengths get one zero pad byte.
    """
    short = len(header_bytes) < IPV4_HEADER_MIN
    stripped = header_bytes if short else header_bytes[: _IP_FIELDS.start] + header_bytes[_IP_FIELDS.stop :]
    stripped = pad_to_even(stripped)
    tokens = tuple((stripped[i] << 8) | stripped[i + 1] for i in range(0, len(stripped), 2))
    return TokenizedHeader(tokens, short)


class OracleBackend:
    """Scores from exact final flow sizes; isolates sketch behavior from model
    quality. Unknown keys score 0.0."""

    def __init__(self, truth: Mapping[FlowKey, int], threshold: int = 64, scale: float = 2.298):
        self.threshold = threshold
        self.scale = scale
        self._scores = {key: soft_label(n, threshold, scale) for key, n in truth.items()}

    def classify(self, pkt: PacketRecord) -> float:
        return self._scores.get(pkt.key, 0.0)


class NoisyOracle:
    """Wraps any backend and flips its binary decision with probability 1 - A.

    The flip is a deterministic per-flow coin (hash of the key and seed), so a
    flow's predicted class never changes across its packets.
    """

    def __init__(self, base, accuracy: float, seed: int = 0):
        if not 0.0 <= accuracy <= 1.0:
            raise ConfigError(f"accuracy must be in [0, 1], got {accuracy}")
        self.base = base
        self.accuracy = accuracy
        self.seed = seed

    def _flip(self, key: FlowKey) -> bool:
        u = hash64(key.material, self.seed) / 2.0**64
        return u < (1.0 - self.accuracy)

    def classify(self, pkt: PacketRecord) -> float:
        decision = binarize(self.base.classify(pkt))
        if self._flip(pkt.key):
            decision = 1 - decision
        return float(decision)


class StaticBackend:
    """Constant score for every packet."""

    def __init__(self, score: float):
        if not 0.0 <= score <= 1.0:
            raise ConfigError(f"score must be in [0, 1], got {score}")
        self.score = score

    def classify(self, pkt: PacketRecord) -> float:
        return self.score


class PredictionFileBackend:
    """Per-flow scores from a trainer export: CSV `flow_key_hex,score` with a
    header row. Keys missing from the file get the configured default."""

    def __init__(self, path: str, default: float = 0.0):
        self.default = default
        self._scores: dict[FlowKey, float] = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip().lower() for c in header[:2]] != ["flow_key_hex", "score"]:
                raise InputError(f"{path}: expected header row 'flow_key_hex,score'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) < 2:
                    raise InputError(f"{path}:{lineno}: expected 2 columns")
                key = FlowKey.from_hex(row[0].strip())
                try:
                    score = float(row[1])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: bad score {row[1]!r}") from exc
                if not 0.0 <= score <= 1.0:
                    raise InputError(f"{path}:{lineno}: score {score} outside [0, 1]")
                self._scores[key] = score

    def __len__(self) -> int:
        return len(self._scores)

    def classify(self, pkt: PacketRecord) -> float:
        return self._scores.get(pkt.key, self.default)


class RemoteBackend:
    """Line protocol to an external scorer: send hex(header) + newline, read a
    decimal score + newline. One serialized connection; concurrent classify
    calls are safe."""

    def __init__(self, address: str, timeout: float = 0.05):
        host, _, port = address.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"remote address must be host:port, got {address!r}")
        self.address = address
        self.timeout = timeout
        self._lock = threading.Lock()
        self._sock: socket.socket | None = None
        self._file = None

    def _connect(self):
        host, _, port = self.address.rpartition(":")
        sock = socket.create_connection((host, int(port)), timeout=self.timeout)
        sock.settimeout(self.timeout)
        self._sock = sock
        self._file = sock.makefile("rwb")

    def _close_locked(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock, self._file = None, None

    def close(self) -> None:
        with self._lock:
            self._close_locked()

    def classify(self, pkt: PacketRecord) -> float:
        with self._lock:
            try:
                if self._sock is None:
                    self._connect()
                self._file.write(pkt.header_bytes.hex().encode("ascii") + b"\n")
                self._file.flush()
                line = self._file.readline()
            except (OSError, ValueError) as exc:
                self._close_locked()
                raise ClassificationError(f"remote scorer failed: {exc}") from exc
            if not line:
                self._close_locked()
                raise ClassificationError("remote scorer closed the connection")
        text = line.strip().decode("ascii", errors="replace")
        try:
            score = float(text)
        except ValueError:
            raise ClassificationError(f"remote scorer sent non-numeric reply {text!r}") from None
        if not 0.0 <= score <= 1.0:
            raise ClassificationError(f"remote score {score} outside [0, 1]")
        return score


def classify(backend, pkt: PacketRecord) -> float:
    """Uniform entry point; validates the backend's score range."""
    score = backend.classify(pkt)
    if not 0.0 <= score <= 1.0:
        raise ClassificationError(f"backend produced score {score} outside [0, 1]")
    return score


def write_prediction_file(path: str, scores: Iterable[tuple[FlowKey, float]]) -> None:
    """Write the CSV format PredictionFileBackend reads."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["flow_key_hex", "score"])
        for key, score in scores:
            writer.writerow([key.hex(), f"{score:.9f}"])
