"""Line-protocol scorer: hex header in, decimal score out, "ERR" on garbage.

One connection served at a time; the protocol is strict request/response, so
no concurrency is needed. The connection survives malformed requests.
"""

from __future__ import annotations

import socket

from .features import tokenize_header
from .models import score_batch


def score_line(model, line: str) -> str:
    text = line.strip()
    if not text:
        return "ERR"
    try:
        header = bytes.fromhex(text)
    except ValueError:
        return "ERR"
    if not header:
        return "ERR"
    tokens, _ = tokenize_header(header)
    score = float(score_batch(model, [tokens])[0])
    return f"{min(1.0, max(0.0, score)):.6f}"


def serve(model, host: str, port: int, ready_callback=None, max_connections: int | None = None) -> None:
    """Blocking accept loop. ready_callback (if given) receives the bound
    port before the first accept; max_connections bounds the loop for tests."""
    with socket.create_server((host, port)) as server:
        if ready_callback is not None:
            ready_callback(server.getsockname()[1])
        served = 0
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            served += 1
            with conn, conn.makefile("rwb") as fh:
                while True:
                    line = fh.readline()
                    if not line:
                        break
                    reply = score_line(model, line.decode("ascii", errors="replace"))
                    fh.write(reply.encode("ascii") + b"\n")
                    fh.flush()
