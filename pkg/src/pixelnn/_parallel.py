"""Thread-count policy: all parallelism is capped by PIXELNN_THREADS (0 = auto)."""

from __future__ import annotations

import os


def thread_count() -> int:
    raw = os.environ.get("PIXELNN_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"PIXELNN_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"PIXELNN_THREADS must be >= 0, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n
