"""Ordered thread-pool map capped by ``FRACSYS_THREADS`` (0 or unset = automatic)."""
import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("FRACSYS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FRACSYS_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("FRACSYS_THREADS must be nonnegative")
    return n if n > 0 else min(8, os.cpu_count() or 1)


def ordered_map(fn, items):
    """``[fn(x) for x in items]``, possibly evaluated concurrently; order is preserved."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
