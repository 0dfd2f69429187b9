"""Small shared helpers: thread-capped mapping and stable seeding."""

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "VOXCOVER_THREADS"


def max_threads() -> int:
    """Parallelism cap from VOXCOVER_THREADS (defaults to the CPU count)."""
    raw = os.environ.get(THREADS_ENV, "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def thread_map(fn, items):
    """Map preserving input order, using up to max_threads() workers.

    Falls back to a plain loop when only one worker is allowed, so results
    are identical regardless of the thread cap.
    """
    items = list(items)
    workers = min(max_threads(), len(items)) if items else 1
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def stable_seed(*parts) -> int:
    """64-bit seed derived from the SHA-256 of the joined parts.

    Stable across processes and platforms, unlike hash().
    """
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
