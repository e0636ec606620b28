import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Worker cap from ``EKLAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("EKLAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items, threads=None):
    """Map ``fn`` over ``items``; results come back in input order."""
    items = list(items)
    workers = min(thread_count() if threads is None else threads, len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
