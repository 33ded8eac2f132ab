import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "FDDE_STAB_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def ordered_map(fn, items):
    """``list(map(fn, items))``, spread over at most ``FDDE_STAB_THREADS`` threads."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
