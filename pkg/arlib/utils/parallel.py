import os
from concurrent.futures import ThreadPoolExecutor

from arlib.utils.log import log

__all__ = ["num_threads", "parallel_map", "THREADS_ENV"]

THREADS_ENV = "ARLIB_NUM_THREADS"


def num_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(raw)
    except ValueError:
        log.warning("ignoring %s=%r: not an integer", THREADS_ENV, raw)
        return 1
    return max(threads, 1)


def parallel_map(fn, items, threads=None):
    """``[fn(item) for item in items]``, optionally on a thread pool; order is kept."""
    items = list(items)
    threads = num_threads() if threads is None else max(int(threads), 1)
    if threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    log.debug("mapping %d items over %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
