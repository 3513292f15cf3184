import os
from concurrent.futures import ThreadPoolExecutor


def max_workers(requested=None):
    """Worker count, capped by the QDP_THREADS environment variable."""
    cap = os.environ.get("QDP_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def ordered_map(fn, items, n_jobs=None):
    """``list(map(fn, items))``, threaded when more than one worker is allowed.

    Results keep input order, so output is independent of scheduling.
    """
    items = list(items)
    workers = max_workers(n_jobs)
    if workers == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
