from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally fanned over a thread pool.

    Results keep the input order whatever the completion order.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))
