"""Order-preserving thread map used for per-cascade and per-body work.

Results are always returned in input order and every reduction downstream
is done sequentially over that order, so the thread count never changes
output bits.
"""

from concurrent.futures import ThreadPoolExecutor

_threads = 1


def set_threads(n):
    global _threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = int(n)


def get_threads():
    return _threads


def ordered_map(fn, items):
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(fn, items))
