import concurrent.futures
from typing import Callable, Iterable, TypeVar

from klt import logger

log = logger.get()

P = TypeVar("P")
R = TypeVar("R")


def run_partitioned(
    fn: Callable[[P], R], parts: Iterable[P], workers: int = 1, processes: bool = False
) -> list[R]:
    """
    Function that maps `fn` over independent parts, returning results in part order.

    With a single worker the parts run inline. CPU bound callers ask for processes, in
    which case `fn` and every part must be picklable.

    :param fn: the function applied to each part.
    :param parts: the parts.
    :param workers: the number of concurrent workers.
    :param processes: use a process pool instead of a thread pool.
    :return: the results, one per part, in the order the parts were given.
    """

    parts = list(parts)
    if workers <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]

    executor_cls: type[concurrent.futures.Executor] = concurrent.futures.ThreadPoolExecutor
    if processes:
        executor_cls = concurrent.futures.ProcessPoolExecutor
    log.debug(f"Running {len(parts)} parts on {workers} {'processes' if processes else 'threads'}")
    with executor_cls(max_workers=workers) as executor:
        return list(executor.map(fn, parts))


def split_range(lo: int, hi: int, pieces: int) -> list[tuple[int, int]]:
    """
    Function that cuts the inclusive integer range [lo, hi] into contiguous chunks.

    :param lo: the first integer.
    :param hi: the last integer.
    :param pieces: the wanted number of chunks.
    :return: inclusive (start, stop) pairs in increasing order, none empty.
    """

    if hi < lo:
        return []
    count = hi - lo + 1
    pieces = max(1, min(pieces, count))
    size, extra = divmod(count, pieces)
    out = []
    start = lo
    for i in range(pieces):
        stop = start + size + (1 if i < extra else 0) - 1
        out.append((start, stop))
        start = stop + 1
    return out
