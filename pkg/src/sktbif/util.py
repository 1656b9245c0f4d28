"""Small shared helpers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def indexed_map(fn, items, threads: int = 1) -> list:
    """Map fn over items, optionally with a thread pool.

    Results keep the input order regardless of execution order, so sweep
    output is deterministic.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def format_real(x: float) -> str:
    """Format a real with 17 significant digits, '.' decimal separator."""
    return f"{x:.17g}"
