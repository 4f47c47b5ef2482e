"""Seed derivation and deterministic chunked parallel map.

Every random quantity is drawn from a stream keyed by ``(master seed, chunk
index)`` where chunks have a fixed size, so the worker count can never change a
result.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

CHUNK = 4096


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def n_threads() -> int:
    raw = os.environ.get("RWDE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def chunk_bounds(n: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(n, lo + chunk)) for lo in range(0, n, chunk)]


def chunked_map(fn: Callable[[np.random.Generator, int], np.ndarray], n: int, seed: int,
                tag: int = 0, chunk: int = CHUNK, threads: int | None = None) -> np.ndarray:
    """Concatenate ``fn(rng_k, size_k)`` over fixed-size chunks ``k``.

    ``rng_k`` depends only on ``(seed, tag, k)``; results are joined in chunk
    order whatever the thread count.
    """
    bounds = chunk_bounds(n, chunk)
    jobs: Sequence = [(stream(seed, tag, k), hi - lo) for k, (lo, hi) in enumerate(bounds)]
    threads = n_threads() if threads is None else threads
    if threads <= 1 or len(jobs) <= 1:
        parts = [fn(r, m) for r, m in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)
