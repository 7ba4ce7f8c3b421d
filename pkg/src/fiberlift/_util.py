"""Deterministic keyed random streams and an order-preserving thread map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_THREADS = int(os.environ.get("FIBERLIFT_THREADS", "1"))


def keyed_rng(seed, *key):
    """Generator keyed by ``(seed, *key)``; independent of call order."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def set_threads(n):
    global _THREADS
    _THREADS = max(1, int(n))


def get_threads():
    return _THREADS


def pmap(fn, items, threads=None):
    """``list(map(fn, items))`` on a thread pool; result order is input order."""
    items = list(items)
    n = get_threads() if threads is None else threads
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def circle_dist(a, b):
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)
