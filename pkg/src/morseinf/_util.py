"""Sampling helpers and a small order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "MORSE_INFINITY_THREADS"


def worker_count() -> int:
    """Number of worker threads, capped by ``MORSE_INFINITY_THREADS`` if set."""
    default = min(8, os.cpu_count() or 1)
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return default
    try:
        cap = int(raw)
    except ValueError:
        return default
    return max(1, min(cap, default))


def parallel_map(fn, items) -> list:
    """``list(map(fn, items))`` across threads; output order matches input."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def unit_in(basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit vector in the column span of ``basis``."""
    k = basis.shape[1]
    if k == 0:
        return np.zeros(basis.shape[0])
    c = rng.standard_normal(k)
    return basis @ (c / np.linalg.norm(c))


def ball_in(basis: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform random point in the ball of ``radius`` inside ``span(basis)``."""
    k = basis.shape[1]
    if k == 0:
        return np.zeros(basis.shape[0])
    return unit_in(basis, rng) * radius * rng.uniform() ** (1.0 / k)


def unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    c = rng.standard_normal(dim)
    return c / np.linalg.norm(c)
