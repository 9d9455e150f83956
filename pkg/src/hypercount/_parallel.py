"""Block-seeded parallel map shared by the samplers.

Work is cut into blocks whose boundaries depend only on the job, and block
b draws from SeedSequence(seed, spawn_key=(b,)).  The worker count therefore
changes the wall time and nothing else.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import DomainError


def default_threads() -> int:
    env = os.environ.get("HYPERCOUNT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"HYPERCOUNT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _call(args):
    fn, rest = args
    return fn(*rest)


def map_blocks(fn, jobs, threads=None) -> list:
    """[fn(*job) for job in jobs], in order, on up to ``threads`` processes."""
    jobs = list(jobs)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        return list(pool.map(_call, [(fn, j) for j in jobs]))
