"""Fixed-block batch evaluation with an optional thread pool.

Batches are always cut into blocks of the same size, whatever the number of
workers, so results do not depend on thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1024

_threads = int(os.environ.get("RSOC_THREADS", "1"))


def set_threads(n):
    global _threads
    _threads = max(1, int(n))


def get_threads():
    return _threads


def map_blocks(fn, *arrays, threads=None):
    """Apply ``fn`` to aligned row-blocks of the flattened leading axis.

    Each array has shape (B, ...); ``fn`` receives blocks of at most
    ``BLOCK`` rows and returns an array or a tuple of arrays with leading
    axis equal to the block length.
    """
    n = arrays[0].shape[0]
    if n <= BLOCK:
        return fn(*arrays)
    starts = range(0, n, BLOCK)
    blocks = [tuple(a[s:s + BLOCK] for a in arrays) for s in starts]
    workers = threads or _threads
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(lambda b: fn(*b), blocks))
    else:
        outs = [fn(*b) for b in blocks]
    if isinstance(outs[0], tuple):
        return tuple(np.concatenate(parts, axis=0) for parts in zip(*outs))
    return np.concatenate(outs, axis=0)
