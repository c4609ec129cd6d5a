"""Counter-based random streams and an order-preserving block runner.

Every random draw in the package comes from a Philox generator keyed by
``(seed, stream_id)`` whose counter starts at ``block_index``. Work is cut
into fixed-size blocks, so the numbers a block sees do not depend on how
many workers process the blocks or in which order they finish.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

_MASK64 = (1 << 64) - 1
DEFAULT_BLOCK = 8192

R = TypeVar("R")


def stream_id(name: str) -> int:
    """Stable 32-bit id for a named stream."""
    return zlib.crc32(name.encode("utf-8"))


def generator(seed: int, stream: int | str, block: int = 0) -> np.random.Generator:
    """Generator for one block of one stream.

    Distinct blocks start 2**64 Philox counter steps apart, far more than any
    block consumes.
    """
    sid = stream_id(stream) if isinstance(stream, str) else int(stream)
    key = (int(seed) & _MASK64) | ((sid & _MASK64) << 64)
    counter = (int(block) & _MASK64) << 64
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def block_sizes(total: int, block: int = DEFAULT_BLOCK) -> list[int]:
    full, rest = divmod(int(total), block)
    return [block] * full + ([rest] if rest else [])


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get("SIEGELLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, int(workers or 1))


def run_blocks(fn: Callable[[int], R], n_blocks: int, workers: int | None = None) -> list[R]:
    """Evaluate ``fn(i)`` for every block index, results in index order.

    ``fn`` must be picklable when more than one worker is used.
    """
    w = resolve_workers(workers)
    if w == 1 or n_blocks <= 1:
        return [fn(i) for i in range(n_blocks)]
    with ProcessPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, range(n_blocks)))


def ordered_fsum(parts: Sequence[float]) -> float:
    """Exactly rounded sum, independent of summation order."""
    import math

    return math.fsum(parts)
