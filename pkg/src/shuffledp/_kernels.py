"""Hot Monte Carlo kernels: numba-jitted with a pure-numpy fallback.

Backend selection happens once at import. ``SHUFFLEDP_BACKEND=numpy``
forces the fallback; ``SHUFFLEDP_BACKEND=numba`` requires numba; unset
picks numba when importable. Both backends consume the exact same
counter-based Philox streams (numba's scalar ``standard_normal`` is
bitwise-identical to numpy's array fill), so they produce the same
replica values; only the per-replica summation order differs, which
perturbs the statistics at the level of float rounding.

Streams are keyed by (seed, stream id, block index) and work is cut into
fixed 4096-replica blocks, so replica i depends only on the seed, never
on how many workers process the blocks.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK_REPLICAS = 4096
# fallback chunking: about 16 MiB of doubles at a time
_CHUNK_DOUBLES = 1 << 21

_ENV_VAR = "SHUFFLEDP_BACKEND"


def _pick_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice not in ("", "numba", "auto"):
        raise ValueError(
            f"{_ENV_VAR} must be 'numba' or 'numpy', got {choice!r}"
        )
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


_BACKEND = _pick_backend()


def active_backend() -> str:
    """Which kernel implementation this process is using."""
    return _BACKEND


def philox_stream(seed: int, stream_id: int, block_index: int) -> np.random.Generator:
    """Counter-based generator for one 4096-replica block of one stream."""
    if not (0 <= stream_id < 1 << 8) or not (0 <= block_index < 1 << 40):
        raise ValueError("stream_id must fit in 8 bits and block_index in 40 bits")
    key = np.array(
        [np.uint64(seed % (1 << 64)), np.uint64((stream_id << 40) | block_index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def _statistic_block_numpy(gen, replicas, m, inv_sigma, offset, first_shift):
    """Row means of exp(x * inv_sigma - offset), first coordinate scaled.

    Draws in chunks from ``gen`` in the same value order the jitted
    kernel consumes.
    """
    stats = np.empty(replicas)
    y_first = np.empty(replicas)
    rows = max(1, _CHUNK_DOUBLES // m)
    done = 0
    while done < replicas:
        r = min(rows, replicas - done)
        x = gen.standard_normal((r, m))
        y = np.exp(x * inv_sigma - offset, out=x)
        y[:, 0] *= first_shift
        stats[done:done + r] = y.mean(axis=1)
        y_first[done:done + r] = y[:, 0]
        done += r
    return stats, y_first


if _BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _statistic_block_numba(gen, replicas, m, inv_sigma, offset, first_shift):
        stats = np.empty(replicas)
        y_first = np.empty(replicas)
        inv_m = 1.0 / m
        for i in range(replicas):
            first = np.exp(gen.standard_normal() * inv_sigma - offset) * first_shift
            acc = first
            for _ in range(m - 1):
                acc += np.exp(gen.standard_normal() * inv_sigma - offset)
            stats[i] = acc * inv_m
            y_first[i] = first
        return stats, y_first

    statistic_block = _statistic_block_numba
else:
    statistic_block = _statistic_block_numpy
