"""Counter-based deterministic random streams.

A stream is identified by a key ``(seed, stream, i, j, ...)``. The key is fed
to ``numpy.random.SeedSequence`` as entropy plus spawn key and drives a
Philox counter generator, so any two distinct keys give independent streams
and the same key always reproduces the same numbers. Normals come from
numpy's ziggurat sampler (``Generator.standard_normal``); uniforms come from
``Generator.random`` (53-bit doubles). Goldens that depend on exact bits are
tied to this choice.
"""

from __future__ import annotations

import numpy as np

# Stream tags keep draws made for different purposes disjoint.
STREAM_REWARD = 1
STREAM_MC = 2
STREAM_TRAIN = 3
STREAM_EVAL = 4
STREAM_SCENARIO = 5
STREAM_ENSEMBLE = 6
STREAM_COVERAGE = 7

MC_BLOCK = 4096


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for stream ``(seed, *key)``."""
    spawn = tuple(int(k) for k in key)
    if any(k < 0 for k in spawn):
        raise ValueError("stream key components must be nonnegative")
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))


def block_counts(trials: int, block: int = MC_BLOCK) -> list[tuple[int, int]]:
    """Split ``trials`` into (block_index, size) chunks of fixed size."""
    out = []
    start = 0
    idx = 0
    while start < trials:
        size = min(block, trials - start)
        out.append((idx, size))
        start += size
        idx += 1
    return out
