"""Deterministic random-stream management.

All randomness in the package flows from a single 64-bit seed. Independent
stages (clients, server stages, partitioner draws) obtain their own
generator through :func:`fork`, keyed by small integer stream ids, so the
result of a run does not depend on execution order or thread count.
"""
from __future__ import annotations

import numpy as np

# Stable stream-id namespaces. New consumers append; never renumber.
STREAM_PARTITION = 1
STREAM_CLIENT = 2
STREAM_SERVER = 3
STREAM_REMC = 4
STREAM_KMEANS = 5
STREAM_BENCH = 6
STREAM_SYNTH = 7


def fork(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for stream ``key`` derived from ``seed``.

    Two calls with the same (seed, key) always produce identical streams;
    distinct keys give statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
