"""Synthetic dataset constructions for benchmarks and demos."""
from __future__ import annotations

import numpy as np

from .data import Dataset
from .seeding import STREAM_SYNTH, fork


def gaussian_blobs(centers, spread, points_per_blob, seed: int = 0,
                   labels=None, name: str = "blobs") -> Dataset:
    """Isotropic Gaussian blobs at the given centers.

    ``labels`` maps each blob to a ground-truth cluster id (defaults to the
    blob index), which is how hierarchies are expressed: give sibling blobs
    the same label.
    """
    centers = np.asarray(centers, dtype=np.float64)
    rng = fork(seed, STREAM_SYNTH)
    if np.isscalar(points_per_blob):
        points_per_blob = [int(points_per_blob)] * centers.shape[0]
    if labels is None:
        labels = list(range(centers.shape[0]))
    rows = []
    labs = []
    for center, count, lab in zip(centers, points_per_blob, labels):
        rows.append(center + spread * rng.standard_normal((count, centers.shape[1])))
        labs.extend([lab] * count)
    return Dataset(values=np.vstack(rows), labels=np.asarray(labs), name=name)


def isotropic_mixture(n: int, d: int, k: int = 5, spread: float = 0.03,
                      seed: int = 0) -> Dataset:
    """Equal-share isotropic Gaussian mixture with k components in [0,1]^d."""
    rng = fork(seed, STREAM_SYNTH, 1)
    centers = rng.uniform(0.15, 0.85, size=(k, d))
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    return gaussian_blobs(centers, spread, counts, seed=seed, name="mixture")


PAIRED_CENTERS = [
    [0.1, 0.275], [0.1, 0.725],   # pair one, vertically adjacent (gap 0.45)
    [0.9, 0.275], [0.9, 0.725],   # pair two, 0.8 away horizontally
]


def paired_hierarchy(points_per_blob: int = 25, spread: float = 0.01,
                     seed: int = 0) -> Dataset:
    """Four tight blobs arranged as two well-separated close pairs.

    Labels mark the two pairs, so the dataset reads as 2 coarse clusters
    made of 4 fine subclusters; the within-pair gap is roughly half the
    cross-pair distance.
    """
    return gaussian_blobs(PAIRED_CENTERS, spread, points_per_blob, seed=seed,
                          labels=[0, 0, 1, 1], name="paired-hierarchy")


def chain_hierarchy(points_per_blob: int = 60, spread: float = 0.02,
                    seed: int = 0) -> Dataset:
    """A three-blob chain plus one remote blob, labeled as two clusters.

    The chain's extent exceeds its gap to the remote blob's nearest end,
    so a two-way variance-minimizing cut tends to split the chain instead
    of separating the two true groups; proximity-driven merging keeps the
    chain together.
    """
    centers = [
        [0.08, 0.5], [0.28, 0.5], [0.48, 0.5],  # the chain
        [0.92, 0.5],                            # the remote blob
    ]
    return gaussian_blobs(centers, spread, points_per_blob, seed=seed,
                          labels=[0, 0, 0, 1], name="chain-hierarchy")
