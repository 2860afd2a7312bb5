"""Server-side aggregation: centroid stacking and multi-granularity search.

The uploaded centroid sets are stacked into one matrix and explored by a
recursion of competitive runs. Each stage inherits only the converged
cluster COUNT of the previous stage; centroids, weights, win counts, and
importance rows are re-initialized from fresh samples so every granularity
level is discovered independently rather than inherited structurally. The
recursion stops once the count stops shrinking and the objective settles.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .cpl import ROW_NORMALIZED, CplState, _similarity_vector, run_cpl
from .data import AffiliationMatrix, Dataset
from .errors import ValidationError
from .messages import CentroidUpload
from .seeding import STREAM_SERVER, fork


@dataclass
class StackedCentroids:
    """All clients' centroids in client order, with row provenance."""

    data: Dataset
    # per stacked row: (client_id, local cluster index)
    provenance: list[tuple[int, int]]
    offsets: dict[int, int]  # client_id -> first row of its block


@dataclass
class GranularityStack:
    """Partitions of the stacked centroids from finest to coarsest."""

    affiliations: list[AffiliationMatrix]
    cluster_counts: list[int]
    objectives: list[float]

    @property
    def delta(self) -> int:
        return len(self.affiliations)

    def summary(self) -> dict:
        return {
            "delta": self.delta,
            "cluster_counts": list(self.cluster_counts),
            "objectives": [float(p) for p in self.objectives],
        }

    def to_document(self) -> dict:
        """Level-by-level dump (cluster count plus assignment vector)."""
        return {
            "delta": self.delta,
            "levels": [
                {"k": int(k), "assignments": q.assignments.tolist()}
                for k, q in zip(self.cluster_counts, self.affiliations)
            ],
        }


def stack_uploads(uploads: list[CentroidUpload]) -> StackedCentroids:
    """Concatenate uploads into the server's data matrix, in client order."""
    if not uploads:
        raise ValidationError("no uploads to stack")
    d = uploads[0].d
    for up in uploads:
        if up.d != d:
            raise ValidationError(
                f"client {up.client_id} uploaded d={up.d}, expected {d}")
    blocks = []
    provenance = []
    offsets = {}
    row = 0
    for up in uploads:
        offsets[up.client_id] = row
        blocks.append(up.centroids)
        provenance.extend((up.client_id, j) for j in range(up.k))
        row += up.k
    return StackedCentroids(
        data=Dataset(values=np.vstack(blocks), name="stacked-centroids"),
        provenance=provenance,
        offsets=offsets,
    )


def normalized_similarity(x, state: CplState, j: int) -> float:
    """Similarity of x to cluster j as a share of its summed kernel against
    every live centroid (cluster j's importance row throughout)."""
    idx = state.alive_indices()
    sims = _similarity_vector(np.asarray(x, dtype=np.float64),
                              state.centroids[idx], state.importance[idx],
                              ROW_NORMALIZED)
    pos = int(np.flatnonzero(idx == j)[0])
    return float(sims[pos])


def server_k0(n: int, k0_fraction: float) -> int:
    return max(2, round(k0_fraction * n))


def mcpl_explore(stacked: Dataset, config: RunConfig) -> GranularityStack:
    """Recursively re-cluster the stacked centroids at shrinking counts.

    Stage 1 over-provisions like a client; stage t+1 restarts from k_t
    freshly sampled centroids. A stage repeating the previous assignment
    exactly is dropped (a duplicate level adds no information), and the
    final converged stage is kept in the stack.
    """
    if stacked.n < 2:
        return GranularityStack(
            affiliations=[AffiliationMatrix(np.zeros(stacked.n, dtype=np.int64), k=1)],
            cluster_counts=[1],
            objectives=[1.0],
        )
    affiliations: list[AffiliationMatrix] = []
    counts: list[int] = []
    objectives: list[float] = []

    k = server_k0(stacked.n, config.k0_fraction)
    prev_k = None
    prev_p = None
    for stage in range(config.max_granularities):
        rng = fork(config.seed, STREAM_SERVER, stage)
        result = run_cpl(stacked, k, config, similarity_mode=ROW_NORMALIZED, rng=rng)
        duplicate = (
            affiliations
            and result.k_final == counts[-1]
            and np.array_equal(result.assignments.assignments,
                               affiliations[-1].assignments)
        )
        if not duplicate:
            affiliations.append(result.assignments)
            counts.append(result.k_final)
            objectives.append(result.objective)
        converged = (
            prev_k is not None
            and result.k_final == prev_k
            and abs(result.objective - prev_p) <= config.objective_eps * abs(prev_p)
        )
        if converged:
            break
        prev_k = result.k_final
        prev_p = result.objective
        k = result.k_final
    return GranularityStack(affiliations=affiliations, cluster_counts=counts,
                            objectives=objectives)
