"""Client-side fine-grained micro-cluster discovery.

A client over-provisions clusters (half its object count by default) and
lets the competitive engine prune them, deliberately keeping non-adjacent
subclusters separate rather than merging them. Only the surviving centroid
rows leave the client; unless a centroid coincides with a singleton
cluster, no raw data row appears in the upload (a documented property, not
a cryptographic guarantee). The object-to-cluster map stays client-side so
server-level labels can later be propagated back onto local objects.
"""
from __future__ import annotations

from dataclasses import dataclass

from .config import RunConfig
from .cpl import RAW, run_cpl
from .data import AffiliationMatrix, Dataset
from .errors import ValidationError
from .messages import CentroidUpload
from .seeding import STREAM_CLIENT, fork


@dataclass
class ClientResult:
    upload: CentroidUpload
    local_assignments: AffiliationMatrix
    k_local: int


def client_k0(n: int, k0_fraction: float) -> int:
    return max(1, round(k0_fraction * n))


def fcpl_fit(local: Dataset, config: RunConfig, client_id: int = 0) -> ClientResult:
    """Discover this client's micro-clusters and build its one-shot upload."""
    if local.n < 1:
        raise ValidationError("client dataset is empty")
    rng = fork(config.seed, STREAM_CLIENT, client_id)
    result = run_cpl(local, client_k0(local.n, config.k0_fraction), config,
                     similarity_mode=RAW, rng=rng)
    upload = CentroidUpload(client_id=client_id, k=result.k_final,
                            d=local.d, centroids=result.centroids)
    return ClientResult(upload=upload, local_assignments=result.assignments,
                        k_local=result.k_final)
