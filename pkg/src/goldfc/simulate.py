"""Heterogeneous federation simulation.

A labeled dataset is fragmented across clients in five steps, each drawn
independently per client: pick how many ground-truth clusters the client
sees, pick which ones, split every picked cluster into subclusters with
k-means, keep a random subset of those subclusters, then sample a random
fraction of the pooled points. The result deliberately produces clients
whose view of a cluster is incomplete, differently grained, and possibly
made of non-adjacent fragments.

The plain k-means here is also the substitute component used by the
ablation baselines.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import PartitionSpec
from .data import AffiliationMatrix, Dataset
from .errors import ConfigError, ValidationError
from .seeding import STREAM_KMEANS, STREAM_PARTITION, fork


def kmeans(data, k: int, seed: int = 0, max_iters: int = 100,
           rng: np.random.Generator | None = None):
    """Lloyd's algorithm from k distinct sampled rows.

    An emptied cluster is re-seeded at the point farthest from its current
    centroid. Returns (centroids, AffiliationMatrix).
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must be in [1, n={n}], got {k}")
    if rng is None:
        rng = fork(seed, STREAM_KMEANS)
    centroids = X[rng.choice(n, size=k, replace=False)].copy()
    assign = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iters):
        d2 = ((X**2).sum(axis=1)[:, None]
              - 2.0 * X @ centroids.T
              + (centroids**2).sum(axis=1)[None, :])
        new_assign = np.argmin(d2, axis=1)
        dist_to_own = d2[np.arange(n), new_assign]
        for j in range(k):
            members = new_assign == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
            else:
                farthest = int(np.argmax(dist_to_own))
                centroids[j] = X[farthest]
                new_assign[farthest] = j
                dist_to_own[farthest] = 0.0
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centroids, AffiliationMatrix(assign, k=k)


@dataclass
class ClientProvenance:
    """Where each of one client's rows came from in the source dataset."""

    global_indices: np.ndarray   # row index into the source dataset
    clusters: np.ndarray         # ground-truth cluster of each row
    subclusters: np.ndarray      # subcluster id within that cluster
    selected: dict[int, list[int]]  # cluster -> subcluster ids kept


@dataclass
class FederationSplit:
    clients: list[Dataset]
    provenance: list[ClientProvenance]
    spec: PartitionSpec
    source: Dataset | None = None

    @property
    def L(self) -> int:
        return len(self.clients)

    def manifest(self) -> dict:
        """JSON-ready description of the split (without feature payloads)."""
        return {
            "spec": self.spec.to_dict(),
            "clients": [
                {
                    "n": int(c.n),
                    "global_indices": p.global_indices.tolist(),
                    "clusters": p.clusters.tolist(),
                    "subclusters": p.subclusters.tolist(),
                    "selected_subclusters": {
                        str(c_id): list(subs) for c_id, subs in sorted(p.selected.items())
                    },
                }
                for c, p in zip(self.clients, self.provenance)
            ],
        }


def fork_child(rng: np.random.Generator) -> np.random.Generator:
    """Derive a child generator from a parent stream."""
    return np.random.default_rng(rng.integers(0, 2**63 - 1))


def _draw_client(data: Dataset, spec: PartitionSpec, rng: np.random.Generator,
                 kmeans_rng: np.random.Generator):
    """One independent client draw; returns (Dataset, ClientProvenance)."""
    labels = data.labels
    cluster_ids = np.unique(labels)
    k = cluster_ids.size

    lo, hi = spec.k_l_range if spec.k_l_range else (1, k)
    lo = max(1, min(lo, k))
    hi = max(lo, min(hi, k))
    n_clusters = int(rng.integers(lo, hi + 1))
    picked = rng.choice(cluster_ids, size=n_clusters, replace=False)

    pool_idx = []
    pool_cluster = []
    pool_sub = []
    selected: dict[int, list[int]] = {}
    for c_id in sorted(int(c) for c in picked):
        members = np.flatnonzero(labels == c_id)
        size = members.size
        sub_lo, sub_hi = spec.k_sub_range
        cap = max(1, size // 2)
        sub_lo = min(sub_lo, cap)
        sub_hi = min(sub_hi, cap)
        k_sub = int(rng.integers(sub_lo, sub_hi + 1))
        _, sub_assign = kmeans(data.values[members], k_sub,
                               rng=fork_child(kmeans_rng))
        if spec.n_select_range:
            s_lo, s_hi = spec.n_select_range
            s_lo = max(1, min(s_lo, k_sub))
            s_hi = max(s_lo, min(s_hi, k_sub))
        else:
            s_lo, s_hi = 1, k_sub
        n_select = int(rng.integers(s_lo, s_hi + 1))
        subs = rng.choice(k_sub, size=n_select, replace=False)
        selected[c_id] = sorted(int(s) for s in subs)
        keep = np.isin(sub_assign.assignments, subs)
        pool_idx.append(members[keep])
        pool_cluster.append(np.full(int(keep.sum()), c_id, dtype=np.int64))
        pool_sub.append(sub_assign.assignments[keep])

    pool_idx = np.concatenate(pool_idx)
    if pool_idx.size == 0:
        return None
    pool_cluster = np.concatenate(pool_cluster)
    pool_sub = np.concatenate(pool_sub)

    pool_n = pool_idx.size
    f_lo, f_hi = spec.sample_fraction_range
    n_lo = max(1, int(np.ceil(f_lo * pool_n)))
    n_hi = max(n_lo, int(np.floor(f_hi * pool_n)))
    n_take = int(rng.integers(n_lo, n_hi + 1))
    take = rng.choice(pool_n, size=n_take, replace=False)
    take.sort()

    client = Dataset(values=data.values[pool_idx[take]],
                     labels=labels[pool_idx[take]])
    prov = ClientProvenance(
        global_indices=pool_idx[take],
        clusters=pool_cluster[take],
        subclusters=pool_sub[take],
        selected=selected,
    )
    return client, prov


def even_split(data: Dataset, L: int, seed: int = 0) -> FederationSplit:
    """Shuffle and deal the data into L near-equal clients (an IID split;
    used where timing or bracketing needs homogeneous shares)."""
    if L < 1 or L > data.n:
        raise ConfigError(f"need 1 <= L <= n={data.n}, got L={L}")
    rng = fork(seed, STREAM_PARTITION, 0, 0, 2)
    order = rng.permutation(data.n)
    chunks = np.array_split(order, L)
    clients = []
    provenance = []
    for idx in chunks:
        idx = np.sort(idx)
        labels = data.labels[idx] if data.labels is not None else None
        clients.append(Dataset(values=data.values[idx], labels=labels))
        provenance.append(ClientProvenance(
            global_indices=idx,
            clusters=(data.labels[idx] if data.labels is not None
                      else np.zeros(idx.size, dtype=np.int64)),
            subclusters=np.zeros(idx.size, dtype=np.int64),
            selected={},
        ))
    spec = PartitionSpec(L=L, seed=seed)
    return FederationSplit(clients=clients, provenance=provenance, spec=spec,
                           source=data)


def simulate_non_icd(data: Dataset, spec: PartitionSpec) -> FederationSplit:
    """Fragment a labeled dataset into a heterogeneous federation."""
    if data.labels is None:
        raise ValidationError("partitioning requires ground-truth labels")
    counts = np.bincount(data.labels)
    small = np.flatnonzero((counts > 0) & (counts < 2))
    if small.size:
        raise ValidationError(
            f"every labeled cluster needs >= 2 objects; clusters {small.tolist()} are too small")

    clients = []
    provenance = []
    for l in range(spec.L):
        drawn = None
        for attempt in range(spec.max_retries):
            rng = fork(spec.seed, STREAM_PARTITION, l, attempt)
            kmeans_rng = fork(spec.seed, STREAM_PARTITION, l, attempt, 1)
            drawn = _draw_client(data, spec, rng, kmeans_rng)
            if drawn is not None:
                break
        if drawn is None:
            raise ValidationError(f"client {l}: empty pool after retries")
        clients.append(drawn[0])
        provenance.append(drawn[1])
    return FederationSplit(clients=clients, provenance=provenance, spec=spec,
                           source=data)
