"""Re-encoding of the granularity stack and weighted categorical clustering.

Every granularity level becomes one categorical feature: an object's value
in column ``t`` is its 1-based cluster index at level ``t``. The final
partition is found by alternating sweeps over this matrix, scoring rows
against per-cluster representative rows (modes) with per-level weights
learned from how well each level separates and how consistently it labels
a cluster.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .data import AffiliationMatrix
from .errors import ConfigError, ValidationError
from .seeding import STREAM_REMC, fork
from .server import GranularityStack


@dataclass
class EncodedMatrix:
    """n x delta matrix of 1-based cluster indices, one column per level."""

    values: np.ndarray
    level_arities: list[int]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 2:
            raise ValidationError("encoded matrix must be 2-d")
        for t, arity in enumerate(self.level_arities):
            col = self.values[:, t]
            if col.min() < 1 or col.max() > arity:
                raise ValidationError(
                    f"encoded column {t} outside [1, {arity}]")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def delta(self) -> int:
        return self.values.shape[1]


@dataclass
class FeatureClusterWeights:
    """Per-cluster weights over granularity levels; rows sum to 1."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)


@dataclass
class GlobalResult:
    """Final server partition over the stacked centroids."""

    assignments: AffiliationMatrix
    modes: np.ndarray
    weights: FeatureClusterWeights
    iterations: int
    empty_clusters: list[int] = field(default_factory=list)
    duplicate_modes: bool = False

    def to_document(self) -> dict:
        return {
            "assignments": self.assignments.assignments.tolist(),
            "k": int(self.assignments.k),
            "modes": self.modes.tolist(),
            "level_weights": self.weights.weights.tolist(),
            "iterations": int(self.iterations),
            "empty_clusters": list(self.empty_clusters),
        }


def encode(stack: GranularityStack) -> EncodedMatrix:
    """Turn each level's partition into a 1-based categorical column."""
    cols = [q.assignments + 1 for q in stack.affiliations]
    return EncodedMatrix(values=np.stack(cols, axis=1),
                         level_arities=list(stack.cluster_counts))


def match_similarity(x_row, mode_row, u_row) -> float:
    """L2 norm of the weight entries at positions where the rows agree."""
    x_row = np.asarray(x_row)
    mode_row = np.asarray(mode_row)
    u_row = np.asarray(u_row, dtype=np.float64)
    agree = x_row == mode_row
    return float(np.sqrt(np.sum(u_row[agree] ** 2)))


def _match_matrix(values, modes, weights):
    """(n, k*) matrix of match similarities, one column per cluster."""
    n, _ = values.shape
    k = modes.shape[0]
    out = np.empty((n, k))
    for j in range(k):
        agree = values == modes[j]
        out[:, j] = np.sqrt((agree * weights[j] ** 2).sum(axis=1))
    return out


def update_weights_U(encoded: EncodedMatrix, assignments) -> FeatureClusterWeights:
    """Recompute the per-level weights for every cluster.

    A level's weight multiplies the gap between its category-frequency
    profile inside the cluster and outside it (a scaled Hellinger-style
    L2 gap) by the cluster's average self-matching rate at that level,
    normalized across levels. Clusters whose products vanish everywhere
    fall back to a uniform row; with a single cluster there is nothing to
    discriminate and the separation term is defined as zero.
    """
    assign = np.asarray(
        getattr(assignments, "assignments", assignments), dtype=np.int64)
    k = int(getattr(assignments, "k", assign.max() + 1))
    X = encoded.values
    n, delta = X.shape
    U = np.empty((k, delta))
    for j in range(k):
        inside = assign == j
        n_in = int(inside.sum())
        n_out = n - n_in
        if n_in == 0:
            U[j] = 1.0 / delta
            continue
        for t in range(delta):
            arity = encoded.level_arities[t]
            col = X[:, t]
            counts_in = np.bincount(col[inside], minlength=arity + 1)[1:]
            if n_out == 0:
                alpha = 0.0
            else:
                counts_out = np.bincount(col[~inside], minlength=arity + 1)[1:]
                gap = counts_in / n_in - counts_out / n_out
                alpha = np.sqrt((gap**2).sum()) / np.sqrt(2.0)
            # average, over members, of the share of the cluster agreeing
            # with them at this level
            beta = float((counts_in**2).sum()) / (n_in * n_in)
            U[j, t] = alpha * beta
        total = U[j].sum()
        if total > 0 and np.isfinite(total):
            U[j] /= total
        else:
            U[j] = 1.0 / delta
    return FeatureClusterWeights(weights=U)


def _sample_distinct_modes(values, k_star, rng):
    """Draw rows until k* distinct row patterns are collected; reuse rows
    (with a flag) when the data holds fewer distinct patterns."""
    unique_rows = np.unique(values, axis=0)
    if unique_rows.shape[0] >= k_star:
        order = rng.permutation(values.shape[0])
        chosen = []
        seen = set()
        for i in order:
            key = tuple(values[i])
            if key not in seen:
                seen.add(key)
                chosen.append(values[i])
                if len(chosen) == k_star:
                    break
        return np.asarray(chosen), False
    # not enough distinct patterns: cycle through what exists
    reps = [unique_rows[i % unique_rows.shape[0]] for i in range(k_star)]
    return np.asarray(reps), True


def remc_cluster(encoded: EncodedMatrix, k_star: int, config: RunConfig,
                 rng: np.random.Generator | None = None) -> GlobalResult:
    """Alternating optimization of assignments, level weights, and modes.

    Sweeps run until the assignment vector repeats its previous value, a
    previously visited state recurs (a cycle; the best-scoring visited
    state wins), or ``config.max_epochs`` is hit. Ties in assignment go to
    the lowest cluster index; mode ties to the smallest category.
    """
    X = encoded.values
    n, delta = X.shape
    if not 1 <= k_star <= n:
        raise ConfigError(f"k_star must be in [1, n={n}], got {k_star}")
    if rng is None:
        rng = fork(config.seed, STREAM_REMC)
    modes, duplicate_modes = _sample_distinct_modes(X, k_star, rng)
    U = np.full((k_star, delta), 1.0 / delta)

    prev = None
    seen: dict[bytes, float] = {}
    best = None  # (objective, assign, U, modes)
    iterations = 0
    for _ in range(config.max_epochs):
        iterations += 1
        sims = _match_matrix(X, modes, U)
        assign = np.argmax(sims, axis=1)
        objective = float(sims[np.arange(n), assign].sum())
        if best is None or objective > best[0]:
            best = (objective, assign.copy(), U.copy(), modes.copy())
        if prev is not None and np.array_equal(assign, prev):
            break
        key = assign.tobytes()
        if key in seen:
            # revisited state: a cycle; keep the best sweep seen so far
            _, assign, U, modes = best
            break
        seen[key] = objective
        prev = assign.copy()
        U = update_weights_U(
            encoded, AffiliationMatrix(assign, k=k_star)).weights
        for j in range(k_star):
            members = X[assign == j]
            if members.shape[0] == 0:
                continue
            for t in range(delta):
                counts = np.bincount(members[:, t],
                                     minlength=encoded.level_arities[t] + 1)[1:]
                modes[j, t] = int(np.argmax(counts)) + 1

    empty = [j for j in range(k_star) if not np.any(assign == j)]
    return GlobalResult(
        assignments=AffiliationMatrix(assign, k=k_star),
        modes=modes,
        weights=FeatureClusterWeights(weights=U),
        iterations=iterations,
        empty_clusters=empty,
        duplicate_modes=duplicate_modes,
    )
