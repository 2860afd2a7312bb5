"""Competitive penalized learning engine.

One engine drives both the client-side micro-cluster discovery and the
server-side multi-granularity stages. Clusters compete online for each
presented object: the best-scoring cluster (the winner) is rewarded, the
runner-up (its nearest rival) is penalized in proportion to how closely it
contested the object, and clusters whose weight collapses are eliminated,
their objects reassigned to the surviving cluster they resemble most.

Scoring combines three factors:

* a relative winning probability ``gamma_j = 1 - g_j / sum(g)`` that damps
  frequent winners so untouched clusters are not starved into dead units,
* a cluster weight ``w_j = sigmoid(10 * (W_j + 5))`` driven by the
  reward/penalty ledger ``W``,
* an object-cluster similarity ``exp(-0.5 * ||h_j * (x - c_j)||_2)`` where
  ``h_j`` is a per-cluster feature importance row learned from a Hellinger
  separation term and an intra-cluster compactness term.

Two similarity modes exist: ``raw`` uses the exponential kernel directly;
``row_normalized`` divides it by the summed kernel against every live
centroid (still under cluster j's importance row), which keeps similarity
magnitudes comparable across granularities on the server.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .config import RunConfig
from .data import AffiliationMatrix, Dataset
from .errors import CompetitionExhausted, ConfigError
from .seeding import fork

VARIANCE_FLOOR = 1e-8

RAW = "raw"
ROW_NORMALIZED = "row_normalized"


@dataclass
class CplState:
    """Live state of one competitive run. Slots keep their index for life;
    eliminated clusters stay in place with ``alive[j] = False``."""

    centroids: np.ndarray            # (k0, d)
    intermediate_weights: np.ndarray  # (k0,) reward/penalty ledger W
    cluster_weights: np.ndarray      # (k0,) sigmoid(W), always in (0, 1)
    win_counts: np.ndarray           # (k0,) int64
    importance: np.ndarray           # (k0, d), rows of live clusters sum to 1
    assignments: np.ndarray          # (n,) int64, -1 before the first epoch
    alive: np.ndarray                # (k0,) bool
    mode: str = RAW
    # the data matrix, kept reachable for orphan reassignment
    _data: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def k0(self) -> int:
        return self.centroids.shape[0]

    @property
    def k_alive(self) -> int:
        return int(self.alive.sum())

    def alive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)


@dataclass
class CplResult:
    """Converged output with eliminated slots compacted away."""

    centroids: np.ndarray
    assignments: AffiliationMatrix
    k_final: int
    objective: float
    epochs_run: int
    k_history: list[int] = field(default_factory=list)


def initial_ledger_value(k0: int) -> float:
    """Starting reward/penalty ledger value: the sigmoid midpoint (w = 0.5).

    The midpoint is the one starting point where competition both
    consolidates and stays local. Clusters hold equal weights with at most
    a factor-2 ceiling above them, so an early winner cannot out-bid other
    regions' representatives, while a losing streak drops the weight fast
    enough that redundant clusters inside one dense region spiral out
    within a few epochs (the floor sits about 0.7 ledger units below, a
    budget of ~14 net penalties at the default learning rate, independent
    of k0). Starting at the sigmoid preimage of 1/k0 instead gives weight
    ratios of order k0 that let one early winner swallow every region (and
    for k0 above the floor's reciprocal, clusters are born already below
    the elimination floor); starting saturated near 1 freezes the initial
    tessellation because no realistic penalty stream can traverse the
    ~5-unit plateau.
    """
    return -5.0


def _sigmoid_weight(w_ledger):
    return expit(10.0 * (np.asarray(w_ledger, dtype=np.float64) + 5.0))


def _weighted_dists(x, centroids, importance):
    """||h_j * (x - c_j)||_2 for each row j of the given centroid block."""
    scaled = importance * (centroids - x)
    return np.sqrt(np.einsum("kd,kd->k", scaled, scaled))


def _cross_dists(x, centroids, importance_sq):
    """D[j, t] = ||h_j * (x - c_t)||_2 over all live pairs (row-normalized
    similarity pairs cluster j's importance row with every centroid)."""
    diff_sq = (centroids - x) ** 2
    d2 = importance_sq @ diff_sq.T
    return np.sqrt(np.maximum(d2, 0.0))


def _similarity_vector(x, centroids, importance, mode, importance_sq=None):
    """Similarity of ``x`` to every cluster in the block, under ``mode``."""
    if mode == RAW:
        return np.exp(-0.5 * _weighted_dists(x, centroids, importance))
    if importance_sq is None:
        importance_sq = importance**2
    kernel = np.exp(-0.5 * _cross_dists(x, centroids, importance_sq))
    return np.diagonal(kernel) / kernel.sum(axis=1)


def similarity(x, state: CplState, j: int) -> float:
    """exp(-0.5 * ||h_j * (x - c_j)||_2); 1 iff x equals the centroid."""
    x = np.asarray(x, dtype=np.float64)
    scaled = state.importance[j] * (x - state.centroids[j])
    return float(np.exp(-0.5 * np.linalg.norm(scaled)))


def raw_distance(x, state: CplState, j: int) -> float:
    """The underlying importance-weighted distance, for diagnostics."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.linalg.norm(state.importance[j] * (x - state.centroids[j])))


def gamma(state: CplState) -> np.ndarray:
    """Relative winning probability over live clusters (dead slots get 0).

    With no recorded wins among live clusters every gamma is 1, so the
    first presentations are decided by weight and similarity alone.
    """
    out = np.zeros(state.k0, dtype=np.float64)
    idx = state.alive_indices()
    wins = state.win_counts[idx]
    total = wins.sum()
    out[idx] = 1.0 if total == 0 else 1.0 - wins / total
    return out


def select_winner_rival(x, state: CplState) -> tuple[int, int]:
    """Pick the winner and its nearest rival for one presented object.

    The winner maximizes ``gamma * weight * similarity`` over live
    clusters. The rival is the winner's nearest live competitor for this
    object, i.e. the most similar other cluster; choosing it by the full
    winner score instead lets penalties leak onto distant clusters whose
    only offense was a fresh win-count, which starves whole regions (see
    the engine notes above). Ties break toward the lowest index. The
    winner's win count is incremented as a side effect.

    Raises:
        CompetitionExhausted: fewer than two live clusters remain.
    """
    idx = state.alive_indices()
    if idx.size < 2:
        raise CompetitionExhausted(f"need >= 2 live clusters, have {idx.size}")
    x = np.asarray(x, dtype=np.float64)
    sims = _similarity_vector(x, state.centroids[idx], state.importance[idx], state.mode)
    wins = state.win_counts[idx]
    total = wins.sum()
    gam = np.ones(idx.size) if total == 0 else 1.0 - wins / total
    scores = gam * state.cluster_weights[idx] * sims
    v_local = int(np.argmax(scores))
    sims_r = sims.copy()
    sims_r[v_local] = -np.inf
    r_local = int(np.argmax(sims_r))
    v = int(idx[v_local])
    state.win_counts[v] += 1
    return v, int(idx[r_local])


def update_weights(state: CplState, v: int, r: int, x, eta: float) -> CplState:
    """Reward the winner, penalize the rival by the similarity ratio, and
    refresh both sigmoid weights."""
    if v == r:
        raise ConfigError("winner and rival must differ")
    x = np.asarray(x, dtype=np.float64)
    if state.mode == RAW:
        # sim_r / sim_v written as exp of the distance gap; immune to underflow
        dv = raw_distance(x, state, v)
        dr = raw_distance(x, state, r)
        ratio = float(np.exp(0.5 * (dv - dr)))
    else:
        idx = state.alive_indices()
        sims = _similarity_vector(
            x, state.centroids[idx], state.importance[idx], state.mode)
        pos = {int(j): p for p, j in enumerate(idx)}
        ratio = float(sims[pos[r]] / sims[pos[v]])
    state.intermediate_weights[v] += eta
    state.intermediate_weights[r] -= eta * ratio
    state.cluster_weights[v] = _sigmoid_weight(state.intermediate_weights[v])
    state.cluster_weights[r] = _sigmoid_weight(state.intermediate_weights[r])
    return state


def _hellinger_alpha(mu, mu_bar, var, var_bar):
    """Hellinger distance between N(mu, var) and N(mu_bar, var_bar),
    elementwise over feature vectors."""
    var = np.maximum(var, VARIANCE_FLOOR)
    var_bar = np.maximum(var_bar, VARIANCE_FLOOR)
    sigma = np.sqrt(var)
    sigma_bar = np.sqrt(var_bar)
    bc = np.sqrt(2.0 * sigma * sigma_bar / (var + var_bar)) * np.exp(
        -((mu - mu_bar) ** 2) / (4.0 * (var + var_bar)))
    return np.sqrt(np.maximum(1.0 - bc, 0.0))


def update_importance(state: CplState, data) -> np.ndarray:
    """Refresh the feature-cluster importance rows of live clusters.

    Each entry multiplies a between/within Hellinger separation term by an
    intra-cluster compactness term, then normalizes per row. Degenerate rows
    (no separation anywhere, or a non-finite total) fall back to uniform.
    Variances are floored so singleton clusters and singleton complements
    never divide by zero.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n, d = X.shape
    k0 = state.k0
    assign = state.assignments
    counts = np.bincount(assign[assign >= 0], minlength=k0)
    sums = np.zeros((k0, d))
    sumsq = np.zeros((k0, d))
    np.add.at(sums, assign[assign >= 0], X[assign >= 0])
    np.add.at(sumsq, assign[assign >= 0], X[assign >= 0] ** 2)
    total_sum = X.sum(axis=0)
    total_sumsq = (X**2).sum(axis=0)

    for j in state.alive_indices():
        nj = int(counts[j])
        if nj == 0:
            continue
        mu = sums[j] / nj
        var = (np.maximum(sumsq[j] - nj * mu**2, 0.0) / (nj - 1)
               if nj >= 2 else np.full(d, VARIANCE_FLOOR))
        n_out = n - nj
        if n_out == 0:
            alpha = np.zeros(d)
        else:
            mu_bar = (total_sum - sums[j]) / n_out
            var_bar = (np.maximum(total_sumsq - sumsq[j] - n_out * mu_bar**2, 0.0)
                       / (n_out - 1) if n_out >= 2 else np.full(d, VARIANCE_FLOOR))
            alpha = _hellinger_alpha(mu, mu_bar, var, var_bar)
        members = X[assign == j]
        beta = np.sqrt(np.exp(-0.5 * (members - state.centroids[j]) ** 2).sum(axis=0)) / nj
        raw = alpha * beta
        total = raw.sum()
        if total > 0 and np.isfinite(total):
            state.importance[j] = raw / total
        else:
            state.importance[j] = 1.0 / d
    return state.importance


def _mode_similarity_block(X_block, centroids, importance, mode):
    """Similarity of each row of ``X_block`` to every cluster in the block.

    Returns an (n_block, k) matrix under the state's similarity mode.
    """
    imp_sq = importance**2
    # d2[i, j] = sum_m h_jm^2 (x_im - c_jm)^2, expanded to avoid an n*k*d tensor
    d2 = ((X_block**2) @ imp_sq.T
          - 2.0 * X_block @ (imp_sq * centroids).T
          + np.sum(imp_sq * centroids**2, axis=1))
    dist = np.sqrt(np.maximum(d2, 0.0))
    if mode == RAW:
        return np.exp(-0.5 * dist)
    sims = np.empty_like(dist)
    for p in range(centroids.shape[0]):
        # cluster p's importance row against every centroid
        scaled = importance[p] * (X_block[:, None, :] - centroids[None, :, :])
        cross = np.sqrt(np.maximum((scaled**2).sum(axis=2), 0.0))
        kernel = np.exp(-0.5 * cross)
        sims[:, p] = kernel[:, p] / kernel.sum(axis=1)
    return sims


def eliminate(state: CplState, weight_floor: float) -> CplState:
    """Remove live clusters whose weight fell below the floor.

    Orphaned objects (whether their cluster died here or earlier in the
    epoch) move to the live cluster of highest similarity. The
    best-weighted cluster is always spared so one survivor remains; win
    counts of the dead are frozen as-is.
    """
    idx = state.alive_indices()
    doomed_local = state.cluster_weights[idx] < weight_floor
    if doomed_local.all():
        doomed_local[int(np.argmax(state.cluster_weights[idx]))] = False
    state.alive[idx[doomed_local]] = False
    _reassign_orphans(state)
    return state


def _reassign_orphans(state: CplState) -> None:
    """Move every object assigned to a dead cluster to its most similar
    live cluster."""
    assigned = state.assignments >= 0
    orphan_mask = assigned.copy()
    orphan_mask[assigned] = ~state.alive[state.assignments[assigned]]
    if not orphan_mask.any():
        return
    if state._data is None:
        raise ConfigError("cannot reassign orphans without the data matrix")
    survivors = state.alive_indices()
    sims = _mode_similarity_block(
        state._data[orphan_mask], state.centroids[survivors],
        state.importance[survivors], state.mode)
    state.assignments[orphan_mask] = survivors[np.argmax(sims, axis=1)]


def _drop_empty(state: CplState) -> None:
    """Eliminate live clusters that ended the epoch without members."""
    counts = np.bincount(state.assignments[state.assignments >= 0],
                         minlength=state.k0)
    empty = state.alive & (counts == 0)
    state.alive[empty] = False


def make_state(data, k0: int, rng: np.random.Generator, mode: str = RAW) -> CplState:
    """Initialize a run: k0 sampled objects as centroids, uniform importance,
    every weight at 1/k0 (stored through the inverted sigmoid so the
    weight/ledger invariant holds from the first step)."""
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n, d = X.shape
    if not 1 <= k0 <= n:
        raise ConfigError(f"k0 must be in [1, n={n}], got {k0}")
    if mode not in (RAW, ROW_NORMALIZED):
        raise ConfigError(f"unknown similarity mode {mode!r}")
    chosen = rng.choice(n, size=k0, replace=False)
    ledger = np.full(k0, initial_ledger_value(k0))
    state = CplState(
        centroids=X[chosen].copy(),
        intermediate_weights=ledger,
        cluster_weights=_sigmoid_weight(ledger),
        win_counts=np.zeros(k0, dtype=np.int64),
        importance=np.full((k0, d), 1.0 / d),
        assignments=np.full(n, -1, dtype=np.int64),
        alive=np.ones(k0, dtype=bool),
        mode=mode,
        _data=X,
    )
    return state


def _run_epoch(state: CplState, X: np.ndarray, order: np.ndarray, eta: float,
               weight_floor: float) -> None:
    """One pass of presentations over ``X`` in the given order.

    A rival whose weight crosses the floor is retired immediately (its
    objects are handed over at epoch end); deferring removal to the epoch
    boundary would cull every contested cluster of a region in one sweep,
    including the ones the region needs. Bookkeeping happens on compacted
    arrays and is scattered back at the end.
    """
    idx = state.alive_indices()
    ka = idx.size
    cents = state.centroids[idx]
    imp = state.importance[idx]
    imp_sq = imp**2
    ledger = state.intermediate_weights[idx]
    weights = state.cluster_weights[idx]
    wins = state.win_counts[idx].astype(np.float64)
    live = np.ones(ka, dtype=bool)
    total_wins = wins.sum()
    normalized = state.mode == ROW_NORMALIZED

    if ka == 1:
        state.assignments[order] = idx[0]
        return

    assign_local = np.empty(order.size, dtype=np.int64)
    n_live = ka
    for pos, i in enumerate(order):
        x = X[i]
        if normalized:
            kernel = np.exp(-0.5 * _cross_dists(x, cents, imp_sq))
            sims = np.diagonal(kernel) / kernel.sum(axis=1)
            dists = None
        else:
            dists = _weighted_dists(x, cents, imp)
            sims = np.exp(-0.5 * dists)
        if total_wins == 0:
            scores = weights * sims
        else:
            scores = (1.0 - wins / total_wins) * weights * sims
        scores[~live] = -np.inf
        v = int(np.argmax(scores))
        assign_local[pos] = v
        wins[v] += 1.0
        total_wins += 1.0
        if n_live < 2:
            continue
        sims_r = np.where(live, sims, -np.inf)
        sims_r[v] = -np.inf
        r = int(np.argmax(sims_r))
        if normalized:
            ratio = sims[r] / sims[v]
        else:
            ratio = np.exp(0.5 * (dists[v] - dists[r]))
        ledger[v] += eta
        ledger[r] -= eta * ratio
        weights[v] = _sigmoid_weight(ledger[v])
        weights[r] = _sigmoid_weight(ledger[r])
        if weights[r] < weight_floor and n_live > 1:
            live[r] = False
            total_wins -= wins[r]
            n_live -= 1

    state.assignments[order] = idx[assign_local]
    state.intermediate_weights[idx] = ledger
    state.cluster_weights[idx] = weights
    state.win_counts[idx] = wins.astype(np.int64)
    state.alive[idx] = live


def _objective(state: CplState, X: np.ndarray) -> float:
    """Total similarity of every object to its assigned cluster."""
    idx = state.alive_indices()
    pos = np.full(state.k0, -1, dtype=np.int64)
    pos[idx] = np.arange(idx.size)
    sims = _mode_similarity_block(X, state.centroids[idx], state.importance[idx],
                                  state.mode)
    return float(sims[np.arange(X.shape[0]), pos[state.assignments]].sum())


def run_cpl(data, k0: int, config: RunConfig, similarity_mode: str = RAW,
            rng: np.random.Generator | None = None) -> CplResult:
    """Run competitive penalized learning until the partition stabilizes.

    Each epoch presents all objects in a fresh shuffled order, then removes
    weight-collapsed and empty clusters, moves surviving centroids to their
    member means (unless ``config.fixed_prototypes``), and refreshes the
    importance rows. Stops when consecutive epochs produce identical
    assignments or after ``config.max_epochs``.

    Returns the surviving clusters compacted to indices [0, k_final) along
    with the final objective (summed similarity under the run's mode).
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if rng is None:
        rng = fork(config.seed)
    state = make_state(X, k0, rng, similarity_mode)
    k_history = [state.k_alive]

    prev = None
    epochs = 0
    for _ in range(config.max_epochs):
        epochs += 1
        order = rng.permutation(n)
        _run_epoch(state, X, order, config.eta, config.weight_floor)
        if prev is not None and np.array_equal(state.assignments, prev):
            break
        eliminate(state, config.weight_floor)
        _drop_empty(state)
        if not config.fixed_prototypes:
            _recompute_centroids(state, X)
        update_importance(state, X)
        k_history.append(state.k_alive)
        prev = state.assignments.copy()

    idx = state.alive_indices()
    remap = np.full(state.k0, -1, dtype=np.int64)
    remap[idx] = np.arange(idx.size)
    objective = _objective(state, X)
    return CplResult(
        centroids=state.centroids[idx].copy(),
        assignments=AffiliationMatrix(remap[state.assignments], k=idx.size),
        k_final=idx.size,
        objective=objective,
        epochs_run=epochs,
        k_history=k_history,
    )


def _recompute_centroids(state: CplState, X: np.ndarray) -> None:
    counts = np.bincount(state.assignments[state.assignments >= 0],
                         minlength=state.k0)
    sums = np.zeros_like(state.centroids)
    np.add.at(sums, state.assignments[state.assignments >= 0],
              X[state.assignments >= 0])
    movable = state.alive & (counts > 0)
    state.centroids[movable] = sums[movable] / counts[movable, None]
