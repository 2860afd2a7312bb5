"""Cross-client heterogeneity: KDE densities compared by JS distance.

Each client's data is smoothed with a product Gaussian kernel (one shared
bandwidth over all features, chosen by leave-one-out likelihood) and
evaluated on one support common to all clients, so the pairwise mixtures
the JS distance needs are well defined. The resulting degree lies in
[0, 1]: 0 when every client sees the same density everywhere, approaching
1 when clients' data are mutually disjoint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .errors import ValidationError

DEFAULT_BANDWIDTH_GRID = np.logspace(np.log10(0.01), np.log10(1.0), 10)
FALLBACK_BANDWIDTH = 0.1
MAX_SUPPORT_POINTS = 2000


@dataclass
class DensityProfile:
    """A client's density evaluated on the shared support, normalized to a
    probability vector."""

    eval_points: np.ndarray
    probs: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValidationError("bandwidth must be positive")


def _log_kernel_matrix(points, data, h):
    """log of the product-Gaussian kernel between each point and each datum."""
    points = np.atleast_2d(points)
    data = np.atleast_2d(data)
    d = data.shape[1]
    # squared distances in expanded form; avoids an n_points x n_data x d tensor
    sq = ((points**2).sum(axis=1)[:, None]
          - 2.0 * points @ data.T
          + (data**2).sum(axis=1)[None, :])
    sq = np.maximum(sq, 0.0)
    return -sq / (2.0 * h * h) - d * np.log(np.sqrt(2.0 * np.pi) * h)


def loo_log_likelihood(values: np.ndarray, h: float) -> float:
    """Summed log density of each point under the kernel fit to the others."""
    n = values.shape[0]
    logk = _log_kernel_matrix(values, values, h)
    np.fill_diagonal(logk, -np.inf)
    return float((logsumexp(logk, axis=1) - np.log(n - 1)).sum())


def select_bandwidth(data: Dataset, candidates=None) -> float:
    """Pick the candidate bandwidth with the best leave-one-out likelihood.

    Falls back to a fixed width when there are not enough points to hold
    one out. Ties go to the first (smallest) candidate.
    """
    values = data.values if isinstance(data, Dataset) else np.asarray(data)
    if candidates is None:
        candidates = DEFAULT_BANDWIDTH_GRID
    candidates = [float(c) for c in candidates]
    if not candidates:
        raise ValidationError("need at least one bandwidth candidate")
    if any(c <= 0 for c in candidates):
        raise ValidationError("bandwidth candidates must be positive")
    if values.shape[0] < 2:
        return FALLBACK_BANDWIDTH
    scores = [loo_log_likelihood(values, h) for h in candidates]
    return candidates[int(np.argmax(scores))]


def density_profile(data: Dataset, eval_points: np.ndarray, h: float) -> DensityProfile:
    """KDE of ``data`` at the shared support, normalized to sum to one."""
    values = data.values if isinstance(data, Dataset) else np.asarray(data)
    eval_points = np.asarray(eval_points, dtype=np.float64)
    if not np.all(np.isfinite(eval_points)):
        raise ValidationError("evaluation points must be finite")
    if h <= 0:
        raise ValidationError("bandwidth must be positive")
    log_density = logsumexp(_log_kernel_matrix(eval_points, values, h), axis=1)
    log_density -= logsumexp(log_density)
    return DensityProfile(eval_points=eval_points, probs=np.exp(log_density),
                          bandwidth=h)


def kl(p, q) -> float:
    """Kullback-Leibler divergence in bits; terms with p=0 contribute 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError("distributions must share a support")
    mask = p > 0
    if np.any(q[mask] == 0):
        return float("inf")
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def js(p, q) -> float:
    """Jensen-Shannon distance in bits: symmetric and bounded by 1."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def shared_support(clients: list[Dataset], max_points: int = MAX_SUPPORT_POINTS) -> np.ndarray:
    """One evaluation support for all clients: the deduplicated union of
    their samples, thinned to a size cap.

    Rows are sorted before thinning so the support (and everything computed
    on it) is invariant to client order.
    """
    stacked = np.vstack([c.values for c in clients])
    support = np.unique(stacked, axis=0)
    if support.shape[0] > max_points:
        keep = np.linspace(0, support.shape[0] - 1, max_points).astype(np.int64)
        support = support[keep]
    return support


def pairwise_js_matrix(clients: list[Dataset]) -> np.ndarray:
    """Symmetric matrix of JS distances between client density profiles."""
    if len(clients) < 2:
        raise ValidationError("need at least two clients")
    d = clients[0].d
    for c in clients:
        if c.d != d:
            raise ValidationError("clients must share feature dimensionality")
    support = shared_support(clients)
    profiles = [density_profile(c, support, select_bandwidth(c)) for c in clients]
    L = len(clients)
    out = np.zeros((L, L))
    for a in range(L):
        for b in range(a + 1, L):
            out[a, b] = out[b, a] = js(profiles[a].probs, profiles[b].probs)
    return out


def non_icd_degree(clients: list[Dataset]) -> float:
    """Average pairwise JS distance between client densities, in [0, 1]."""
    matrix = pairwise_js_matrix(clients)
    L = matrix.shape[0]
    return float(matrix.sum() / (L * (L - 1)))
