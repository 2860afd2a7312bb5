"""Clustering validity indices.

Four external indices (purity, adjusted Rand, normalized mutual
information, matching accuracy) operate on the prediction/truth
contingency table; two internal indices (silhouette, Calinski-Harabasz)
need the feature matrix. All external indices are invariant to relabeling
either side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import Dataset
from .errors import MetricUndefinedError, ValidationError


def _labels(x) -> np.ndarray:
    return np.asarray(getattr(x, "assignments", x), dtype=np.int64)


@dataclass
class ContingencyTable:
    counts: np.ndarray  # (k_pred, k_true)
    n: int


def contingency_table(pred, truth) -> ContingencyTable:
    pred = _labels(pred)
    truth = _labels(truth)
    if pred.shape != truth.shape:
        raise ValidationError(
            f"length mismatch: {pred.shape[0]} predictions vs {truth.shape[0]} labels")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    counts = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(counts, (pi, ti), 1)
    return ContingencyTable(counts=counts, n=pred.size)


def purity_from_counts(table: ContingencyTable) -> float:
    return float(table.counts.max(axis=1).sum() / table.n)


def purity(pred, truth) -> float:
    """Fraction of objects in the majority true class of their cluster."""
    return purity_from_counts(contingency_table(pred, truth))


def _comb2(x):
    return x * (x - 1) / 2.0


def ari_from_counts(table: ContingencyTable) -> float:
    c = table.counts
    index = _comb2(c).sum()
    sum_rows = _comb2(c.sum(axis=1)).sum()
    sum_cols = _comb2(c.sum(axis=0)).sum()
    total = _comb2(table.n)
    expected = sum_rows * sum_cols / total if total > 0 else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions are trivial; they agree perfectly by convention
        return 1.0
    return float((index - expected) / (max_index - expected))


def ari(pred, truth) -> float:
    """Adjusted Rand index: pair-counting agreement corrected for chance."""
    pred = _labels(pred)
    if pred.size < 2:
        raise ValidationError("adjusted Rand index needs at least 2 objects")
    return ari_from_counts(contingency_table(pred, truth))


def _entropy(freqs: np.ndarray) -> float:
    p = freqs[freqs > 0]
    return float(-(p * np.log(p)).sum())


def nmi_from_counts(table: ContingencyTable) -> float:
    joint = table.counts / table.n
    pr = joint.sum(axis=1)
    pc = joint.sum(axis=0)
    h_pred = _entropy(pr)
    h_true = _entropy(pc)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / np.outer(pr, pc)[nz])).sum())
    return mi / np.sqrt(h_pred * h_true)


def nmi(pred, truth) -> float:
    """Mutual information normalized by the geometric mean of entropies."""
    return nmi_from_counts(contingency_table(pred, truth))


def acc_from_counts(table: ContingencyTable) -> float:
    c = table.counts
    size = max(c.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: c.shape[0], : c.shape[1]] = c
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum() / table.n)


def acc(pred, truth) -> float:
    """Best achievable accuracy under a one-to-one cluster/class matching."""
    return acc_from_counts(contingency_table(pred, truth))


def silhouette(data, pred) -> float:
    """Mean silhouette width under Euclidean distance.

    Objects in singleton clusters score 0 by convention.

    Raises:
        MetricUndefinedError: fewer than two clusters.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    labels = _labels(pred)
    if labels.shape[0] != X.shape[0]:
        raise ValidationError("length mismatch between data and labels")
    ids, inv = np.unique(labels, return_inverse=True)
    k = ids.size
    if k < 2:
        raise MetricUndefinedError("silhouette needs at least two clusters")
    n = X.shape[0]
    d2 = ((X**2).sum(axis=1)[:, None]
          - 2.0 * X @ X.T
          + (X**2).sum(axis=1)[None, :])
    dist = np.sqrt(np.maximum(d2, 0.0))
    np.fill_diagonal(dist, 0.0)
    sizes = np.bincount(inv, minlength=k)
    # summed distance of each object to every cluster
    totals = np.zeros((n, k))
    for j in range(k):
        totals[:, j] = dist[:, inv == j].sum(axis=1)
    own = sizes[inv]
    scores = np.zeros(n)
    multi = own > 1
    a = np.where(multi, totals[np.arange(n), inv] / np.maximum(own - 1, 1), 0.0)
    means_other = totals / sizes[None, :]
    means_other[np.arange(n), inv] = np.inf
    b = means_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    scores[multi] = s[multi]
    return float(scores.mean())


def calinski_harabasz(data, pred) -> float:
    """Between/within variance ratio; +inf when within-scatter is zero.

    Raises:
        MetricUndefinedError: fewer than two clusters, or n <= k.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    labels = _labels(pred)
    if labels.shape[0] != X.shape[0]:
        raise ValidationError("length mismatch between data and labels")
    ids, inv = np.unique(labels, return_inverse=True)
    k = ids.size
    n = X.shape[0]
    if k < 2:
        raise MetricUndefinedError("Calinski-Harabasz needs at least two clusters")
    if n <= k:
        raise MetricUndefinedError("Calinski-Harabasz needs n > k")
    grand = X.mean(axis=0)
    between = 0.0
    within = 0.0
    for j in range(k):
        members = X[inv == j]
        mu = members.mean(axis=0)
        between += members.shape[0] * float(((mu - grand) ** 2).sum())
        within += float(((members - mu) ** 2).sum())
    if within == 0.0:
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def all_indices(data, pred, truth) -> dict:
    """All six indices as one mapping; internal indices fall back to None
    when undefined for the partition."""
    out = {
        "purity": purity(pred, truth),
        "ari": ari(pred, truth),
        "nmi": nmi(pred, truth),
        "acc": acc(pred, truth),
    }
    try:
        out["silhouette"] = silhouette(data, pred)
    except MetricUndefinedError:
        out["silhouette"] = None
    try:
        ch = calinski_harabasz(data, pred)
        out["calinski_harabasz"] = ch if np.isfinite(ch) else "inf"
    except MetricUndefinedError:
        out["calinski_harabasz"] = None
    return out
