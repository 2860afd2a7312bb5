"""Validity indices checked against independent brute-force oracles."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goldfc import (
    MetricUndefinedError,
    acc,
    ari,
    calinski_harabasz,
    contingency_table,
    nmi,
    purity,
    silhouette,
)
from goldfc.metrics import acc_from_counts, ari_from_counts, nmi_from_counts, purity_from_counts
from goldfc.synth import gaussian_blobs


# ---------------------------------------------------------------- oracles

def oracle_purity(pred, truth):
    total = 0
    for c in set(pred):
        members = [t for p, t in zip(pred, truth) if p == c]
        total += max(members.count(t) for t in set(members))
    return total / len(pred)


def oracle_ari(pred, truth):
    """Pair-by-pair enumeration (O(n^2)), no contingency shortcuts."""
    n = len(pred)
    a = b = c = d = 0  # together/together, together/apart, apart/together, apart/apart
    for i in range(n):
        for j in range(i + 1, n):
            sp = pred[i] == pred[j]
            stt = truth[i] == truth[j]
            if sp and stt:
                a += 1
            elif sp and not stt:
                b += 1
            elif not sp and stt:
                c += 1
            else:
                d += 1
    denom = (a + b) * (b + d) + (a + c) * (c + d)
    if denom == 0:
        return 1.0
    return 2.0 * (a * d - b * c) / denom


def oracle_nmi(pred, truth):
    n = len(pred)
    ps = sorted(set(pred))
    ts = sorted(set(truth))
    joint = {(p, t): 0 for p in ps for t in ts}
    for p, t in zip(pred, truth):
        joint[(p, t)] += 1
    hp = -sum((sum(joint[(p, t)] for t in ts) / n) * math.log(sum(joint[(p, t)] for t in ts) / n)
              for p in ps if sum(joint[(p, t)] for t in ts))
    ht = -sum((sum(joint[(p, t)] for p in ps) / n) * math.log(sum(joint[(p, t)] for p in ps) / n)
              for t in ts if sum(joint[(p, t)] for p in ps))
    if hp == 0 and ht == 0:
        return 1.0
    if hp == 0 or ht == 0:
        return 0.0
    mi = 0.0
    for p in ps:
        for t in ts:
            nij = joint[(p, t)]
            if nij:
                pi = sum(joint[(p, u)] for u in ts) / n
                pj = sum(joint[(q, t)] for q in ps) / n
                mi += (nij / n) * math.log((nij / n) / (pi * pj))
    return mi / math.sqrt(hp * ht)


def oracle_acc(pred, truth):
    """Exhaustive enumeration of one-to-one matchings on the padded table."""
    table = contingency_table(pred, truth).counts
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    best = max(sum(padded[i, p] for i, p in enumerate(perm))
               for perm in itertools.permutations(range(size)))
    return best / len(pred)


def random_labelings(n_trials=20, n_max=12, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        n = int(rng.integers(2, n_max + 1))
        kp = int(rng.integers(1, 5))
        kt = int(rng.integers(1, 5))
        yield rng.integers(0, kp, size=n).tolist(), rng.integers(0, kt, size=n).tolist()


# ---------------------------------------------------------------- purity

def test_purity_examples():
    assert purity([0, 1, 0, 2], [0, 1, 0, 2]) == 1.0
    assert purity([0, 0, 0, 0], [0, 0, 1, 1]) == 0.5
    assert purity([0, 0, 0, 0, 1, 1, 1, 1], [0, 0, 0, 1, 1, 1, 1, 1]) == 0.875


def test_purity_matches_oracle():
    for pred, truth in random_labelings(seed=1):
        assert purity(pred, truth) == pytest.approx(oracle_purity(pred, truth), abs=1e-12)


def test_purity_non_decreasing_under_refinement():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = 40
        pred = rng.integers(0, 4, size=n)
        truth = rng.integers(0, 3, size=n)
        before = purity(pred, truth)
        # split one predicted cluster arbitrarily in two
        refined = pred.copy()
        target = rng.integers(0, 4)
        members = np.flatnonzero(refined == target)
        refined[members[: members.size // 2]] = 4
        assert purity(refined, truth) >= before - 1e-12


# ---------------------------------------------------------------- ARI

def test_ari_identity_and_relabeling():
    assert ari([0, 1, 2, 0], [0, 1, 2, 0]) == pytest.approx(1.0)
    assert ari([0, 1, 2, 0, 1, 2], [2, 0, 1, 2, 0, 1]) == pytest.approx(1.0)


def test_ari_matches_pair_enumeration_oracle():
    for pred, truth in random_labelings(seed=2):
        assert ari(pred, truth) == pytest.approx(oracle_ari(pred, truth), abs=1e-10)


def test_ari_of_independent_labelings_near_zero():
    rng = np.random.default_rng(11)
    vals = [ari(rng.integers(0, 3, 200), rng.integers(0, 3, 200)) for _ in range(200)]
    assert abs(np.mean(vals)) < 0.02


# ---------------------------------------------------------------- NMI

def test_nmi_examples():
    assert nmi([0, 1, 0, 1], [1, 0, 1, 0]) == pytest.approx(1.0)
    rng = np.random.default_rng(4)
    val = nmi(rng.integers(0, 3, 10_000), rng.integers(0, 3, 10_000))
    assert abs(val) < 0.05


def test_nmi_matches_entropy_oracle():
    for pred, truth in random_labelings(seed=3):
        assert nmi(pred, truth) == pytest.approx(oracle_nmi(pred, truth), abs=1e-10)


# ---------------------------------------------------------------- ACC

def test_acc_examples():
    assert acc([1, 0, 1, 2, 0], [0, 2, 0, 1, 2]) == pytest.approx(1.0)
    assert acc([0, 0, 0, 0, 1, 1, 1, 1], [0, 0, 0, 1, 1, 1, 1, 1]) == pytest.approx(0.875)


def test_acc_matches_exhaustive_matching():
    for pred, truth in random_labelings(seed=5):
        assert acc(pred, truth) == pytest.approx(oracle_acc(pred, truth), abs=1e-12)


# ---------------------------------------------------------------- relabel invariance

@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=4, max_size=20),
       st.permutations(list(range(4))))
def test_external_indices_relabel_invariant(pred, perm):
    truth = [(v + 1) % 3 for v in pred]
    relabeled = [perm[v] for v in pred]
    for metric in (purity, ari, nmi, acc):
        assert metric(pred, truth) == pytest.approx(metric(relabeled, truth), abs=1e-12)


# ---------------------------------------------------------------- silhouette

def test_silhouette_hand_instance():
    # 6 points, 2 clusters; expected value computed by the direct a/b loops
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0],
                  [5.0, 5.0], [5.0, 6.0], [6.0, 5.0]])
    labels = [0, 0, 0, 1, 1, 1]
    expected = []
    for i in range(6):
        same = [j for j in range(6) if labels[j] == labels[i] and j != i]
        other = [j for j in range(6) if labels[j] != labels[i]]
        a = np.mean([np.linalg.norm(X[i] - X[j]) for j in same])
        b = np.mean([np.linalg.norm(X[i] - X[j]) for j in other])
        expected.append((b - a) / max(a, b))
    assert silhouette(X, labels) == pytest.approx(np.mean(expected), abs=1e-12)


def test_silhouette_limits():
    blobs = gaussian_blobs([[0.0, 0.0], [10.0, 10.0]], 0.05, 50, seed=0)
    assert silhouette(blobs.values, blobs.labels) > 0.9
    rng = np.random.default_rng(0)
    one_blob = rng.normal(size=(500, 2))
    assert abs(silhouette(one_blob, rng.integers(0, 2, 500))) < 0.1


def test_silhouette_single_cluster_undefined():
    with pytest.raises(MetricUndefinedError):
        silhouette(np.ones((4, 2)), [0, 0, 0, 0])


def test_silhouette_singletons_score_zero():
    X = np.array([[0.0], [0.1], [5.0]])
    val = silhouette(X, [0, 0, 1])
    # point 2 is a singleton -> 0; points 0 and 1 use the formula
    s0 = (5.0 - 0.1) / 5.0
    s1 = (4.9 - 0.1) / 4.9
    assert val == pytest.approx((s0 + s1 + 0.0) / 3, abs=1e-12)


# ---------------------------------------------------------------- Calinski-Harabasz

def test_ch_separated_blobs_large():
    blobs = gaussian_blobs([[0.0, 0.0], [1.0, 1.0]], 0.014, 50, seed=1)
    assert calinski_harabasz(blobs.values, blobs.labels) > 100


def test_ch_scale_invariant():
    blobs = gaussian_blobs([[0.0, 0.0], [1.0, 1.0]], 0.05, 30, seed=2)
    a = calinski_harabasz(blobs.values, blobs.labels)
    b = calinski_harabasz(blobs.values * 3.7, blobs.labels)
    assert a == pytest.approx(b, rel=1e-9)


def test_ch_orders_true_above_random():
    blobs = gaussian_blobs([[0.0, 0.0], [1.0, 1.0]], 0.05, 50, seed=3)
    rng = np.random.default_rng(0)
    assert calinski_harabasz(blobs.values, blobs.labels) > \
        calinski_harabasz(blobs.values, rng.integers(0, 2, 100))


def test_ch_zero_within_scatter_is_infinite():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    assert calinski_harabasz(X, [0, 0, 1]) == float("inf")


def test_ch_single_cluster_undefined():
    with pytest.raises(MetricUndefinedError):
        calinski_harabasz(np.ones((4, 2)), [0, 0, 0, 0])


# ---------------------------------------------------------------- pooling consistency

def test_counts_pool_like_concatenation():
    rng = np.random.default_rng(9)
    preds = [rng.integers(0, 3, 30) for _ in range(4)]
    truths = [rng.integers(0, 3, 30) for _ in range(4)]
    pooled = contingency_table(np.concatenate(preds), np.concatenate(truths))
    summed = None
    for p, t in zip(preds, truths):
        tab = contingency_table(p, t)
        if summed is None:
            summed = tab
        else:
            # same label universes here, so tables align
            summed.counts = summed.counts + tab.counts
            summed.n += tab.n
    assert np.array_equal(pooled.counts, summed.counts)
    for f in (purity_from_counts, ari_from_counts, nmi_from_counts, acc_from_counts):
        assert f(pooled) == pytest.approx(f(summed), abs=1e-12)
