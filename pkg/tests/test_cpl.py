import numpy as np
import pytest

from goldfc import (
    CompetitionExhausted,
    RunConfig,
    eliminate,
    gamma,
    run_cpl,
    select_winner_rival,
    similarity,
    update_importance,
    update_weights,
)
from goldfc.cpl import (
    _hellinger_alpha,
    _sigmoid_weight,
    initial_ledger_value,
    make_state,
    raw_distance,
)
from goldfc.metrics import ari
from goldfc.seeding import fork
from goldfc.synth import gaussian_blobs


def state_with(centroids, mode="raw", data=None):
    centroids = np.asarray(centroids, dtype=np.float64)
    st = make_state(data if data is not None else centroids,
                    centroids.shape[0], fork(0), mode)
    st.centroids = centroids.copy()
    return st


# ---------------------------------------------------------------- similarity

def test_similarity_is_one_at_centroid():
    st = state_with([[0.3, 0.7], [0.9, 0.1]])
    assert similarity([0.3, 0.7], st, 0) == 1.0


def test_similarity_direct_value():
    st = state_with([[1.0]])
    st.importance[0] = [1.0]
    assert similarity([0.0], st, 0) == pytest.approx(np.exp(-0.5), abs=1e-12)


def test_degenerate_zero_importance_gives_one():
    st = state_with([[1.0, 2.0]])
    st.importance[0] = [0.0, 0.0]
    assert similarity([-3.0, 5.0], st, 0) == 1.0


def test_similarity_decreases_with_weighted_distance():
    st = state_with([[0.0, 0.0]])
    vals = [similarity([x, 0.0], st, 0) for x in (0.1, 0.5, 1.5)]
    assert vals[0] > vals[1] > vals[2] > 0


# ---------------------------------------------------------------- winner / rival

def test_winner_at_own_centroid():
    st = state_with([[0.0, 0.0], [1.0, 1.0]])
    v, r = select_winner_rival([0.0, 0.0], st)
    assert (v, r) == (0, 1)
    assert st.win_counts[0] == 1


def test_gamma_dominance_breaks_score_ties():
    st = state_with([[0.5], [0.5]])
    st.win_counts[:] = [3, 1]  # gamma = [0.25, 0.75]
    v, _ = select_winner_rival([0.5], st)
    assert v == 1


def test_winner_rival_direct_scores():
    st = state_with([[1.0], [2.0]])
    st.importance[:] = 1.0
    # scores proportional to exp(-0.5), exp(-1.0)
    assert select_winner_rival([0.0], st) == (0, 1)


def test_rival_is_most_similar_other_cluster():
    st = state_with([[0.0], [0.2], [5.0]])
    st.importance[:] = 1.0
    v, r = select_winner_rival([0.0], st)
    assert v == 0 and r == 1


def test_competition_needs_two_live_clusters():
    st = state_with([[0.0], [1.0]])
    st.alive[1] = False
    with pytest.raises(CompetitionExhausted):
        select_winner_rival([0.0], st)


def test_argmax_invariant_to_weight_scaling():
    rng = np.random.default_rng(2)
    st = state_with(rng.random((5, 3)))
    st.cluster_weights[:] = rng.uniform(0.2, 0.9, 5)
    st.win_counts[:] = rng.integers(0, 10, 5)
    x = rng.random(3)
    v1, r1 = select_winner_rival(x, st)
    st.win_counts[v1] -= 1  # undo the bookkeeping
    st.cluster_weights *= 17.0
    assert select_winner_rival(x, st) == (v1, r1)


# ---------------------------------------------------------------- gamma

def test_gamma_symmetric_counts():
    st = state_with(np.zeros((4, 1)), data=np.zeros((4, 1)))
    st.win_counts[:] = 1
    assert np.allclose(gamma(st)[st.alive], 0.75)


def test_gamma_direct():
    st = state_with(np.zeros((2, 1)), data=np.zeros((2, 1)))
    st.win_counts[:] = [3, 1]
    assert np.allclose(gamma(st)[:2], [0.25, 0.75])


def test_gamma_empty_history_convention():
    st = state_with(np.zeros((2, 1)), data=np.zeros((2, 1)))
    assert np.allclose(gamma(st)[:2], [1.0, 1.0])


def test_gamma_fairness_identity():
    rng = np.random.default_rng(3)
    st = state_with(rng.random((6, 2)))
    for _ in range(40):
        select_winner_rival(rng.random(2), st)
    live = st.alive
    assert gamma(st)[live].sum() == pytest.approx(live.sum() - 1, abs=1e-9)


# ---------------------------------------------------------------- weights

def test_update_weights_reward_and_penalty():
    st = state_with([[0.0], [1.0]])
    st.importance[:] = 1.0
    st.intermediate_weights[:] = 0.0
    update_weights(st, 0, 1, [0.0], eta=0.05)
    assert st.intermediate_weights[0] == pytest.approx(0.05)
    # penalty scaled by sim ratio exp(-0.5)
    assert st.intermediate_weights[1] == pytest.approx(-0.05 * np.exp(-0.5), abs=1e-12)
    assert np.allclose(st.cluster_weights[:2],
                       _sigmoid_weight(st.intermediate_weights[:2]))


def test_sigmoid_midpoint():
    assert _sigmoid_weight(-5.0) == pytest.approx(0.5)


def test_weights_stay_in_open_unit_interval():
    rng = np.random.default_rng(4)
    data = rng.random((60, 2))
    res_state = make_state(data, 20, fork(1))
    for _ in range(100):
        x = rng.random(2)
        v, r = select_winner_rival(x, res_state)
        update_weights(res_state, v, r, x, 0.05)
    w = res_state.cluster_weights
    assert np.all(w > 0) and np.all(w < 1)


# ---------------------------------------------------------------- importance

def test_identical_distributions_fall_back_to_uniform():
    # two interleaved identical populations: no feature separates them
    X = np.tile(np.array([[0.1, 0.9], [0.9, 0.1]]), (10, 1))
    st = state_with(X[:2], data=X)
    st.assignments = np.tile([0, 1], 10)
    update_importance(st, X)
    assert np.allclose(st.importance[0], 0.5)
    assert np.allclose(st.importance[1], 0.5)


def test_hellinger_alpha_direct():
    val = _hellinger_alpha(np.array([0.0]), np.array([0.0]),
                           np.array([1.0]), np.array([4.0]))
    assert val[0] == pytest.approx(np.sqrt(1 - np.sqrt(0.8)), abs=1e-9)


def test_single_discriminative_feature_takes_all_weight():
    rng = np.random.default_rng(5)
    # feature 0 separates the clusters; feature 1 is shared noise
    a = np.column_stack([rng.normal(0.1, 0.01, 30), rng.uniform(0, 1, 30)])
    b = np.column_stack([rng.normal(0.9, 0.01, 30), rng.uniform(0, 1, 30)])
    X = np.vstack([a, b])
    st = state_with(np.array([[0.1, 0.5], [0.9, 0.5]]), data=X)
    st.assignments = np.repeat([0, 1], 30)
    update_importance(st, X)
    assert st.importance[0][0] > 0.8
    assert st.importance[:2].sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-9)


def test_importance_rows_sum_to_one_with_singletons():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [1.1, 0.9]])
    st = state_with(X[:2], data=X)
    st.assignments = np.array([0, 1, 1])
    update_importance(st, X)
    assert st.importance[:2].sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-9)


# ---------------------------------------------------------------- elimination

def test_eliminate_noop_above_floor():
    st = state_with([[0.0], [1.0]])
    before = st.alive.copy()
    eliminate(st, 1e-3)
    assert np.array_equal(st.alive, before)


def test_eliminate_reassigns_to_survivor():
    X = np.array([[0.0], [0.1], [1.0]])
    st = state_with(np.array([[0.05], [1.0]]), data=X)
    st.assignments = np.array([0, 0, 1])
    st.intermediate_weights[:] = [0.0, -20.0]
    st.cluster_weights[:] = _sigmoid_weight(st.intermediate_weights)
    eliminate(st, 1e-3)
    assert st.alive.tolist() == [True, False]
    assert st.assignments.tolist() == [0, 0, 0]


def test_eliminate_never_kills_last_survivor():
    st = state_with([[0.0], [1.0]])
    st.intermediate_weights[:] = [-20.0, -21.0]
    st.cluster_weights[:] = _sigmoid_weight(st.intermediate_weights)
    st.assignments = np.array([0, 1])
    eliminate(st, 1e-3)
    assert st.alive.sum() == 1
    assert st.alive[0]  # higher weight wins the reprieve


def test_eliminate_brute_force_nearest_survivor():
    # six points, three clusters; the middle cluster dies
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.45, 0.0],
                  [0.55, 0.0], [0.9, 0.0], [1.0, 0.0]])
    st = state_with(np.array([[0.05, 0.0], [0.5, 0.0], [0.95, 0.0]]), data=X)
    st.assignments = np.array([0, 0, 1, 1, 2, 2])
    st.intermediate_weights[:] = [0.0, -20.0, 0.0]
    st.cluster_weights[:] = _sigmoid_weight(st.intermediate_weights)
    expected = st.assignments.copy()
    for i in (2, 3):  # orphans of cluster 1
        sims = [similarity(X[i], st, j) for j in (0, 2)]
        expected[i] = (0, 2)[int(np.argmax(sims))]
    eliminate(st, 1e-3)
    assert st.assignments.tolist() == expected.tolist()


# ---------------------------------------------------------------- full runs

def test_two_identical_points_single_cluster():
    data = np.array([[0.4, 0.4], [0.4, 0.4]])
    res = run_cpl(data, 1, RunConfig(seed=0))
    assert res.k_final == 1
    assert np.allclose(res.centroids[0], [0.4, 0.4])
    assert res.assignments.assignments.tolist() == [0, 0]


def test_blob_recovery_with_moving_and_fixed_prototypes():
    data = gaussian_blobs([[0, 0], [0, 1], [1, 0], [1, 1]], 0.1, 100, seed=7)
    hits_moving = 0
    hits_fixed = 0
    for seed in range(10):
        res = run_cpl(data, 200, RunConfig(seed=seed))
        if res.k_final == 4 and ari(res.assignments, data.labels) >= 0.95:
            hits_moving += 1
        res_f = run_cpl(data, 200, RunConfig(seed=seed, fixed_prototypes=True))
        if res_f.k_final == 4:
            hits_fixed += 1
    assert hits_moving >= 8
    assert hits_fixed >= 8


def test_k_alive_never_increases():
    data = gaussian_blobs([[0.1, 0.1], [0.9, 0.9]], 0.02, 30, seed=1)
    for seed in range(5):
        res = run_cpl(data, 20, RunConfig(seed=seed))
        hist = res.k_history
        assert all(hist[i] >= hist[i + 1] for i in range(len(hist) - 1))


def test_objective_is_finite_and_positive():
    data = gaussian_blobs([[0.2, 0.2], [0.8, 0.8]], 0.05, 20, seed=2)
    res = run_cpl(data, 10, RunConfig(seed=3))
    assert np.isfinite(res.objective) and res.objective > 0


def test_run_is_deterministic_under_seed():
    data = gaussian_blobs([[0.1, 0.1], [0.9, 0.9]], 0.05, 25, seed=4)
    a = run_cpl(data, 20, RunConfig(seed=11))
    b = run_cpl(data, 20, RunConfig(seed=11))
    assert a.k_final == b.k_final
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignments.assignments, b.assignments.assignments)
    assert a.objective == b.objective


def test_k0_bounds_checked():
    data = np.random.default_rng(0).random((5, 2))
    with pytest.raises(Exception):
        run_cpl(data, 6, RunConfig(seed=0))


def test_ledger_init_matches_midpoint():
    assert initial_ledger_value(10) == -5.0
    assert _sigmoid_weight(initial_ledger_value(10)) == pytest.approx(0.5)


def test_raw_distance_diagnostic():
    st = state_with([[1.0]])
    st.importance[0] = [1.0]
    assert raw_distance([0.0], st, 0) == pytest.approx(1.0)
