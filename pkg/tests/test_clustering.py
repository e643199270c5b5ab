import json

import numpy as np
import pytest

from regime_lab.clustering import (
    Clustering,
    KMeansConfig,
    Metric,
    kmeans_generic,
    mk_means,
    moment_features,
    total_cluster_variation,
    within_cluster_variation,
    wk_means,
)
from regime_lab.errors import ConfigError, EmptyCluster, KTooLarge, NonFinitePoint
from regime_lab.wasserstein import wasserstein_distance

EUC = Metric("euclidean")
mean_agg = lambda m: m.mean(axis=0)


def disp(old, new):
    return float(np.linalg.norm(old - new, axis=1).sum())


def test_metric_matches_pairwise_wasserstein(rng):
    A = np.sort(rng.normal(size=(4, 6)), axis=1)
    B = np.sort(rng.normal(size=(3, 6)), axis=1)
    for p in (1, 2):
        D = Metric("wasserstein", p).pairwise(A, B)
        ref = np.array([[wasserstein_distance(a, b, p) for b in B] for a in A])
        assert np.allclose(D, ref, rtol=1e-12, atol=1e-15)
    E = EUC.pairwise(A, B)
    assert np.allclose(E, np.linalg.norm(A[:, None] - B[None], axis=2))


def test_k_equals_n_gives_zero_loss(rng):
    X = rng.normal(size=(6, 2))
    c = kmeans_generic(X, KMeansConfig(k=6, restarts=1), EUC, mean_agg, disp)
    assert c.loss_trace[0] == 0 and c.iterations == 1 and c.converged
    assert total_cluster_variation(X, c) == 0


def test_k1_is_mean(rng):
    X = rng.normal(size=(30, 3))
    c = kmeans_generic(X, KMeansConfig(k=1, restarts=1), EUC, mean_agg, disp)
    assert np.allclose(c.centroids[0], X.mean(axis=0))


def test_separated_blobs(rng):
    X = np.vstack([rng.normal(-5, 0.1, size=(40, 2)), rng.normal(5, 0.1, size=(40, 2))])
    truth = np.repeat([0, 1], 40)
    c = kmeans_generic(X, KMeansConfig(k=2, seed=3), EUC, mean_agg, disp)
    assert np.array_equal(c.assignments, truth) or np.array_equal(c.assignments, 1 - truth)


def test_errors(rng):
    with pytest.raises(KTooLarge):
        kmeans_generic(np.zeros((2, 2)), KMeansConfig(k=3), EUC, mean_agg, disp)
    with pytest.raises(NonFinitePoint):
        kmeans_generic(np.array([[np.nan, 0.0]]), KMeansConfig(k=1), EUC, mean_agg, disp)
    with pytest.raises(ConfigError):
        KMeansConfig(tolerance=0)
    with pytest.raises(ConfigError):
        KMeansConfig(init="random")
    with pytest.raises(EmptyCluster):
        within_cluster_variation(np.empty((0, 2)), [0, 0], EUC)


def test_tie_goes_to_lowest_index():
    X = np.array([[0.0]])
    labels, _ = Metric("euclidean").nearest(X, np.array([[1.0], [-1.0]]))
    assert labels[0] == 0


def test_within_cluster_variation_examples(rng):
    assert within_cluster_variation([[3.0, 1.0]], [3.0, 1.0], EUC) == 0
    assert within_cluster_variation([[0.0], [2.0]], [1.0], EUC) == 2
    x = rng.normal(size=50)
    assert within_cluster_variation(x[:, None], [x.mean()], EUC) == pytest.approx(np.sum((x - x.mean()) ** 2), rel=1e-12)
    # plain callables work too
    f = lambda a, b: float(np.abs(a - b).sum())
    assert within_cluster_variation([[0.0], [2.0]], [1.0], f) == 2


def test_total_variation_one_cluster(rng):
    X = rng.normal(size=(20, 2))
    c = kmeans_generic(X, KMeansConfig(k=1, restarts=1), EUC, mean_agg, disp)
    assert total_cluster_variation(X, c) == pytest.approx(within_cluster_variation(X, c.centroids[0], EUC))


def _groups(rng, n=20, h1=50):
    lo = np.sort(rng.normal(0, 0.01, size=(n, h1)), axis=1)
    hi = np.sort(rng.normal(0, 0.1, size=(n, h1)), axis=1)
    return np.vstack([lo, hi]), np.repeat([0, 1], n)


def test_wk_means_identical_measures():
    X = np.tile(np.linspace(-1, 1, 5), (8, 1))
    c = wk_means(X, KMeansConfig(k=1, restarts=1))
    assert np.array_equal(c.centroids[0], X[0]) and c.iterations == 1


def test_wk_means_separates_variance_groups(rng):
    X, truth = _groups(rng)
    c = wk_means(X, KMeansConfig(k=2, seed=1))
    # canonical label 0 is the low-variance group
    assert np.array_equal(c.assignments, truth)
    assert c.centroids[0].var() < c.centroids[1].var()


def test_mk_means_mean_shift(rng):
    lo = rng.normal(0, 0.1, size=(15, 20))
    hi = rng.normal(1.0, 0.1, size=(15, 20))
    c = mk_means(np.sort(np.vstack([lo, hi]), axis=1), KMeansConfig(k=2, seed=2), p_moments=1)
    assert len(set(c.assignments[:15])) == 1 and len(set(c.assignments[15:])) == 1
    assert c.assignments[0] != c.assignments[-1]


def test_mk_means_identical_k1():
    X = np.tile(np.linspace(-1, 1, 5), (6, 1))
    c = mk_means(X, KMeansConfig(k=1, restarts=1))
    assert c.iterations == 1 and np.allclose(c.centroids, 0)


def test_mk_means_rescale_invariance(rng):
    X, _ = _groups(rng, 15, 20)
    base = mk_means(X, KMeansConfig(k=2, seed=4))
    feats, _, _ = moment_features(X, 4)
    # rescaling a raw-moment column changes nothing after standardization
    raw = np.mean(X[..., None] ** np.arange(1, 5), axis=1)
    raw2 = raw.copy()
    raw2[:, 2] = 7.5 * raw2[:, 2] + 3.0
    z1 = (raw - raw.mean(0)) / raw.std(0)
    z2 = (raw2 - raw2.mean(0)) / raw2.std(0)
    assert np.allclose(z1, z2, atol=1e-9)
    c2 = kmeans_generic(z2, KMeansConfig(k=2, seed=4), EUC, mean_agg, disp)
    c1 = kmeans_generic(z1, KMeansConfig(k=2, seed=4), EUC, mean_agg, disp)
    assert np.array_equal(c1.assignments, c2.assignments)
    assert np.allclose(feats, z1, atol=1e-9)
    assert base.k == 2


def test_mk_centroid_mean_variance_round_trip(rng):
    X, _ = _groups(rng)
    c = mk_means(X, KMeansConfig(k=2, seed=0))
    mv = c.centroid_mean_variance()
    # the centroid of each cluster is the mean of its members' features, so
    # the implied raw moments are member averages
    for l in range(2):
        m = X[c.assignments == l]
        assert mv[l, 0] == pytest.approx(m.mean(), rel=1e-9, abs=1e-15)
        assert mv[l, 1] == pytest.approx((m**2).mean() - m.mean() ** 2, rel=1e-9)


@pytest.mark.parametrize("init", ["uniform", "farthest-first"])
def test_objective_monotone_and_determinism(rng, init):
    for seed in range(10):
        X = np.sort(np.random.default_rng(seed).normal(0, rng.uniform(0.5, 2), size=(60, 8)), axis=1)
        X[:20] *= 5
        for p in (1, 2):
            a = wk_means(X, KMeansConfig(k=3, seed=seed, init=init, restarts=2), p)
            b = wk_means(X, KMeansConfig(k=3, seed=seed, init=init, restarts=2), p)
            tr = np.array(a.variation_trace)
            assert np.all(np.diff(tr) <= 1e-10 * (1 + tr[:-1]))
            assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
            assert np.all(np.bincount(a.assignments, minlength=3) > 0)


def test_empty_cluster_repair():
    # three distinct points, but the initial centroids coincide
    X = np.array([[0.0], [0.0], [0.0], [10.0]])
    c = kmeans_generic(X, KMeansConfig(k=3, seed=0, restarts=3), EUC, mean_agg, disp)
    assert np.all(np.bincount(c.assignments, minlength=3) > 0)


def test_serialization_round_trip(rng):
    X, _ = _groups(rng)
    c = mk_means(X, KMeansConfig(k=2))
    d = json.loads(json.dumps(c.to_dict()))
    back = Clustering.from_dict(d)
    assert np.array_equal(back.assignments, c.assignments)
    assert np.array_equal(back.centroids, c.centroids)
    assert np.allclose(back.centroid_mean_variance(), c.centroid_mean_variance())
