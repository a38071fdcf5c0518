import itertools

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import chisquare

from oracles import naive_assign, naive_silhouette
from recomp.clustering import (Clustering, _sequential_surjection, assign, assignment_csv, kmeans,
                               random_partition, seed_centroids_pp, silhouette,
                               update_centroids, with_centroids)
from recomp.errors import ConfigError
from recomp.stream_model import SyntheticSpec, generate_labeled

points_strategy = arrays(np.float64, st.tuples(st.integers(2, 15), st.integers(1, 4)),
                         elements=st.integers(-20, 20).map(float))


@given(points_strategy, st.integers(1, 5), st.integers(0, 1000))
def test_assign_matches_brute_force(points, k, seed):
    k = min(k, points.shape[0])
    centroids = seed_centroids_pp(points, k, seed)
    assert assign(points, centroids).tolist() == naive_assign(points.tolist(), centroids.tolist())


def test_assign_ties_go_to_lowest_index():
    assert assign([[1.0]], [[0.0], [2.0]]).tolist() == [0]


def test_update_keeps_empty_centroid():
    out = update_centroids([[0.0], [2.0]], [0, 0], 2, centroids=[[5.0], [9.0]])
    assert out.tolist() == [[1.0], [9.0]]


def test_seeding_degenerate_zero_mass_is_uniform():
    picks = [seed_centroids_pp(np.zeros((3, 2)), 3, s) for s in range(5)]
    assert all(p.shape == (3, 2) for p in picks)


def test_seeding_non_degenerate_fixture_against_closed_form():
    x = np.array([0.0, 1.0, 3.0, 7.0])
    trials = 8000
    hits = np.zeros((4, 4))
    for s in range(trials):
        c = seed_centroids_pp(x[:, None], 2, s)[:, 0]
        hits[np.searchsorted(x, c[0]), np.searchsorted(x, c[1])] += 1
    d2 = (x[:, None] - x[None, :]) ** 2
    expected = 0.25 * d2 / d2.sum(axis=1, keepdims=True)
    assert np.abs(hits / trials - expected).max() < 0.02


def test_kmeans_rejects_bad_k():
    with pytest.raises(ConfigError):
        kmeans(np.zeros((3, 1)), 4)
    with pytest.raises(ConfigError):
        kmeans(np.zeros((3, 1)), 0)


def test_kmeans_refills_empty_clusters():
    data = np.array([[0.0], [0.0], [0.0], [10.0]])
    for seed in range(20):
        c = kmeans(data, 3, seed=seed)
        assert (c.sizes > 0).all()


@settings(max_examples=80)
@given(points_strategy, st.integers(1, 5), st.integers(0, 1000))
def test_kmeans_objective_non_increasing(points, k, seed):
    k = min(k, points.shape[0])
    c = kmeans(points, k, seed=seed)
    assert all(b <= a for a, b in zip(c.history, c.history[1:]))
    assert c.objective == c.history[-1]
    assert (c.sizes > 0).all()
    assert 1 <= c.iterations <= 100


def test_kmeans_is_deterministic():
    data = np.random.default_rng(0).normal(size=(40, 3))
    assert kmeans(data, 4, seed=9).to_bytes() == kmeans(data, 4, seed=9).to_bytes()


def _same_partition(a, b):
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_kmeans_recovers_synthetic_archetypes():
    recovered = 0
    for seed in range(20):
        streams, labels = generate_labeled(
            SyntheticSpec(num_streams=24, block_len=200, num_archetypes=4, seed=seed))
        data = np.array([s.symbols for s in streams], dtype=np.float64)
        recovered += _same_partition(kmeans(data, 4, seed=seed).assignment, labels)
    assert recovered >= 18


def test_random_partition_is_surjective_and_deterministic():
    for seed in range(50):
        p = random_partition(9, 9, seed)
        assert sorted(p.assignment.tolist()) == list(range(9))
    assert random_partition(30, 4, 3).to_bytes() == random_partition(30, 4, 3).to_bytes()
    with pytest.raises(ConfigError):
        random_partition(3, 4, 0)


def test_random_partition_uniform_over_surjections():
    rows, k, trials = 10, 2, 40_000
    counts = {}
    for seed in range(trials):
        key = tuple(random_partition(rows, k, seed).assignment.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 2 ** rows - 2
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_sequential_sampler_uniform_over_surjections():
    rows, k, trials = 5, 3, 30_000
    rng = np.random.default_rng(11)
    surjections = [a for a in itertools.product(range(k), repeat=rows) if len(set(a)) == k]
    counts = dict.fromkeys(surjections, 0)
    for _ in range(trials):
        counts[tuple(_sequential_surjection(rows, k, rng).tolist())] += 1
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_random_partition_falls_back_without_redraws():
    p = random_partition(6, 6, seed=1, redraws=0)
    assert sorted(p.assignment.tolist()) == list(range(6))


def test_with_centroids_fills_means():
    data = np.array([[0.0], [2.0], [10.0]])
    p = with_centroids(Clustering(2, np.array([0, 0, 1]), np.zeros((2, 0)), np.nan, 0, 0), data)
    assert p.centroids.tolist() == [[1.0], [10.0]]
    assert p.objective == 2.0


@settings(max_examples=100)
@given(arrays(np.float64, (12, 3), elements=st.floats(-100, 100)), st.integers(2, 4), st.integers(0, 99))
def test_silhouette_matches_brute_force(points, k, seed):
    part = random_partition(12, k, seed)
    report = silhouette(points, part)
    expected = naive_silhouette(points.tolist(), part.assignment.tolist())
    assert np.abs(report.per_point - expected).max() < 1e-9
    assert (np.abs(report.per_point) <= 1).all()
    assert report.mean == pytest.approx(np.mean(expected), abs=1e-9)


def test_silhouette_singletons_score_zero():
    data = np.array([[0.0], [1.0], [50.0]])
    part = Clustering(2, np.array([0, 0, 1]), np.zeros((2, 1)), 0.0, 0, 0)
    report = silhouette(data, part)
    assert report.per_point[2] == 0.0
    assert np.isnan(report.per_cluster_mean).sum() == 0


def test_silhouette_needs_two_clusters():
    with pytest.raises(ConfigError):
        silhouette(np.zeros((3, 1)), Clustering(1, np.zeros(3, int), np.zeros((1, 1)), 0.0, 0, 0))


def test_assignment_csv():
    part = Clustering(2, np.array([1, 0]), np.zeros((2, 1)), 0.0, 0, 0)
    text = assignment_csv(part)
    assert text.splitlines()[0] == "row,cluster,silhouette"
    assert text.splitlines()[1].startswith("0,1")


def test_kmeans_stable_assignment_is_a_fixed_point():
    rng = np.random.default_rng(8)
    for seed in range(20):
        data = rng.normal(size=(30, 2)) + rng.integers(0, 3, size=(30, 1)) * 8
        c = kmeans(data, 3, seed=seed, tol=0.0)
        if c.iterations < 100:
            again = assign(data, c.centroids)
            assert again.tolist() == c.assignment.tolist()
            assert np.allclose(update_centroids(data, again, 3), c.centroids)


def test_kmeans_beats_every_random_partition_on_zero_noise():
    streams, _ = generate_labeled(SyntheticSpec(num_streams=24, block_len=100, num_archetypes=4,
                                                noise_level=0.0, seed=2))
    data = np.array([s.symbols for s in streams], dtype=np.float64)
    best = silhouette(data, kmeans(data, 4, seed=0)).mean
    assert all(best >= silhouette(data, random_partition(24, 4, s)).mean for s in range(50))
