"""K-means clustering of stream rows, a random baseline, and silhouette scores.

Distances are squared Euclidean on the raw symbol values (no normalization)
for k-means, and plain Euclidean for the silhouette dissimilarity.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, DataError


@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    assignment: np.ndarray
    centroids: np.ndarray
    objective: float
    iterations: int
    seed: int
    history: tuple = field(default=())

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == j)

    def to_bytes(self) -> bytes:
        """Canonical bytes, used to check determinism."""
        return b"".join([
            np.int64(self.k).tobytes(),
            self.assignment.astype("<i8").tobytes(),
            self.centroids.astype("<f8").tobytes(),
            np.float64(self.objective).tobytes(),
            np.int64(self.iterations).tobytes(),
        ])


@dataclass(frozen=True, eq=False)
class SilhouetteReport:
    per_point: np.ndarray
    mean: float
    per_cluster_mean: np.ndarray


def _as_points(matrix) -> np.ndarray:
    data = matrix.data if hasattr(matrix, "data") else matrix
    return np.asarray(data, dtype=np.float64)


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(rows, k) matrix of squared Euclidean distances."""
    out = np.empty((points.shape[0], centroids.shape[0]))
    for j, c in enumerate(centroids):
        diff = points - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def _check_k(k: int, rows: int) -> None:
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if k > rows:
        raise ConfigError(f"k={k} exceeds the number of rows ({rows})")


def seed_centroids_pp(matrix, k: int, seed: int) -> np.ndarray:
    """k-means++ seeding: uniform first pick, then D^2-weighted picks.

    When every remaining squared distance is zero the next pick is uniform.
    """
    points = _as_points(matrix)
    return points[seed_indices_pp(points, k, seed)].copy()


def seed_indices_pp(matrix, k: int, seed: int) -> np.ndarray:
    """Row indices picked by :func:`seed_centroids_pp`, in pick order."""
    points = _as_points(matrix)
    _check_k(k, points.shape[0])
    rng = np.random.default_rng(seed)
    rows = points.shape[0]
    picks = [int(rng.integers(rows))]
    nearest = squared_distances(points, points[picks[:1]])[:, 0]
    while len(picks) < k:
        mass = nearest.sum()
        if mass > 0:
            pick = int(rng.choice(rows, p=nearest / mass))
        else:
            pick = int(rng.integers(rows))
        picks.append(pick)
        nearest = np.minimum(nearest, squared_distances(points, points[[pick]])[:, 0])
    return np.array(picks, dtype=np.int64)


def assign(matrix, centroids) -> np.ndarray:
    """Nearest centroid per row; ties go to the lowest centroid index."""
    points = _as_points(matrix)
    centroids = np.asarray(centroids, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[1] != points.shape[1]:
        raise DataError("centroid width does not match the matrix")
    # argmin returns the first minimum, which is the tie rule we want
    return np.argmin(squared_distances(points, centroids), axis=1)


def update_centroids(matrix, assignment, k: int, centroids=None) -> np.ndarray:
    """Member means; an empty cluster keeps its previous centroid (or zeros)."""
    points = _as_points(matrix)
    assignment = np.asarray(assignment)
    out = np.zeros((k, points.shape[1])) if centroids is None else np.array(centroids, dtype=np.float64)
    for j in range(k):
        member = assignment == j
        if member.any():
            out[j] = points[member].mean(axis=0)
    return out


def _objective(points, assignment, centroids) -> float:
    diff = points - centroids[assignment]
    return float(np.einsum("ij,ij->", diff, diff))


def _fill_empty(points, assignment, centroids, k):
    """Move the point farthest from its centroid into each empty cluster."""
    assignment = assignment.copy()
    for j in range(k):
        sizes = np.bincount(assignment, minlength=k)
        if sizes[j]:
            continue
        movable = sizes[assignment] > 1
        diff = points - centroids[assignment]
        dist = np.einsum("ij,ij->i", diff, diff)
        dist[~movable] = -1.0
        victim = int(np.argmax(dist))
        assignment[victim] = j
    return assignment


def kmeans(matrix, k: int, max_iters: int = 100, tol: float = 1e-6, seed: int = 0) -> Clustering:
    """Lloyd iterations from k-means++ seeds.

    Stops when the assignment stops changing, the objective improves by
    less than ``tol``, or after ``max_iters`` iterations. ``history`` holds
    the objective after every iteration and is non-increasing.
    """
    if max_iters < 1:
        raise ConfigError("max_iters must be at least 1")
    if tol < 0:
        raise ConfigError("tol must be non-negative")
    points = _as_points(matrix)
    centroids = seed_centroids_pp(points, k, seed)
    assignment = None
    history = []
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new = _fill_empty(points, assign(points, centroids), centroids, k)
        stable = assignment is not None and np.array_equal(new, assignment)
        assignment = new
        centroids = update_centroids(points, assignment, k, centroids)
        objective = _objective(points, assignment, centroids)
        improved = history[-1] - objective if history else np.inf
        history.append(objective)
        if stable or improved < tol:
            break
    return Clustering(k, assignment, centroids, history[-1], iterations, seed, tuple(history))


def _surjection_counts(k: int, rows: int) -> list[list[int]]:
    """table[r][u]: ways to label r rows so that all k-u unused labels appear."""
    table = [[0] * (k + 1) for _ in range(rows + 1)]
    for r in range(rows + 1):
        for u in range(k + 1):
            missing = k - u
            table[r][u] = sum((-1) ** j * comb(missing, j) * (k - j) ** r for j in range(missing + 1))
    return table


def random_partition(rows: int, k: int, seed: int, matrix=None, redraws: int = 64) -> Clustering:
    """Uniformly random assignment conditioned on every cluster being non-empty.

    Up to ``redraws`` unconditioned draws are tried first; if all leave a
    cluster empty, labels are drawn sequentially with exact surjection
    counts. Both routes sample the same distribution, so there is no
    retry-exhaustion failure. Centroids are filled in when ``matrix`` is
    given.
    """
    _check_k(k, rows)
    rng = np.random.default_rng(seed)
    for _ in range(redraws):
        assignment = rng.integers(0, k, size=rows)
        if np.bincount(assignment, minlength=k).min() > 0:
            break
    else:
        assignment = _sequential_surjection(rows, k, rng)
    result = Clustering(k, assignment.astype(np.int64), np.zeros((k, 0)), float("nan"), 0, seed)
    return result if matrix is None else with_centroids(result, matrix)


def _sequential_surjection(rows: int, k: int, rng) -> np.ndarray:
    counts = _surjection_counts(k, rows)
    assignment = np.empty(rows, dtype=np.int64)
    used: list[int] = []
    unused = list(range(k))
    for i in range(rows):
        remaining = rows - i - 1
        u = len(used)
        if rng.random() < u * counts[remaining][u] / counts[remaining + 1][u]:
            label = used[int(rng.integers(u))]
        else:
            label = unused.pop(int(rng.integers(len(unused))))
            used.append(label)
        assignment[i] = label
    return assignment


def with_centroids(clustering: Clustering, matrix) -> Clustering:
    """Fill in centroids and objective of a clustering computed without data."""
    points = _as_points(matrix)
    centroids = update_centroids(points, clustering.assignment, clustering.k)
    return Clustering(clustering.k, clustering.assignment, centroids,
                      _objective(points, clustering.assignment, centroids),
                      clustering.iterations, clustering.seed, clustering.history)


def silhouette(matrix, clustering: Clustering) -> SilhouetteReport:
    """Silhouette value of every row; singleton clusters score 0."""
    if clustering.k < 2:
        raise ConfigError("silhouette needs at least two clusters")
    points = _as_points(matrix)
    labels = np.asarray(clustering.assignment)
    if labels.shape[0] != points.shape[0]:
        raise DataError("assignment length does not match the matrix")
    dist = cdist(points, points)
    sizes = np.bincount(labels, minlength=clustering.k)
    sums = np.zeros((points.shape[0], clustering.k))
    for j in range(clustering.k):
        sums[:, j] = dist[:, labels == j].sum(axis=1)
    rows = np.arange(points.shape[0])
    own = sizes[labels]
    within = np.where(own > 1, sums[rows, labels] / np.maximum(own - 1, 1), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        means = sums / sizes[None, :]
    means[rows, labels] = np.inf
    means[:, sizes == 0] = np.inf
    nearest = means.min(axis=1)
    denom = np.maximum(within, nearest)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, (nearest - within) / denom, 0.0)
    s[own <= 1] = 0.0
    s = np.clip(s, -1.0, 1.0)
    per_cluster = np.array([s[labels == j].mean() if sizes[j] else np.nan
                            for j in range(clustering.k)])
    return SilhouetteReport(s, float(s.mean()), per_cluster)


def assignment_csv(clustering: Clustering, report: SilhouetteReport | None = None) -> str:
    """``row,cluster,silhouette`` table with a header line."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["row", "cluster", "silhouette"])
    for i, label in enumerate(clustering.assignment):
        value = "" if report is None else repr(float(report.per_point[i]))
        writer.writerow([i, int(label), value])
    return out.getvalue()
