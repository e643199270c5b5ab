"""k-means over a pluggable metric, and its two instantiations.

* WK-means clusters empirical measures (rows of sorted atoms) under W_p with
  Wasserstein barycenters as centroids.
* MK-means maps each measure to its first few scaled raw moments,
  standardizes them column-wise and runs Euclidean k-means.

Labels are 0-based throughout. After fitting, clusters are reordered so that
label 0 is the lowest-variance ("standard") regime.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ConfigError, EmptyCluster, KTooLarge, NonFinitePoint
from .measures import as_atom_matrix, moment_map, standardize_columns
from .wasserstein import barycenter_atoms

log = logging.getLogger(__name__)

INIT_METHODS = ("uniform", "farthest-first")


class Metric:
    """Distance between rows of a point matrix.

    ``kind="wasserstein"`` treats rows as sorted atoms and gives W_p;
    ``kind="euclidean"`` is the l2 norm. Methods with ``pow`` in the name
    return ``distance ** power`` (``power`` is p for W_p and 2 for l2), which
    is the quantity the matching aggregator minimizes.
    """

    def __init__(self, kind: str = "wasserstein", p: float = 1.0):
        if kind not in ("wasserstein", "euclidean"):
            raise ConfigError(f"unknown metric {kind!r}")
        if kind == "wasserstein" and not p >= 1:
            raise ConfigError(f"Wasserstein order must be >= 1, got {p}")
        self.kind = kind
        self.p = float(p) if kind == "wasserstein" else 2.0
        self.power = self.p

    def __repr__(self):
        return f"Metric({self.kind!r}, p={self.p:g})"

    def _scale(self, d):
        return 1.0 / d if self.kind == "wasserstein" else 1.0

    def pow_pairwise(self, A, B):
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        return _kernels.pairwise_pow_dist(A, B, self.power) * self._scale(A.shape[1])

    def pairwise(self, A, B):
        return self.pow_pairwise(A, B) ** (1.0 / self.power)

    def nearest(self, X, C):
        labels, best = _kernels.assign_nearest(X, C, self.power)
        return labels, best * self._scale(X.shape[1])

    def __call__(self, a, b) -> float:
        return float(self.pairwise(a, b)[0, 0])


@dataclass
class KMeansConfig:
    k: int = 2
    tolerance: float = 1e-6
    max_iterations: int = 300
    seed: int = 0
    init: str = "uniform"
    restarts: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.init not in INIT_METHODS:
            raise ConfigError(f"init must be one of {INIT_METHODS}, got {self.init!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass
class Clustering:
    """Result of a k-means run.

    ``loss_trace`` holds the stopping loss (summed centroid displacement) and
    ``variation_trace`` the objective ``sum d(x, centroid) ** power`` after
    each iteration.
    """

    assignments: np.ndarray
    centroids: np.ndarray
    loss_trace: list
    variation_trace: list
    iterations: int
    converged: bool
    metric: str = "wasserstein"
    p: float = 1.0
    algorithm: str = "kmeans"
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == label)

    def metric_obj(self) -> Metric:
        return Metric(self.metric, self.p)

    def centroid_mean_variance(self) -> np.ndarray:
        """``(k, 2)`` array of (mean, variance) implied by each centroid.

        WK centroids are measures, so this is their population mean and
        variance. MK centroids are standardized scaled-moment vectors; they
        are mapped back to raw moments first, which needs at least two moments
        for the variance (NaN otherwise).
        """
        if self.algorithm == "mkmeans":
            raw = self.centroids * np.asarray(self.extras["moment_sd"]) + np.asarray(self.extras["moment_mean"])
            m1 = raw[:, 0]
            var = 2.0 * raw[:, 1] - m1**2 if raw.shape[1] > 1 else np.full(len(m1), np.nan)
            return np.column_stack([m1, var])
        return np.column_stack([self.centroids.mean(axis=1), self.centroids.var(axis=1)])

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "metric": self.metric,
            "p": self.p,
            "k": self.k,
            "assignments": self.assignments.tolist(),
            "centroids": self.centroids.tolist(),
            "loss_trace": list(map(float, self.loss_trace)),
            "variation_trace": list(map(float, self.variation_trace)),
            "iterations": self.iterations,
            "converged": self.converged,
            "config": self.config,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Clustering":
        return cls(
            assignments=np.asarray(d["assignments"], dtype=np.int64),
            centroids=np.asarray(d["centroids"], dtype=float),
            loss_trace=list(d["loss_trace"]),
            variation_trace=list(d["variation_trace"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            metric=d["metric"],
            p=float(d["p"]),
            algorithm=d["algorithm"],
            config=d.get("config", {}),
            extras=d.get("extras", {}),
        )


def within_cluster_variation(cluster_points, centroid, metric: Metric | Callable, power: float = 2) -> float:
    """Sum over members of ``metric(x, centroid) ** power``."""
    pts = np.atleast_2d(np.asarray(cluster_points, dtype=float))
    if pts.shape[0] == 0 or pts.size == 0:
        raise EmptyCluster("cluster has no members")
    c = np.atleast_2d(np.asarray(centroid, dtype=float))
    if isinstance(metric, Metric):
        d = metric.pairwise(pts, c)[:, 0]
    else:
        d = np.array([metric(x, c[0]) for x in pts])
    return float(np.sum(d**power))


def total_cluster_variation(points, clustering: Clustering, metric: Metric | None = None, power: float = 2) -> float:
    metric = metric or clustering.metric_obj()
    pts = np.asarray(points, dtype=float)
    return sum(
        within_cluster_variation(pts[clustering.assignments == l], clustering.centroids[l], metric, power)
        for l in range(clustering.k)
        if np.any(clustering.assignments == l)
    )


def _init_centroids(X, k, method, rng, metric: Metric):
    n = X.shape[0]
    if method == "uniform":
        return X[rng.choice(n, size=k, replace=False)].copy()
    chosen = [int(rng.integers(n))]
    dmin = metric.pow_pairwise(X, X[chosen])[:, 0]
    for _ in range(1, k):
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, metric.pow_pairwise(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def _repair_empty(X, labels, cost, centroids, k):
    """Give each empty cluster the point farthest from its own centroid."""
    counts = np.bincount(labels, minlength=k)
    for l in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        if not movable.any():
            break
        idx = int(np.argmax(np.where(movable, cost, -np.inf)))
        counts[labels[idx]] -= 1
        labels[idx] = l
        counts[l] = 1
        cost[idx] = 0.0
        centroids[l] = X[idx]
        log.debug("empty cluster %d reseeded with point %d", l, idx)
    return labels, cost


def _single_run(X, cfg: KMeansConfig, metric: Metric, aggregate, loss, rng):
    k = cfg.k
    centroids = _init_centroids(X, k, cfg.init, rng, metric)
    loss_trace, var_trace = [], []
    converged = False
    labels = np.zeros(X.shape[0], dtype=np.int64)
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        labels, cost = metric.nearest(X, centroids)
        labels, cost = _repair_empty(X, labels, cost, centroids, k)
        new = np.vstack([aggregate(X[labels == l]) for l in range(k)])
        step_loss = loss(centroids, new)
        objective = float(np.sum(_row_pow(metric, X, new, labels)))
        loss_trace.append(step_loss)
        var_trace.append(objective)
        centroids = new
        if step_loss < cfg.tolerance:
            converged = True
            break
    return labels, centroids, loss_trace, var_trace, it, converged


def _row_pow(metric: Metric, X, C, labels):
    """``d(X[i], C[labels[i]]) ** power`` for every row."""
    out = np.empty(X.shape[0])
    for l in range(C.shape[0]):
        idx = labels == l
        if idx.any():
            out[idx] = metric.pow_pairwise(X[idx], C[l : l + 1])[:, 0]
    return out


def kmeans_generic(
    points,
    cfg: KMeansConfig,
    metric: Metric,
    aggregate: Callable[[np.ndarray], np.ndarray],
    loss: Callable[[np.ndarray, np.ndarray], float],
    *,
    algorithm: str = "kmeans",
) -> Clustering:
    """Lloyd iterations with restarts.

    Each iteration assigns every point to its nearest centroid (lowest index
    on ties), reseeds empty clusters, aggregates members into new centroids
    and evaluates ``loss(old, new)``; it stops once that drops below
    ``cfg.tolerance``. Of ``cfg.restarts`` seeded runs the one with the lowest
    final objective is returned.
    """
    X = np.ascontiguousarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("points must be a non-empty 2-D array")
    if not np.all(np.isfinite(X)):
        raise NonFinitePoint("points contain NaN or inf")
    if cfg.k > X.shape[0]:
        raise KTooLarge(f"k={cfg.k} exceeds the number of points ({X.shape[0]})")

    best = None
    for ss in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts):
        rng = np.random.Generator(np.random.Philox(ss))
        run = _single_run(X, cfg, metric, aggregate, loss, rng)
        if best is None or run[3][-1] < best[3][-1]:
            best = run
    labels, centroids, loss_trace, var_trace, iterations, converged = best
    return Clustering(
        assignments=labels,
        centroids=centroids,
        loss_trace=loss_trace,
        variation_trace=var_trace,
        iterations=iterations,
        converged=converged,
        metric=metric.kind,
        p=metric.p,
        algorithm=algorithm,
        config=asdict(cfg),
    )


def canonicalize(clustering: Clustering, key: np.ndarray) -> Clustering:
    """Relabel clusters in ascending order of ``key`` (stable on ties)."""
    order = np.argsort(np.asarray(key), kind="stable")
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    clustering.centroids = clustering.centroids[order]
    clustering.assignments = inverse[clustering.assignments]
    return clustering


def _displacement(metric: Metric):
    def loss(old, new):
        return float(np.sum(metric.pairwise(old, new).diagonal()))

    return loss


def wk_means(measures, cfg: KMeansConfig, p: float = 1) -> Clustering:
    """Wasserstein k-means on equal-size empirical measures."""
    X = as_atom_matrix(measures)
    metric = Metric("wasserstein", p)
    res = kmeans_generic(
        X, cfg, metric, lambda m: barycenter_atoms(m, p), _displacement(metric), algorithm="wkmeans"
    )
    return canonicalize(res, res.centroids.var(axis=1))


def moment_features(measures, p_moments: int):
    """Standardized scaled-moment features plus the column mean and sd used."""
    raw = moment_map(as_atom_matrix(measures), p_moments)
    return standardize_columns(raw), raw.mean(axis=0), raw.std(axis=0)


def mk_means(measures, cfg: KMeansConfig, p_moments: int = 4) -> Clustering:
    """Moment k-means: Euclidean k-means on standardized moment vectors."""
    if p_moments < 1:
        raise ConfigError("p_moments must be >= 1")
    X = as_atom_matrix(measures)
    if X.shape[0] < 2:
        raise ConfigError("moment k-means needs at least 2 measures")
    feats, mean, sd = moment_features(X, p_moments)
    metric = Metric("euclidean")
    res = kmeans_generic(feats, cfg, metric, lambda m: m.mean(axis=0), _displacement(metric), algorithm="mkmeans")
    res.extras.update(p_moments=p_moments, moment_mean=mean.tolist(), moment_sd=sd.tolist())
    mv = res.centroid_mean_variance()
    key = mv[:, 1] if p_moments > 1 else np.linalg.norm(res.centroids, axis=1)
    return canonicalize(res, key)
