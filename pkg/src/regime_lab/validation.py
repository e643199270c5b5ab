"""Cluster validation.

MMD-based scores compare clusters of measures through a Gaussian kernel; the
classic Davies-Bouldin, Dunn and Silhouette indexes are computed in whatever
metric space the clustering lives in.

A cluster is passed as an ``(M, h1)`` matrix, one measure per row. With the
default ``representation="vector"`` each measure is a single point of
``R^h1`` and rows are sorted first when ``ordered`` is set, so coordinates
line up order statistic by order statistic. ``representation="atoms"`` treats
each measure as a sample of ``h1`` scalars instead.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clustering import Clustering, Metric
from .errors import (
    ClusterTooSmall,
    ConfigError,
    DegenerateCentroids,
    EmptyCluster,
    EmptySample,
    LengthMismatch,
    ZeroDiameter,
)
from .rng import generator

log = logging.getLogger(__name__)

DEFAULT_BANDWIDTH = 0.1
REPRESENTATIONS = ("vector", "atoms")


def _check_sigma(sigma):
    if not sigma > 0:
        raise ConfigError(f"kernel bandwidth must be > 0, got {sigma}")


def gaussian_kernel(x, y, sigma: float = DEFAULT_BANDWIDTH) -> float:
    """``exp(-|x - y|^2 / (2 sigma^2))``."""
    _check_sigma(sigma)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise LengthMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    d = x - y
    return float(np.exp(-np.dot(d, d) / (2.0 * sigma * sigma)))


def _as_sample(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptySample("sample must contain at least one point")
    return x


def mmd2_biased(x, y, sigma: float = DEFAULT_BANDWIDTH) -> float:
    """Biased squared-MMD estimate, unclamped (can dip a hair below zero).

    ``x`` is ``(n, d)`` and ``y`` is ``(m, d)``; 1-D inputs are read as
    samples of scalars.
    """
    _check_sigma(sigma)
    x, y = _as_sample(x), _as_sample(y)
    if x.shape[1] != y.shape[1]:
        raise LengthMismatch("samples live in different dimensions")
    # fixed argument order so that swapping x and y is bit-for-bit symmetric
    if (y.shape, y.tobytes()) < (x.shape, x.tobytes()):
        x, y = y, x
    return float(_kernels.mmd2_pairs(x[None], y[None], sigma)[0])


def mmd_biased(x, y, sigma: float = DEFAULT_BANDWIDTH) -> float:
    return float(np.sqrt(max(mmd2_biased(x, y, sigma), 0.0)))


@dataclass
class MmdSamplingConfig:
    n_pairs: int = 10_000
    seed: int = 0
    ordered: bool = True
    representation: str = "vector"

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ConfigError("n_pairs must be >= 1")
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}")


def _pair_batches(n_total, n_pairs, rng):
    """Indices into ``range(n_total)``: distinct within a batch of ``n_total``,
    with whole batches repeated when more pairs are requested than exist."""
    full, rest = divmod(n_pairs, n_total)
    parts = [np.arange(n_total)] * full
    if rest:
        parts.append(np.sort(rng.choice(n_total, size=rest, replace=False)))
    return np.concatenate(parts)


def triangle_pair(t, n):
    """Decode linear indices ``t`` into pairs ``i < j`` of ``range(n)``.

    Pairs are enumerated row by row: (0,1), (0,2), ..., (0,n-1), (1,2), ...
    """
    t = np.asarray(t, dtype=np.int64)
    i = n - 2 - np.floor(np.sqrt(-8.0 * t + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    j = t + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2
    return i, j


def _prepare(cluster, cfg: MmdSamplingConfig):
    c = np.asarray(cluster, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if cfg.ordered:
        c = np.sort(c, axis=1)
    if cfg.representation == "vector":
        return c[:, None, :]
    return c[:, :, None]


def _scores(A, B, ia, ib, sigma):
    vals = np.maximum(_kernels.mmd2_pairs(A[ia], B[ib], sigma), 0.0)
    return float(np.median(vals)), vals


def within_cluster_similarity(cluster, cfg: MmdSamplingConfig | None = None, sigma: float = DEFAULT_BANDWIDTH):
    """Self-similarity score of a cluster and the sampled squared MMDs.

    Draws ``cfg.n_pairs`` pairs of distinct members and returns the median of
    their squared biased MMDs together with all sampled values.
    """
    cfg = cfg or MmdSamplingConfig()
    _check_sigma(sigma)
    n = len(cluster)
    if n < 2:
        raise ClusterTooSmall(f"need at least 2 members, got {n}")
    rng = generator(cfg.seed)
    t = _pair_batches(n * (n - 1) // 2, cfg.n_pairs, rng)
    i, j = triangle_pair(t, n)
    X = _prepare(cluster, cfg)
    return _scores(X, X, i, j, sigma)


def between_cluster_mmd(c1, c2, cfg: MmdSamplingConfig | None = None, sigma: float = DEFAULT_BANDWIDTH):
    """Median squared biased MMD over pairs drawn across two clusters."""
    cfg = cfg or MmdSamplingConfig()
    _check_sigma(sigma)
    n1, n2 = len(c1), len(c2)
    if n1 == 0 or n2 == 0:
        raise EmptyCluster("both clusters need members")
    rng = generator(cfg.seed)
    t = _pair_batches(n1 * n2, cfg.n_pairs, rng)
    return _scores(_prepare(c1, cfg), _prepare(c2, cfg), t // n2, t % n2, sigma)


# ---------------------------------------------------------------- indexes

_ROW_CHUNK = 512


def _block_reduce(A, B, metric: Metric, reduce, init):
    acc = init
    for s in range(0, A.shape[0], _ROW_CHUNK):
        acc = reduce(acc, reduce.reduce(metric.pairwise(A[s : s + _ROW_CHUNK], B), axis=None))
    return acc


def _groups(points, labels, k):
    pts = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    groups = [pts[labels == l] for l in range(k)]
    if any(len(g) == 0 for g in groups):
        raise EmptyCluster("every cluster needs at least one member")
    return groups


def davies_bouldin(points, clustering: Clustering, metric: Metric | None = None) -> float:
    metric = metric or clustering.metric_obj()
    k = clustering.k
    if k < 2:
        raise ConfigError("Davies-Bouldin needs k >= 2")
    groups = _groups(points, clustering.assignments, k)
    C = clustering.centroids
    spread = np.array([metric.pairwise(g, C[l : l + 1]).mean() for l, g in enumerate(groups)])
    sep = metric.pairwise(C, C)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0):
        raise DegenerateCentroids("two centroids coincide")
    ratio = (spread[:, None] + spread[None, :]) / np.where(off, sep, 1.0)
    ratio[~off] = -np.inf
    return float(ratio.max(axis=1).mean())


def dunn(points, labels, metric: Metric, k: int | None = None) -> float:
    """Smallest between-cluster point distance over largest cluster diameter."""
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    if k < 2:
        raise ConfigError("Dunn index needs k >= 2")
    groups = _groups(points, labels, k)
    gap = np.inf
    for a in range(k):
        for b in range(a + 1, k):
            gap = _block_reduce(groups[a], groups[b], metric, np.minimum, gap)
    diam = 0.0
    for g in groups:
        if len(g) > 1:
            diam = _block_reduce(g, g, metric, np.maximum, diam)
    if diam == 0:
        raise ZeroDiameter("all clusters have zero diameter")
    return float(gap / diam)


def silhouette_points(points, labels, metric: Metric, index=None, k: int | None = None) -> np.ndarray:
    """Silhouette coefficient of the points in ``index`` (all by default).

    The own-cluster mean distance includes the point itself, i.e. it divides
    by the full cluster size. Points alone in their cluster get NaN.
    """
    pts = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    index = np.arange(len(pts)) if index is None else np.asarray(index)
    sizes = np.bincount(labels, minlength=k)
    means = np.empty((len(index), k))
    for s in range(0, len(index), _ROW_CHUNK):
        rows = index[s : s + _ROW_CHUNK]
        D = metric.pairwise(pts[rows], pts)
        for l in range(k):
            means[s : s + len(rows), l] = D[:, labels == l].mean(axis=1) if sizes[l] else np.inf
    own = labels[index]
    a = means[np.arange(len(index)), own]
    means[np.arange(len(index)), own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[sizes[own] < 2] = np.nan
    return s


def silhouette_alpha(points, labels, metric: Metric, alpha: float = 1.0, seed: int = 0, k: int | None = None) -> float:
    """Average over clusters of the mean Silhouette of a sampled subset.

    Each cluster contributes ``max(1, floor(alpha * size))`` of its members,
    chosen uniformly with the given seed. Points in singleton clusters are
    skipped.
    """
    if not 0 < alpha <= 1:
        raise ConfigError("alpha must lie in (0, 1]")
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    if k < 2:
        raise ConfigError("Silhouette needs k >= 2")
    rng = generator(seed)
    chosen = []
    for l in range(k):
        members = np.flatnonzero(labels == l)
        if len(members) == 0:
            continue
        lam = max(1, int(np.floor(alpha * len(members))))
        chosen.append(np.sort(rng.choice(members, size=lam, replace=False)))
    idx = np.concatenate(chosen)
    s = silhouette_points(points, labels, metric, idx, k)
    skipped = int(np.isnan(s).sum())
    if skipped:
        log.info("silhouette: skipped %d point(s) in singleton clusters", skipped)
    per_cluster = [np.nanmean(s[labels[idx] == l]) for l in range(k) if np.any(~np.isnan(s[labels[idx] == l]))]
    return float(np.mean(per_cluster)) if per_cluster else float("nan")
