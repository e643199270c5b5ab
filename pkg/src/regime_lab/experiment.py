"""Config resolution and the simulate / cluster / validate / score / sweep pipeline.

Configs are plain dicts (parsed JSON). ``resolve_*`` fills in defaults and
rejects unknown keys, so the resolved dict is a complete description of a run
and can be echoed into every output.
"""
from __future__ import annotations

import copy
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import hmm as hmm_mod
from . import synthetic as syn
from .accuracy import accuracy_scores, colouring_series, labels_as_memberships, membership_vectors
from .clustering import Clustering, KMeansConfig, Metric, moment_features, mk_means, wk_means
from .errors import ConfigError
from .measures import WindowConfig, mean_variance_projection, read_price_csv, window_matrix
from .validation import (
    DEFAULT_BANDWIDTH,
    MmdSamplingConfig,
    between_cluster_mmd,
    davies_bouldin,
    dunn,
    silhouette_alpha,
    within_cluster_similarity,
)
from .wasserstein import barycenter_atoms

ALGORITHMS = ("wkmeans", "mkmeans", "hmm")
MODELS = {"gbm": (syn.GbmParams, syn.GBM_BULL, syn.GBM_BEAR), "merton": (syn.MertonParams, syn.MERTON_BULL, syn.MERTON_BEAR)}

SYNTHETIC_DEFAULTS = {
    "model": "gbm",
    "T_years": 20,
    "r": 10,
    "length": syn.STEPS_PER_YEAR // 2,
    "length_policy": "fixed",
    "s0": 100.0,
    "bull": None,
    "bear": None,
}
WINDOW_DEFAULTS = {"h1": 35, "h2": 28}
KMEANS_DEFAULTS = {"k": 2, "tolerance": 1e-6, "max_iterations": 300, "restarts": 5, "init": "uniform", "p": 1, "p_moments": 4}
HMM_DEFAULTS = {"k": 2, "max_em_iterations": 200, "tolerance": 1e-6, "variance_floor": 1e-12}
VALIDATION_DEFAULTS = {
    "sigma": DEFAULT_BANDWIDTH,
    "n_pairs_within": 10_000,
    "n_pairs_between": 10_000,
    "ordered": True,
    "representation": "vector",
    "alpha": 1.0,
}


# ------------------------------------------------------------------ config


def _merge(defaults: dict, given: dict | None, where: str) -> dict:
    given = {} if given is None else given
    if not isinstance(given, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


def resolve_synthetic(spec: dict | None) -> dict:
    out = _merge(SYNTHETIC_DEFAULTS, spec, "synthetic")
    if out["model"] not in MODELS:
        raise ConfigError(f"model must be one of {sorted(MODELS)}, got {out['model']!r}")
    cls, bull, bear = MODELS[out["model"]]
    for name, default in (("bull", bull), ("bear", bear)):
        params = _merge(asdict(default), out[name], f"synthetic.{name}")
        cls(**params)  # validates
        out[name] = params
    syn_params(out)
    return out


def syn_params(spec):
    cls = MODELS[spec["model"]][0]
    return cls(**spec["bull"]), cls(**spec["bear"])


def resolve_input(inp: dict | None) -> dict:
    if not isinstance(inp, dict) or len(inp) != 1 or next(iter(inp)) not in ("csv", "synthetic"):
        raise ConfigError("input must be {'csv': path} or {'synthetic': {...}}")
    if "csv" in inp:
        if not isinstance(inp["csv"], str):
            raise ConfigError("input.csv must be a path")
        return {"csv": inp["csv"]}
    return {"synthetic": resolve_synthetic(inp["synthetic"])}


def resolve_window(w) -> dict:
    out = _merge(WINDOW_DEFAULTS, w, "window")
    WindowConfig(out["h1"], out["h2"])
    return out


def resolve_params(algorithm: str, params) -> dict:
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    if algorithm == "hmm":
        out = _merge(HMM_DEFAULTS, params, "params")
        hmm_mod.HmmFitConfig(out["max_em_iterations"], out["tolerance"], 0, out["variance_floor"])
    else:
        out = _merge(KMEANS_DEFAULTS, params, "params")
        _kmeans_cfg(out, 0)
        if out["p"] not in (1, 2):
            raise ConfigError("params.p must be 1 or 2")
        if out["p_moments"] < 1:
            raise ConfigError("params.p_moments must be >= 1")
    return out


def resolve_validation(v) -> dict:
    out = _merge(VALIDATION_DEFAULTS, v, "validation")
    if not out["sigma"] > 0:
        raise ConfigError("validation.sigma must be > 0")
    for key in ("n_pairs_within", "n_pairs_between"):
        MmdSamplingConfig(out[key], 0, out["ordered"], out["representation"])
    if not 0 < out["alpha"] <= 1:
        raise ConfigError("validation.alpha must lie in (0, 1]")
    return out


def resolve_seed(config: dict, override) -> int:
    return _check_seed(override if override is not None else config.get("seed", 0))


def resolve_simulate(config: dict, seed=None) -> dict:
    known = set(SYNTHETIC_DEFAULTS) | {"seed"}
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in config: {sorted(unknown)}")
    spec = resolve_synthetic({k: v for k, v in config.items() if k != "seed"})
    spec["seed"] = resolve_seed(config, seed)
    return spec


def resolve_cluster(config: dict, seed=None) -> dict:
    _no_unknown(config, {"input", "window", "algorithm", "params", "seed"})
    algorithm = config.get("algorithm", "wkmeans")
    return {
        "input": resolve_input(config.get("input")),
        "window": resolve_window(config.get("window")),
        "algorithm": algorithm,
        "params": resolve_params(algorithm, config.get("params")),
        "seed": resolve_seed(config, seed),
    }


def resolve_sweep(config: dict, seed=None) -> dict:
    _no_unknown(config, {"synthetic", "h1", "h2", "algorithms", "params", "runs", "seed"})
    h1s = config.get("h1", [7 + 7 * i for i in range(1, 11)])
    if not isinstance(h1s, list) or not h1s:
        raise ConfigError("h1 must be a non-empty list")
    h2 = config.get("h2", "floor(3*h1/4)")
    windows = []
    for h in h1s:
        h2v = (3 * h) // 4 if h2 == "floor(3*h1/4)" else h2
        windows.append(resolve_window({"h1": h, "h2": h2v}))
    algorithms = config.get("algorithms", ["wkmeans"])
    if not isinstance(algorithms, list) or not algorithms:
        raise ConfigError("algorithms must be a non-empty list")
    params = config.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be an object keyed by algorithm")
    runs = config.get("runs", 5)
    if isinstance(runs, bool) or not isinstance(runs, int) or runs < 1:
        raise ConfigError("runs must be a positive integer")
    return {
        "synthetic": resolve_synthetic(config.get("synthetic")),
        "h1": [w["h1"] for w in windows],
        "h2": h2,
        "algorithms": algorithms,
        "params": {a: resolve_params(a, params.get(a)) for a in algorithms},
        "runs": runs,
        "seed": resolve_seed(config, seed),
    }


def _no_unknown(config, known):
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in config: {sorted(unknown)}")


def _kmeans_cfg(params: dict, seed: int) -> KMeansConfig:
    return KMeansConfig(
        k=params["k"],
        tolerance=params["tolerance"],
        max_iterations=params["max_iterations"],
        seed=seed,
        init=params["init"],
        restarts=params["restarts"],
    )


def run_seed(base: int, run: int) -> int:
    return (base + run) % 2**64


# --------------------------------------------------------------- pipeline


def simulate(spec: dict, seed: int) -> syn.PathRecord:
    bull, bear = syn_params(spec)
    schedule = syn.build_schedule(spec["T_years"], spec["r"], spec["length"], spec["length_policy"], seed)
    sim = syn.simulate_gbm if spec["model"] == "gbm" else syn.simulate_merton
    return sim(schedule, bull, bear, s0=spec["s0"], seed=seed)


def load_input(inp: dict, seed: int):
    """``(PriceStream, PathRecord or None)`` for a resolved input block."""
    if "csv" in inp:
        try:
            return read_price_csv(inp["csv"]), None
        except OSError as exc:
            raise ConfigError(f"cannot read {inp['csv']}: {exc}") from exc
    path = simulate(inp["synthetic"], seed)
    return path.prices, path


def cluster_atoms(atoms, windows, returns, algorithm: str, params: dict, seed: int) -> Clustering:
    """Cluster window measures. HMM labels are mapped to windows by majority
    vote and given W_1 barycenters as centroids so they can be validated like
    the k-means results."""
    if algorithm == "wkmeans":
        return wk_means(atoms, _kmeans_cfg(params, seed), p=params["p"])
    if algorithm == "mkmeans":
        return mk_means(atoms, _kmeans_cfg(params, seed), p_moments=params["p_moments"])
    cfg = hmm_mod.HmmFitConfig(params["max_em_iterations"], params["tolerance"], seed, params["variance_floor"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", hmm_mod.DegenerateEmission)
        fit = hmm_mod.fit_gaussian_hmm(returns, params["k"], cfg)
    k = params["k"]
    per_return = hmm_mod.decode(fit.model, returns)
    labels = hmm_mod.window_majority(per_return, windows, k)
    centroids = np.vstack(
        [barycenter_atoms(atoms[labels == l], 1) if np.any(labels == l) else np.full(atoms.shape[1], np.nan) for l in range(k)]
    )
    return Clustering(
        assignments=labels,
        centroids=centroids,
        loss_trace=[],
        variation_trace=[],
        iterations=fit.iterations,
        converged=fit.converged,
        metric="wasserstein",
        p=1.0,
        algorithm="hmm",
        config=asdict(cfg),
        extras={
            "model": fit.model.to_dict(),
            "loglik_trace": fit.loglik_trace,
            "per_return_labels": per_return.tolist(),
            "degenerate_warnings": len(caught),
        },
    )


def run_cluster(cfg: dict):
    """Everything ``cmd_cluster`` needs: ``(stream, path, windows, atoms, clustering)``."""
    stream, path = load_input(cfg["input"], cfg["seed"])
    returns = np.diff(np.log(stream.prices))
    windows, atoms = window_matrix(returns, WindowConfig(cfg["window"]["h1"], cfg["window"]["h2"]))
    c = cluster_atoms(atoms, windows, returns, cfg["algorithm"], cfg["params"], cfg["seed"])
    return stream, path, windows, atoms, c


def scatter_rows(windows, atoms, clustering: Clustering):
    sd, mean = mean_variance_projection(atoms)
    return [
        [int(w[0]), int(w[1]), float(s), float(m), int(l)]
        for w, s, m, l in zip(windows, sd, mean, clustering.assignments)
    ]


def colouring(windows, clustering: Clustering, n_returns: int) -> np.ndarray:
    return colouring_series(membership_vectors(windows, clustering.assignments, n_returns, clustering.k))


def score(clustering: Clustering, windows, n_returns: int, schedule) -> dict:
    """Accuracy reports: per-window memberships, and per-return labels for HMM."""
    Y = membership_vectors(windows, clustering.assignments, n_returns, clustering.k)
    out = {"windows": accuracy_scores(Y, schedule).to_dict()}
    if clustering.algorithm == "hmm":
        per_return = np.asarray(clustering.extras["per_return_labels"])
        out["per_return"] = accuracy_scores(labels_as_memberships(per_return, clustering.k), schedule).to_dict()
    return out


def headline(scores: dict) -> dict:
    """The report a method is judged by: per-return for HMM, windows otherwise."""
    return scores.get("per_return", scores["windows"])


def points_for(clustering: Clustering, atoms):
    if clustering.algorithm == "mkmeans":
        return moment_features(atoms, clustering.extras["p_moments"])[0]
    return atoms


def validate(clustering: Clustering, atoms, vcfg: dict, seed: int) -> dict:
    """Indexes and MMD scores; histograms are returned under ``"histograms"``."""
    k = clustering.k
    labels = clustering.assignments
    groups = [atoms[labels == l] for l in range(k)]
    metric: Metric = clustering.metric_obj()
    pts = points_for(clustering, atoms)
    out = {"indexes": {}, "within": {}, "between": {}, "histograms": {}}
    if k >= 2 and all(len(g) for g in groups):
        out["indexes"] = {
            "davies_bouldin": davies_bouldin(pts, clustering, metric),
            "dunn": dunn(pts, labels, metric, k),
            "silhouette": silhouette_alpha(pts, labels, metric, vcfg["alpha"], seed, k),
        }
    for l, g in enumerate(groups):
        if len(g) < 2:
            out["within"][str(l)] = None
            continue
        mcfg = MmdSamplingConfig(vcfg["n_pairs_within"], seed, vcfg["ordered"], vcfg["representation"])
        s, vals = within_cluster_similarity(g, mcfg, vcfg["sigma"])
        out["within"][str(l)] = s
        out["histograms"][f"within_{l}"] = vals
    for a in range(k):
        for b in range(a + 1, k):
            if len(groups[a]) and len(groups[b]):
                mcfg = MmdSamplingConfig(vcfg["n_pairs_between"], seed, vcfg["ordered"], vcfg["representation"])
                s, vals = between_cluster_mmd(groups[a], groups[b], mcfg, vcfg["sigma"])
                out["between"][f"{a}-{b}"] = s
                out["histograms"][f"between_{a}-{b}"] = vals
    return out


# ------------------------------------------------------------------ sweep


def thread_cap() -> int:
    """Worker count: ``REGIME_LAB_THREADS`` if set, else the CPU count."""
    raw = os.environ.get("REGIME_LAB_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"REGIME_LAB_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("REGIME_LAB_THREADS must be >= 1")
    return n


def sweep_task(args):
    """One (run, h1) cell of a sweep: simulate once, score every algorithm."""
    spec, window, algorithms, params, seed = args
    path = simulate(spec, seed)
    returns = path.returns
    windows, atoms = window_matrix(returns, WindowConfig(window["h1"], window["h2"]))
    row = {}
    for a in algorithms:
        c = cluster_atoms(atoms, windows, returns, a, params[a], seed)
        row[a] = headline(score(c, windows, returns.size, path.schedule))
    return row


def mean_ci(values) -> tuple[float, float]:
    """Mean and half-width of a normal-approximation 95% interval."""
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))


def run_sweep(cfg: dict, workers: int | None = None):
    """Rows of ``(h1, h2, algorithm, TA, TA_ci, RONS, RONS_ci, ROFS, ROFS_ci)``
    plus the raw per-run reports. Run ``j`` uses seed ``seed + j`` for every
    window length, so each h1 sees the same paths."""
    workers = thread_cap() if workers is None else workers
    tasks, keys = [], []
    for h1 in cfg["h1"]:
        h2 = (3 * h1) // 4 if cfg["h2"] == "floor(3*h1/4)" else cfg["h2"]
        for j in range(cfg["runs"]):
            tasks.append((cfg["synthetic"], {"h1": h1, "h2": h2}, cfg["algorithms"], cfg["params"], run_seed(cfg["seed"], j)))
            keys.append((h1, h2, j))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
            results = list(ex.map(sweep_task, tasks))
    else:
        results = [sweep_task(t) for t in tasks]
    rows, raw = [], []
    for h1 in cfg["h1"]:
        cell = [(k, r) for k, r in zip(keys, results) if k[0] == h1]
        h2 = cell[0][0][1]
        for a in cfg["algorithms"]:
            row = [h1, h2, a]
            for name in ("TA", "RONS", "ROFS"):
                row.extend(mean_ci([r[a][name] for _, r in cell]))
            rows.append(row)
        raw.extend({"h1": k[0], "h2": k[1], "run": k[2], **r} for k, r in cell)
    return rows, raw
