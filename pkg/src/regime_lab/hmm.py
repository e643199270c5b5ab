"""Gaussian hidden Markov model baseline.

Baum-Welch fitting with a scaled forward-backward pass and Viterbi decoding.
States are reordered after fitting so that state 0 has the smallest emission
variance, matching the label convention used for clusterings.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DegenerateEmission, TooShort

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GaussianHmm:
    pi: np.ndarray
    A: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.means = np.asarray(self.means, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        k = self.pi.size
        if self.A.shape != (k, k) or self.means.size != k or self.variances.size != k:
            raise ConfigError("inconsistent HMM parameter shapes")
        if abs(self.pi.sum() - 1) > 1e-10 or np.any(np.abs(self.A.sum(axis=1) - 1) > 1e-10):
            raise ConfigError("pi and the rows of A must sum to 1")
        if np.any(self.variances <= 0):
            raise ConfigError("emission variances must be > 0")

    @property
    def k(self) -> int:
        return self.pi.size

    def log_emissions(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)[:, None]
        return -0.5 * (_LOG_2PI + np.log(self.variances) + (x - self.means) ** 2 / self.variances)

    def permuted(self, order) -> "GaussianHmm":
        order = np.asarray(order)
        return GaussianHmm(self.pi[order], self.A[np.ix_(order, order)], self.means[order], self.variances[order])

    def to_dict(self) -> dict:
        return {
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "GaussianHmm":
        return cls(d["pi"], d["A"], d["means"], d["variances"])


@dataclass
class HmmFitConfig:
    max_em_iterations: int = 200
    tolerance: float = 1e-6
    seed: int = 0  # initialisation is deterministic; kept for config echo
    variance_floor: float = 1e-12

    def __post_init__(self):
        if self.max_em_iterations < 1 or not self.tolerance > 0 or not self.variance_floor > 0:
            raise ConfigError("HMM iteration count, tolerance and variance floor must be positive")


@dataclass
class HmmFit:
    model: GaussianHmm
    loglik_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def initial_model(x, k: int, floor: float = 1e-12) -> GaussianHmm:
    """Split returns into ``k`` groups by absolute size and use their moments."""
    x = np.asarray(x, dtype=float)
    groups = np.array_split(x[np.argsort(np.abs(x), kind="stable")], k)
    means = np.array([g.mean() for g in groups])
    variances = np.maximum([g.var() for g in groups], floor)
    A = np.full((k, k), 0.1 / (k - 1)) if k > 1 else np.ones((1, 1))
    if k > 1:
        np.fill_diagonal(A, 0.9)
    return GaussianHmm(np.full(k, 1.0 / k), A, means, variances)


def posteriors(model: GaussianHmm, x):
    """E-step quantities: ``(gamma, xi_sum, loglik)``.

    ``gamma[t]`` is the state posterior at time t and ``xi_sum`` the expected
    transition counts.
    """
    logB = model.log_emissions(x)
    shift = logB.max(axis=1, keepdims=True)
    B = np.exp(logB - shift)
    alpha, beta, scale = _kernels.forward_backward(B, model.pi, model.A)
    loglik = float(np.log(scale).sum() + shift.sum())
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    xi_sum = model.A * (alpha[:-1].T @ (B[1:] * beta[1:] / scale[1:, None]))
    return gamma, xi_sum, loglik


def _m_step(x, gamma, xi_sum, floor):
    mass = gamma.sum(axis=0)
    pi = gamma[0] / gamma[0].sum()
    A = xi_sum / xi_sum.sum(axis=1, keepdims=True)
    safe = np.where(mass > 0, mass, 1.0)
    means = gamma.T @ x / safe
    variances = (gamma * (x[:, None] - means) ** 2).sum(axis=0) / safe
    bad = (mass <= 0) | (variances < floor)
    if bad.any():
        warnings.warn(f"emission variance of state(s) {np.flatnonzero(bad).tolist()} floored", DegenerateEmission)
        variances = np.maximum(variances, floor)
    return GaussianHmm(pi, A, means, variances)


def fit_gaussian_hmm(returns, k: int = 2, cfg: HmmFitConfig | None = None) -> HmmFit:
    cfg = cfg or HmmFitConfig()
    x = np.asarray(returns, dtype=float)
    if k < 1:
        raise ConfigError("k must be >= 1")
    if x.size < 10 * k:
        raise TooShort(f"need at least {10 * k} returns for k={k}, got {x.size}")
    model = initial_model(x, k, cfg.variance_floor)
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_em_iterations + 1):
        gamma, xi_sum, ll = posteriors(model, x)
        if trace and ll - trace[-1] < cfg.tolerance:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)
        model = _m_step(x, gamma, xi_sum, cfg.variance_floor)
    order = np.argsort(model.variances, kind="stable")
    return HmmFit(model.permuted(order), trace, it, converged)


def decode(model: GaussianHmm, returns) -> np.ndarray:
    """Viterbi state path, one label per return."""
    with np.errstate(divide="ignore"):
        return _kernels.viterbi(model.log_emissions(returns), np.log(model.pi), np.log(model.A))


def window_majority(labels, windows, k: int) -> np.ndarray:
    """Label each ``[start, stop)`` window by its most frequent per-return label.

    Ties go to the lower label.
    """
    labels = np.asarray(labels, dtype=np.int64)
    windows = np.asarray(windows, dtype=np.int64)
    csum = np.vstack([np.zeros((1, k), dtype=np.int64), np.cumsum(np.eye(k, dtype=np.int64)[labels], axis=0)])
    counts = csum[windows[:, 1]] - csum[windows[:, 0]]
    return np.argmax(counts, axis=1)
