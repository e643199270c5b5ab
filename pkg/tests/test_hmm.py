import json
import warnings

import numpy as np
import pytest

from regime_lab import hmm
from regime_lab.errors import TooShort


def sample_hmm(rng, T, means, sds, A, pi):
    states = np.empty(T, dtype=int)
    states[0] = rng.choice(len(pi), p=pi)
    for t in range(1, T):
        states[t] = rng.choice(len(pi), p=A[states[t - 1]])
    return rng.normal(np.asarray(means)[states], np.asarray(sds)[states]), states


def test_k1(rng):
    x = rng.normal(0.1, 2.0, size=200)
    fit = hmm.fit_gaussian_hmm(x, 1)
    assert fit.model.means[0] == pytest.approx(x.mean(), rel=1e-12)
    assert fit.model.variances[0] == pytest.approx(x.var(), rel=1e-12)
    assert fit.model.A.tolist() == [[1.0]]
    assert np.all(hmm.decode(fit.model, x) == 0)


def test_too_short():
    with pytest.raises(TooShort):
        hmm.fit_gaussian_hmm(np.zeros(15), 2)


def test_recovers_two_state(rng):
    A = np.array([[0.99, 0.01], [0.01, 0.99]])
    x, s = sample_hmm(rng, 5000, [-0.01, 0.01], [1e-3, 1e-3], A, [0.5, 0.5])
    fit = hmm.fit_gaussian_hmm(x, 2)
    m = fit.model
    order = np.argsort(m.means)
    assert np.allclose(m.means[order], [-0.01, 0.01], rtol=0.1)
    assert np.all(np.abs(np.diag(m.A) - 0.99) < 0.02)
    labels = hmm.decode(m, x)
    truth = (m.means[labels] > 0).astype(int)
    assert np.mean(truth == s) > 0.95
    assert np.array_equal(labels, hmm.decode(m, x))


def test_loglik_monotone(rng):
    for seed in range(5):
        x = np.random.default_rng(seed).standard_t(3, size=800) * 0.01
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = hmm.fit_gaussian_hmm(x, 3, hmm.HmmFitConfig(max_em_iterations=60))
        tr = np.array(fit.loglik_trace)
        assert np.all(np.diff(tr) >= -1e-8 * np.abs(tr[:-1]).clip(1))


def test_posteriors_normalised(rng):
    x = rng.normal(size=500)
    m = hmm.initial_model(x, 3)
    g, xi, _ = hmm.posteriors(m, x)
    assert np.allclose(g.sum(axis=1), 1, atol=1e-10)
    assert xi.sum() == pytest.approx(len(x) - 1, rel=1e-10)


def test_canonical_order(rng):
    x = np.concatenate([rng.normal(0, 0.1, 1000), rng.normal(0, 1.0, 1000)])
    m = hmm.fit_gaussian_hmm(x, 2).model
    assert m.variances[0] < m.variances[1]
    assert np.allclose(m.pi.sum(), 1) and np.allclose(m.A.sum(axis=1), 1, atol=1e-10)


def test_degenerate_warns():
    x = np.r_[np.zeros(50), np.ones(50)]
    with pytest.warns(hmm.DegenerateEmission):
        hmm.fit_gaussian_hmm(x, 2)


def test_window_majority():
    labels = np.array([0, 0, 1, 1, 1, 0, 1, 0])
    w = np.array([[0, 4], [2, 5], [4, 8]])
    assert hmm.window_majority(labels, w, 2).tolist() == [0, 1, 0]


def test_serialisation(rng):
    m = hmm.fit_gaussian_hmm(rng.normal(size=300), 2).model
    back = hmm.GaussianHmm.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.array_equal(back.A, m.A) and np.array_equal(back.means, m.means)
