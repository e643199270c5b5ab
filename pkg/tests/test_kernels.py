"""The compiled and numpy kernels must agree."""
import numpy as np
import pytest

from regime_lab import _kernels
from regime_lab._kernels import _fallback

core = pytest.importorskip("regime_lab._kernels._core")


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("p", [1, 2, 1.5])
def test_pairwise(rng, p):
    A, B = rng.normal(size=(37, 9)), rng.normal(size=(11, 9))
    assert np.allclose(core.pairwise_pow_dist(A, B, p), _fallback.pairwise_pow_dist(A, B, p), rtol=1e-12)


def test_assign(rng):
    X, C = rng.normal(size=(100, 5)), rng.normal(size=(4, 5))
    C[3] = C[1]  # duplicate centroid, tie must go to index 1
    l1, c1 = core.assign_nearest(X, C, 2)
    l2, c2 = _fallback.assign_nearest(X, C, 2)
    assert np.array_equal(l1, l2) and np.allclose(c1, c2)
    assert not np.any(l1 == 3)


def test_forward_backward(rng):
    T, k = 300, 3
    B = rng.uniform(0.1, 1, size=(T, k))
    pi = np.array([0.2, 0.3, 0.5])
    A = rng.dirichlet(np.ones(k), size=k)
    for x, y in zip(core.forward_backward(B, pi, A), _fallback.forward_backward(B, pi, A)):
        assert np.allclose(x, y, rtol=1e-12)


def test_forward_backward_brute_force(rng):
    """Likelihood equals the sum over all state paths."""
    import itertools

    T, k = 5, 2
    B = rng.uniform(0.1, 1, size=(T, k))
    pi = np.array([0.4, 0.6])
    A = np.array([[0.7, 0.3], [0.2, 0.8]])
    total = 0.0
    for path in itertools.product(range(k), repeat=T):
        pr = pi[path[0]] * B[0, path[0]]
        for t in range(1, T):
            pr *= A[path[t - 1], path[t]] * B[t, path[t]]
        total += pr
    for impl in (core, _fallback):
        _, _, scale = impl.forward_backward(B, pi, A)
        assert np.log(scale).sum() == pytest.approx(np.log(total), rel=1e-12)


def test_viterbi(rng):
    logB = np.log(rng.uniform(0.01, 1, size=(200, 3)))
    lp = np.log(np.array([0.2, 0.3, 0.5]))
    lA = np.log(rng.dirichlet(np.ones(3), size=3))
    assert np.array_equal(core.viterbi(logB, lp, lA), _fallback.viterbi(logB, lp, lA))


def test_viterbi_brute_force(rng):
    import itertools

    T, k = 6, 2
    logB = np.log(rng.uniform(0.01, 1, size=(T, k)))
    lp = np.log([0.5, 0.5])
    lA = np.log([[0.9, 0.1], [0.3, 0.7]])
    score = lambda s: lp[s[0]] + logB[0, s[0]] + sum(lA[s[t - 1], s[t]] + logB[t, s[t]] for t in range(1, T))
    best = max(itertools.product(range(k), repeat=T), key=score)
    for impl in (core, _fallback):
        assert tuple(impl.viterbi(logB, lp, lA)) == best


@pytest.mark.parametrize("shape", [((20, 1, 7), (20, 1, 7)), ((15, 6, 1), (15, 4, 1))])
def test_mmd(rng, shape):
    P, Q = rng.normal(scale=0.1, size=shape[0]), rng.normal(scale=0.1, size=shape[1])
    a = core.mmd2_pairs(P, Q, 0.1)
    b = _fallback.mmd2_pairs(P, Q, 0.1)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-14)


def test_mmd_direct_oracle(rng):
    x, y = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    k = lambda a, b: np.exp(-np.sum((a - b) ** 2) / (2 * 0.5**2))
    ref = (
        np.mean([[k(a, b) for b in x] for a in x])
        - 2 * np.mean([[k(a, b) for b in y] for a in x])
        + np.mean([[k(a, b) for b in y] for a in y])
    )
    for impl in (core, _fallback):
        assert impl.mmd2_pairs(x[None], y[None], 0.5)[0] == pytest.approx(ref, rel=1e-12)


def test_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, REGIME_LAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import regime_lab; print(regime_lab.BACKEND)"], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
