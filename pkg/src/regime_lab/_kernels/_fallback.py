"""Pure numpy implementations of the hot kernels.

Signatures and results match the compiled ``_core`` module; the test-suite
checks the two against each other.
"""
import numpy as np

_CHUNK = 1 << 22  # elements per temporary in the chunked distance loops


def _abs_pow(d, p):
    np.abs(d, out=d)
    if p == 1:
        return d
    if p == 2:
        return np.multiply(d, d, out=d)
    return np.power(d, p, out=d)


def pairwise_pow_dist(A, B, p):
    """``out[i, j] = sum_k |A[i, k] - B[j, k]| ** p``."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    na, nb, d = A.shape[0], B.shape[0], A.shape[1]
    out = np.empty((na, nb))
    step = max(1, _CHUNK // max(1, nb * d))
    for s in range(0, na, step):
        diff = A[s : s + step, None, :] - B[None, :, :]
        out[s : s + step] = _abs_pow(diff, p).sum(axis=2)
    return out


def assign_nearest(X, C, p):
    """Nearest row of ``C`` for each row of ``X``; ties go to the lowest index.

    Returns ``(labels, best)`` where ``best`` is the unscaled power distance.
    """
    D = pairwise_pow_dist(X, C, p)
    labels = np.argmin(D, axis=1)
    return labels.astype(np.int64), D[np.arange(D.shape[0]), labels]


def forward_backward(B, pi, A):
    """Scaled forward-backward pass.

    ``B[t, j]`` are emission likelihoods (any positive per-row rescaling is
    fine). Returns ``(alpha, beta, scale)`` with ``alpha[t]`` summing to one
    and ``log(scale).sum()`` the log-likelihood of the rescaled emissions.
    """
    B = np.ascontiguousarray(B, dtype=np.float64)
    T, k = B.shape
    alpha = np.empty((T, k))
    beta = np.empty((T, k))
    scale = np.empty(T)
    a = pi * B[0]
    scale[0] = a.sum()
    alpha[0] = a / scale[0]
    for t in range(1, T):
        a = (alpha[t - 1] @ A) * B[t]
        scale[t] = a.sum()
        alpha[t] = a / scale[t]
    beta[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (A @ (B[t + 1] * beta[t + 1])) / scale[t + 1]
    return alpha, beta, scale


def viterbi(logB, log_pi, log_A):
    """Most likely state path; ties resolve to the lowest state index."""
    logB = np.ascontiguousarray(logB, dtype=np.float64)
    T, k = logB.shape
    back = np.empty((T, k), dtype=np.int64)
    delta = log_pi + logB[0]
    for t in range(1, T):
        cand = delta[:, None] + log_A
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(k)] + logB[t]
    path = np.empty(T, dtype=np.int64)
    path[T - 1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def mmd2_pairs(P, Q, sigma):
    """Biased squared MMD with a Gaussian kernel for a batch of sample pairs.

    ``P`` is ``(n, s1, d)`` and ``Q`` is ``(n, s2, d)``; entry ``i`` of the
    result is the squared MMD between samples ``P[i]`` and ``Q[i]``. Not
    clamped.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    g = -0.5 / (sigma * sigma)

    def mean_gram(X, Y):
        diff = X[:, :, None, :] - Y[:, None, :, :]
        sq = np.einsum("nijd,nijd->nij", diff, diff)
        return np.exp(g * sq).mean(axis=(1, 2))

    out = np.empty(P.shape[0])
    s_max = max(P.shape[1], Q.shape[1])
    step = max(1, _CHUNK // max(1, s_max * s_max * P.shape[2]))
    for s in range(0, P.shape[0], step):
        X, Y = P[s : s + step], Q[s : s + step]
        out[s : s + step] = mean_gram(X, X) - 2.0 * mean_gram(X, Y) + mean_gram(Y, Y)
    return out
