# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_fallback`` function for function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, exp

cnp.import_array()


cdef inline double _pw(double d, double p) noexcept nogil:
    d = fabs(d)
    if p == 1.0:
        return d
    if p == 2.0:
        return d * d
    return pow(d, p)


def pairwise_pow_dist(A, B, double p):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], d = a.shape[1]
    out_arr = np.empty((na, nb))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s
    with nogil:
        for i in range(na):
            for j in range(nb):
                s = 0.0
                for k in range(d):
                    s += _pw(a[i, k] - b[j, k], p)
                out[i, j] = s
    return out_arr


def assign_nearest(X, C, double p):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], kc = c.shape[0], d = x.shape[1]
    labels_arr = np.empty(n, dtype=np.int64)
    best_arr = np.empty(n)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, l, k, arg
    cdef double s, bs
    with nogil:
        for i in range(n):
            bs = 0.0
            arg = -1
            for l in range(kc):
                s = 0.0
                for k in range(d):
                    s += _pw(x[i, k] - c[l, k], p)
                if arg < 0 or s < bs:
                    bs = s
                    arg = l
            labels[i] = arg
            best[i] = bs
    return labels_arr, best_arr


def forward_backward(B, pi, A):
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] p0 = np.ascontiguousarray(pi, dtype=np.float64)
    cdef double[:, ::1] tr = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t T = b.shape[0], k = b.shape[1]
    alpha_arr = np.empty((T, k))
    beta_arr = np.empty((T, k))
    scale_arr = np.empty(T)
    tmp_arr = np.empty(k)
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, ::1] beta = beta_arr
    cdef double[::1] scale = scale_arr
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t t, i, j
    cdef double s, acc
    with nogil:
        s = 0.0
        for j in range(k):
            alpha[0, j] = p0[j] * b[0, j]
            s += alpha[0, j]
        scale[0] = s
        for j in range(k):
            alpha[0, j] /= s
        for t in range(1, T):
            s = 0.0
            for j in range(k):
                acc = 0.0
                for i in range(k):
                    acc += alpha[t - 1, i] * tr[i, j]
                alpha[t, j] = acc * b[t, j]
                s += alpha[t, j]
            scale[t] = s
            for j in range(k):
                alpha[t, j] /= s
        for j in range(k):
            beta[T - 1, j] = 1.0
        for t in range(T - 2, -1, -1):
            for j in range(k):
                tmp[j] = b[t + 1, j] * beta[t + 1, j]
            for i in range(k):
                acc = 0.0
                for j in range(k):
                    acc += tr[i, j] * tmp[j]
                beta[t, i] = acc / scale[t + 1]
    return alpha_arr, beta_arr, scale_arr


def viterbi(logB, log_pi, log_A):
    cdef double[:, ::1] lb = np.ascontiguousarray(logB, dtype=np.float64)
    cdef double[::1] lp = np.ascontiguousarray(log_pi, dtype=np.float64)
    cdef double[:, ::1] la = np.ascontiguousarray(log_A, dtype=np.float64)
    cdef Py_ssize_t T = lb.shape[0], k = lb.shape[1]
    back_arr = np.empty((T, k), dtype=np.int64)
    path_arr = np.empty(T, dtype=np.int64)
    delta_arr = np.empty(k)
    new_arr = np.empty(k)
    cdef cnp.int64_t[:, ::1] back = back_arr
    cdef cnp.int64_t[::1] path = path_arr
    cdef double[::1] delta = delta_arr
    cdef double[::1] nd = new_arr
    cdef Py_ssize_t t, i, j, arg
    cdef double v, bv
    with nogil:
        for j in range(k):
            delta[j] = lp[j] + lb[0, j]
        for t in range(1, T):
            for j in range(k):
                arg = 0
                bv = delta[0] + la[0, j]
                for i in range(1, k):
                    v = delta[i] + la[i, j]
                    if v > bv:
                        bv = v
                        arg = i
                back[t, j] = arg
                nd[j] = bv + lb[t, j]
            for j in range(k):
                delta[j] = nd[j]
        arg = 0
        for j in range(1, k):
            if delta[j] > delta[arg]:
                arg = j
        path[T - 1] = arg
        for t in range(T - 1, 0, -1):
            path[t - 1] = back[t, path[t]]
    return path_arr


cdef double _mean_gram(double[:, :, ::1] X, double[:, :, ::1] Y, Py_ssize_t n, double g) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t sx = X.shape[1], sy = Y.shape[1], d = X.shape[2]
    cdef double acc = 0.0, sq, diff
    for i in range(sx):
        for j in range(sy):
            sq = 0.0
            for k in range(d):
                diff = X[n, i, k] - Y[n, j, k]
                sq += diff * diff
            acc += exp(g * sq)
    return acc / (sx * sy)


def mmd2_pairs(P, Q, double sigma):
    cdef double[:, :, ::1] x = np.ascontiguousarray(P, dtype=np.float64)
    cdef double[:, :, ::1] y = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double g = -0.5 / (sigma * sigma)
    with nogil:
        for i in range(n):
            out[i] = _mean_gram(x, x, i, g) - 2.0 * _mean_gram(x, y, i, g) + _mean_gram(y, y, i, g)
    return out_arr
