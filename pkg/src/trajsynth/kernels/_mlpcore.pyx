# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled network kernels: fused forward/backward passes over row-major
float64 buffers.  Same surface and arithmetic as kernels.pure; summation
order may differ in the last few ulps.
"""
from libc.math cimport exp, log

import numpy as np


cdef void _affine(const double[:, ::1] A, const double[:, ::1] W,
                  const double[::1] b, double[:, ::1] out, bint relu) noexcept:
    # Unit-stride inner loops over j so the compiler can vectorize; the
    # row of W and the row of out are both contiguous.
    cdef Py_ssize_t n = A.shape[0], k = A.shape[1], m = W.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double a
    for i in range(n):
        for j in range(m):
            out[i, j] = b[j]
        for t in range(k):
            a = A[i, t]
            if a != 0.0:
                for j in range(m):
                    out[i, j] += a * W[t, j]
        if relu:
            for j in range(m):
                if out[i, j] < 0.0:
                    out[i, j] = 0.0


cdef void _grad_w(const double[:, ::1] A, const double[:, ::1] dY,
                  double[:, ::1] dW) noexcept:
    # dW = A.T @ dY, accumulated sample by sample with contiguous rows.
    # Rectified activations are mostly zeros, so skipping them pays.
    cdef Py_ssize_t n = A.shape[0], k = A.shape[1], m = dY.shape[1]
    cdef Py_ssize_t i, j, t
    cdef double a
    for t in range(k):
        for j in range(m):
            dW[t, j] = 0.0
    for i in range(n):
        for t in range(k):
            a = A[i, t]
            if a != 0.0:
                for j in range(m):
                    dW[t, j] += a * dY[i, j]


cdef void _grad_b(const double[:, ::1] dY, double[::1] db) noexcept:
    cdef Py_ssize_t n = dY.shape[0], m = dY.shape[1]
    cdef Py_ssize_t i, j
    for j in range(m):
        db[j] = 0.0
    for i in range(n):
        for j in range(m):
            db[j] += dY[i, j]


cdef void _grad_a(const double[:, ::1] dY, const double[:, ::1] W,
                  const double[:, ::1] H, double[:, ::1] dA) noexcept:
    # dA = (dY @ W.T) masked by the rectifier's active set in H
    cdef Py_ssize_t n = dY.shape[0], m = dY.shape[1], k = W.shape[0]
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(n):
        for t in range(k):
            if H[i, t] > 0.0:
                acc = 0.0
                for j in range(m):
                    acc += dY[i, j] * W[t, j]
                dA[i, t] = acc
            else:
                dA[i, t] = 0.0


cdef list _as_views(list arrays):
    return [np.ascontiguousarray(a, dtype=np.float64) for a in arrays]


cdef list _forward_acts(list Ws, list bs, object X):
    cdef list acts = [np.ascontiguousarray(X, dtype=np.float64)]
    cdef Py_ssize_t L = len(Ws), l
    cdef object prev, out
    for l in range(L):
        prev = acts[len(acts) - 1]
        out = np.empty((prev.shape[0], Ws[l].shape[1]), dtype=np.float64)
        _affine(prev, Ws[l], bs[l], out, l < L - 1)
        acts.append(out)
    return acts


cdef tuple _backprop(list Ws, list acts, object dY):
    cdef Py_ssize_t L = len(Ws), l
    cdef list dWs = [None] * L
    cdef list dbs = [None] * L
    cdef object dW, db, dA
    for l in range(L - 1, -1, -1):
        dW = np.empty((Ws[l].shape[0], Ws[l].shape[1]), dtype=np.float64)
        db = np.empty(Ws[l].shape[1], dtype=np.float64)
        _grad_w(acts[l], dY, dW)
        _grad_b(dY, db)
        dWs[l] = dW
        dbs[l] = db
        if l > 0:
            dA = np.empty((acts[l].shape[0], acts[l].shape[1]), dtype=np.float64)
            _grad_a(dY, Ws[l], acts[l], dA)
            dY = dA
    return dWs, dbs


def forward(list Ws, list bs, object X):
    cdef list W2 = _as_views(Ws)
    cdef list b2 = _as_views(bs)
    cdef list acts = _forward_acts(W2, b2, X)
    return acts[len(acts) - 1]


def qsel_loss_grad(list Ws, list bs, object X, object actions, object targets):
    cdef list W2 = _as_views(Ws)
    cdef list b2 = _as_views(bs)
    cdef list acts = _forward_acts(W2, b2, X)
    cdef double[:, ::1] Y = acts[len(acts) - 1]
    cdef Py_ssize_t[::1] act_ids = np.ascontiguousarray(actions, dtype=np.intp)
    cdef double[::1] tgt = np.ascontiguousarray(targets, dtype=np.float64)
    cdef Py_ssize_t n = Y.shape[0], m = Y.shape[1], i
    cdef object dY_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] dY = dY_arr
    cdef double diff, loss = 0.0
    for i in range(n):
        diff = Y[i, act_ids[i]] - tgt[i]
        loss += diff * diff
        dY[i, act_ids[i]] = 2.0 * diff / n
    loss /= n
    dWs, dbs = _backprop(W2, acts, dY_arr)
    return loss, dWs, dbs


def ce_loss_grad(list Ws, list bs, object X, object labels):
    cdef list W2 = _as_views(Ws)
    cdef list b2 = _as_views(bs)
    cdef list acts = _forward_acts(W2, b2, X)
    cdef double[:, ::1] Y = acts[len(acts) - 1]
    cdef Py_ssize_t[::1] lab = np.ascontiguousarray(labels, dtype=np.intp)
    cdef Py_ssize_t n = Y.shape[0], m = Y.shape[1], i, j
    cdef object dY_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] dY = dY_arr
    cdef double mx, s, loss = 0.0
    for i in range(n):
        mx = Y[i, 0]
        for j in range(1, m):
            if Y[i, j] > mx:
                mx = Y[i, j]
        s = 0.0
        for j in range(m):
            dY[i, j] = exp(Y[i, j] - mx)
            s += dY[i, j]
        loss += log(s) - (Y[i, lab[i]] - mx)
        for j in range(m):
            dY[i, j] /= s
        dY[i, lab[i]] -= 1.0
        for j in range(m):
            dY[i, j] /= n
    loss /= n
    dWs, dbs = _backprop(W2, acts, dY_arr)
    return loss, dWs, dbs
