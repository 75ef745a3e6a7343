# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the hierarchy objective and tie-aware AUC sweep.

Mirrors ``_kernels_py`` exactly; ``popaware.kernels`` picks one at import.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, isfinite

cnp.import_array()

DEF K = 4


cdef class Objective:
    """Evaluate the MAP objective over a flat parameter vector.

    Arrays are copied to contiguous buffers at construction.
    """

    cdef readonly int n_params
    cdef long[::1] leaf_idx
    cdef double[:, ::1] fw
    cdef long[::1] child
    cdef long[::1] parent
    cdef double[::1] w
    cdef double[::1] centers
    cdef double[::1] work
    cdef readonly double beta, alpha
    cdef readonly bint squared

    def __init__(self, leaf_idx, f, double lam, child, parent, w, centers,
                 double beta, double alpha, bint squared=True):
        self.leaf_idx = np.ascontiguousarray(leaf_idx, dtype=np.int_)
        self.fw = np.ascontiguousarray(np.asarray(f, dtype=np.float64) + lam)
        self.child = np.ascontiguousarray(child, dtype=np.int_)
        self.parent = np.ascontiguousarray(parent, dtype=np.int_)
        self.w = np.ascontiguousarray(w, dtype=np.float64)
        self.centers = np.ascontiguousarray(centers, dtype=np.float64)
        self.n_params = self.centers.shape[0]
        self.work = np.empty(self.n_params, dtype=np.float64)
        self.beta = beta
        self.alpha = alpha
        self.squared = squared

    cdef double _eval(self, double[::1] th) nogil:
        cdef Py_ssize_t i, j, n, c, p
        cdef double total = 0.0, m, s, d, acc
        # data term over leaves
        for i in range(self.leaf_idx.shape[0]):
            n = self.leaf_idx[i] * K
            m = th[n]
            for j in range(1, K):
                if th[n + j] > m:
                    m = th[n + j]
            s = 0.0
            acc = 0.0
            for j in range(K):
                s += exp(th[n + j] - m)
                acc += self.fw[i, j] * th[n + j]
            total += -acc + m + log(s)
        # parent divergence
        if self.beta != 0.0:
            acc = 0.0
            for i in range(self.child.shape[0]):
                c = self.child[i] * K
                p = self.parent[i] * K
                s = 0.0
                for j in range(K):
                    d = th[c + j] - th[p + j]
                    s += d * d
                if not self.squared:
                    s = sqrt(s)
                acc += self.w[i] * s
            total += self.beta * acc
        # anchor to prior centers
        acc = 0.0
        for i in range(self.n_params):
            d = th[i] - self.centers[i]
            acc += d * d
        total += self.alpha * acc
        return total

    def __call__(self, theta):
        cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
        if th.shape[0] != self.n_params:
            raise ValueError("parameter vector has wrong length")
        return self._eval(th)

    def along(self, x, d, double t):
        """Objective at ``x + t * d`` without allocating a new vector."""
        cdef double[::1] xv = x
        cdef double[::1] dv = d
        cdef Py_ssize_t i
        for i in range(self.n_params):
            self.work[i] = xv[i] + t * dv[i]
        return self._eval(self.work)


def auc_sorted(double[::1] scores, unsigned char[::1] is_pos, long n_pos, long n_neg):
    """Mann-Whitney AUC by a single sweep over tie groups in ascending score order."""
    cdef long[::1] order = np.argsort(np.asarray(scores), kind="mergesort").astype(np.int_)
    cdef Py_ssize_t n = order.shape[0], i = 0, k
    cdef double u = 0.0, neg_below = 0.0, p, q, v
    while i < n:
        v = scores[order[i]]
        p = 0.0
        q = 0.0
        k = i
        while k < n and scores[order[k]] == v:
            if is_pos[order[k]]:
                p += 1.0
            else:
                q += 1.0
            k += 1
        u += p * neg_below + 0.5 * p * q
        neg_below += q
        i = k
    return u / (<double>n_pos * <double>n_neg)
