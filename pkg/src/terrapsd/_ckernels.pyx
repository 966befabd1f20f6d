# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, sqrt

cnp.import_array()


def window_moments(x, y, z, double half):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ya = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] za = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t npts = xa.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] count = np.zeros(npts, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mean = np.zeros(npts)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] std = np.zeros(npts)
    if npts == 0:
        return count, mean, std

    cdef double x0 = xa.min(), y0 = ya.min()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] bx = np.floor((xa - x0) / half).astype(np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] by = np.floor((ya - y0) / half).astype(np.int64)
    cdef Py_ssize_t nbx = bx.max() + 1, nby = by.max() + 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] key = bx * nby + by
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(key, kind="stable").astype(np.int64)
    # start[k]..start[k+1] indexes ``order`` for bucket k
    cdef cnp.ndarray[cnp.int64_t, ndim=1] start = np.searchsorted(
        key[order], np.arange(nbx * nby + 1)).astype(np.int64)

    cdef Py_ssize_t i, j, p, q, kx, ky, ox, oy, cnt
    cdef double s1, s2, xi, yi, zj, mu, var
    with nogil:
        for i in range(npts):
            xi = xa[i]
            yi = ya[i]
            cnt = 0
            s1 = 0.0
            s2 = 0.0
            for ox in range(-1, 2):
                kx = bx[i] + ox
                if kx < 0 or kx >= nbx:
                    continue
                for oy in range(-1, 2):
                    ky = by[i] + oy
                    if ky < 0 or ky >= nby:
                        continue
                    for p in range(start[kx * nby + ky], start[kx * nby + ky + 1]):
                        j = order[p]
                        if j == i:
                            continue
                        if fabs(xa[j] - xi) <= half and fabs(ya[j] - yi) <= half:
                            zj = za[j]
                            cnt += 1
                            s1 += zj
                            s2 += zj * zj
            count[i] = cnt
            if cnt > 0:
                mu = s1 / cnt
                var = s2 / cnt - mu * mu
                mean[i] = mu
                std[i] = sqrt(var) if var > 0.0 else 0.0
    return count, mean, std


def bin_accumulate(row, col, z, Py_ssize_t nrows, Py_ssize_t ncols):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] r = np.ascontiguousarray(row, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] c = np.ascontiguousarray(col, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] za = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sums = np.zeros((nrows, ncols))
    cdef cnp.ndarray[cnp.int64_t, ndim=2] counts = np.zeros((nrows, ncols), dtype=np.int64)
    cdef Py_ssize_t i, n = za.shape[0]
    with nogil:
        for i in range(n):
            sums[r[i], c[i]] += za[i]
            counts[r[i], c[i]] += 1
    return sums, counts


def fill_gaps(grid, valid, Py_ssize_t max_gap):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g = np.array(grid, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] v = np.array(valid, dtype=np.uint8)
    cdef Py_ssize_t nrows = g.shape[0], ncols = g.shape[1]
    cdef Py_ssize_t r, c, last, k
    cdef double za, zb, span
    with nogil:
        for r in range(nrows):
            last = -1
            for c in range(ncols):
                if not v[r, c]:
                    continue
                if last >= 0 and 1 < c - last <= max_gap + 1:
                    za = g[r, last]
                    zb = g[r, c]
                    span = c - last
                    for k in range(last + 1, c):
                        g[r, k] = za + ((k - last) / span) * (zb - za)
                        v[r, k] = 1
                last = c
    return g, v.astype(bool)
