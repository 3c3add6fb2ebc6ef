# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot paths: kernel-power reductions, pairwise sums, greedy packing.

Mirrors ``bergmanlab._fastpath.reference`` exactly, including the
fold-halving summation tree, so either backend can serve the same
contracts; see the benchmark script for the measured speedups.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, log, sin, sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

ctypedef double complex cplx


cdef inline Py_ssize_t _pow2_at_least(Py_ssize_t n) nogil:
    cdef Py_ssize_t full = 1
    while full < n:
        full <<= 1
    return full


cdef cplx _fold_tree_c(cplx* buf, Py_ssize_t full) nogil:
    cdef Py_ssize_t m = full >> 1
    cdef Py_ssize_t i
    while m >= 1:
        for i in range(m):
            buf[i] = buf[i] + buf[i + m]
        m >>= 1
    return buf[0]


cdef double _fold_tree_d(double* buf, Py_ssize_t full) nogil:
    cdef Py_ssize_t m = full >> 1
    cdef Py_ssize_t i
    while m >= 1:
        for i in range(m):
            buf[i] = buf[i] + buf[i + m]
        m >>= 1
    return buf[0]


def pairwise_sum(values):
    """Deterministic pairwise sum (zero-padded fold-halving tree)."""
    arr = np.ascontiguousarray(values).ravel()
    cdef Py_ssize_t n = arr.shape[0]
    if n == 0:
        return arr.dtype.type(0)
    cdef Py_ssize_t full = _pow2_at_least(n)
    cdef Py_ssize_t i
    cdef cplx[::1] cdata
    cdef double[::1] ddata
    cdef cplx* cbuf
    cdef double* dbuf
    cdef cplx cres
    cdef double dres
    if np.iscomplexobj(arr):
        cdata = np.ascontiguousarray(arr, dtype=np.complex128)
        cbuf = <cplx*> malloc(full * sizeof(cplx))
        if cbuf == NULL:
            raise MemoryError()
        for i in range(n):
            cbuf[i] = cdata[i]
        for i in range(n, full):
            cbuf[i] = 0
        cres = _fold_tree_c(cbuf, full)
        free(cbuf)
        return complex(cres)
    ddata = np.ascontiguousarray(arr, dtype=np.float64)
    dbuf = <double*> malloc(full * sizeof(double))
    if dbuf == NULL:
        raise MemoryError()
    for i in range(n):
        dbuf[i] = ddata[i]
    for i in range(n, full):
        dbuf[i] = 0.0
    dres = _fold_tree_d(dbuf, full)
    free(dbuf)
    return float(dres)


def kernel_weighted_sums(nodes, weights, zs, double c, bint use_abs,
                         Py_ssize_t chunk=512):
    """out[k] = tree-sum_i weights[i] * (1 - zs[k] conj(nodes[i]))**(-c)."""
    cdef cplx[::1] nd = np.ascontiguousarray(nodes, dtype=np.complex128)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cplx[::1] zv = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef Py_ssize_t n = nd.shape[0]
    cdef Py_ssize_t nz = zv.shape[0]
    if wt.shape[0] != n:
        raise ValueError("weights must match nodes")
    out = np.empty(nz, dtype=np.complex128)
    cdef cplx[::1] ov = out
    cdef Py_ssize_t full = _pow2_at_least(max(n, 1))
    cdef cplx* buf = <cplx*> malloc(full * sizeof(cplx))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t k, i
    cdef cplx z, base
    cdef double br, bi, mod2, ang, mag
    cdef double zr, zi, nr, ni
    with nogil:
        for k in range(nz):
            z = zv[k]
            zr = z.real
            zi = z.imag
            for i in range(n):
                nr = nd[i].real
                ni = nd[i].imag
                # base = 1 - z * conj(node)
                br = 1.0 - (zr * nr + zi * ni)
                bi = -(zi * nr - zr * ni)
                mod2 = br * br + bi * bi
                if use_abs:
                    mag = wt[i] * exp(-0.5 * c * log(mod2))
                    buf[i].real = mag
                    buf[i].imag = 0.0
                else:
                    # (br + i bi)^(-c) = exp(-c log mod) * cis(-c arg)
                    mag = wt[i] * exp(-0.5 * c * log(mod2))
                    ang = -c * atan2(bi, br)
                    buf[i].real = mag * cos(ang)
                    buf[i].imag = mag * sin(ang)
            for i in range(n, full):
                buf[i] = 0
            ov[k] = _fold_tree_c(buf, full)
    free(buf)
    return out


def pseudo_distances(center, points):
    """|a - z| / |1 - conj(a) z| on the disk, vectorized over z."""
    cdef cplx a = center
    cdef cplx[::1] pv = np.ascontiguousarray(points, dtype=np.complex128)
    cdef Py_ssize_t n = pv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double ar = a.real, ai = a.imag
    cdef double zr, zi, dr, di, er, ei
    with nogil:
        for i in range(n):
            zr = pv[i].real
            zi = pv[i].imag
            dr = ar - zr
            di = ai - zi
            er = 1.0 - (ar * zr + ai * zi)
            ei = -(ar * zi - ai * zr)
            ov[i] = sqrt((dr * dr + di * di) / (er * er + ei * ei))
    return out


def greedy_farthest(candidates, double rho):
    """Farthest-point thinning; see the reference backend for the contract."""
    cdef cplx[::1] cv = np.ascontiguousarray(candidates, dtype=np.complex128)
    cdef Py_ssize_t n = cv.shape[0]
    mind_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mind = mind_arr
    chosen_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] chosen = chosen_arr
    cdef Py_ssize_t count = 0, i, best
    cdef double ar, ai, zr, zi, dr, di, er, ei, d, bestval
    cdef cplx a
    a = cv[0]
    chosen[0] = 0
    count = 1
    ar = a.real
    ai = a.imag
    with nogil:
        for i in range(n):
            zr = cv[i].real
            zi = cv[i].imag
            dr = ar - zr
            di = ai - zi
            er = 1.0 - (ar * zr + ai * zi)
            ei = -(ar * zi - ai * zr)
            mind[i] = sqrt((dr * dr + di * di) / (er * er + ei * ei))
        while True:
            best = 0
            bestval = mind[0]
            for i in range(1, n):
                if mind[i] > bestval:
                    bestval = mind[i]
                    best = i
            if bestval < rho:
                break
            chosen[count] = best
            count += 1
            ar = cv[best].real
            ai = cv[best].imag
            for i in range(n):
                zr = cv[i].real
                zi = cv[i].imag
                dr = ar - zr
                di = ai - zi
                er = 1.0 - (ar * zr + ai * zi)
                ei = -(ar * zi - ai * zr)
                d = sqrt((dr * dr + di * di) / (er * er + ei * ei))
                if d < mind[i]:
                    mind[i] = d
    return chosen_arr[:count].copy()
