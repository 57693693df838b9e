# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``qrsr._pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef int EXP[512]
cdef int LOG[256]


cdef void _init_tables():
    cdef int i, x = 1
    for i in range(255):
        EXP[i] = x
        LOG[x] = i
        x <<= 1
        if x & 0x100:
            x ^= 0x11D
    for i in range(255, 512):
        EXP[i] = EXP[i - 255]
    LOG[0] = 0


_init_tables()


def rs_remainder(const unsigned char[::1] data, const unsigned char[::1] generator):
    cdef Py_ssize_t nsym = generator.shape[0] - 1
    cdef Py_ssize_t i, j
    cdef int factor, lf
    cdef unsigned char[::1] rem = np.zeros(nsym + 1, dtype=np.uint8)
    for i in range(data.shape[0]):
        factor = data[i] ^ rem[0]
        for j in range(nsym - 1):
            rem[j] = rem[j + 1]
        rem[nsym - 1] = 0
        if factor:
            lf = LOG[factor]
            for j in range(nsym):
                if generator[j + 1]:
                    rem[j] ^= EXP[lf + LOG[generator[j + 1]]]
    return bytes(rem[:nsym])


def rs_syndromes(const unsigned char[::1] block, int nsym):
    cdef Py_ssize_t i
    cdef int j, acc
    out = []
    for j in range(nsym):
        acc = 0
        for i in range(block.shape[0]):
            if acc:
                acc = EXP[LOG[acc] + j]
            acc ^= block[i]
        out.append(acc)
    return out


def module_stats(const double[:, ::1] gray, cells, const double[:, ::1] weights,
                 int quiet, int c0, int c):
    cdef const unsigned char[:, ::1] y = np.ascontiguousarray(cells, dtype=np.uint8)
    cdef Py_ssize_t m = y.shape[0]
    cdef Py_ssize_t s = weights.shape[0]
    cdef Py_ssize_t a, b, i, j, r0, q0
    cdef double g, e, acc, cacc
    weighted_arr = np.empty((m, m), dtype=np.float64)
    center_arr = np.empty((m, m), dtype=np.float64)
    cdef double[:, ::1] weighted = weighted_arr
    cdef double[:, ::1] center = center_arr
    for a in range(m):
        r0 = quiet + a * s
        for b in range(m):
            q0 = quiet + b * s
            acc = 0.0
            if y[a, b]:
                for i in range(s):
                    for j in range(s):
                        g = gray[r0 + i, q0 + j]
                        e = 1.0 - 2.0 * g
                        if e > 0.0:
                            acc += e * weights[i, j]
            else:
                for i in range(s):
                    for j in range(s):
                        g = gray[r0 + i, q0 + j]
                        e = 2.0 * g - 1.0
                        if e > 0.0:
                            acc += e * weights[i, j]
            weighted[a, b] = acc
            cacc = 0.0
            for i in range(c0, c0 + c):
                for j in range(c0, c0 + c):
                    cacc += gray[r0 + i, q0 + j]
            center[a, b] = cacc / (c * c)
    return weighted_arr, center_arr


def gray_gradient(const double[:, ::1] gray, cells, const double[:, ::1] weights,
                  phi, int quiet, double scale):
    cdef const unsigned char[:, ::1] y = np.ascontiguousarray(cells, dtype=np.uint8)
    cdef const unsigned char[:, ::1] gate = np.ascontiguousarray(phi, dtype=np.uint8)
    cdef Py_ssize_t m = y.shape[0]
    cdef Py_ssize_t s = weights.shape[0]
    cdef Py_ssize_t a, b, i, j, r0, q0
    cdef double g, d
    out_arr = np.zeros((gray.shape[0], gray.shape[1]), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for a in range(m):
        r0 = quiet + a * s
        for b in range(m):
            if not gate[a, b]:
                continue
            q0 = quiet + b * s
            for i in range(s):
                for j in range(s):
                    g = gray[r0 + i, q0 + j]
                    if g < 0.5:
                        d = -2.0 if y[a, b] else 0.0
                    elif g > 0.5:
                        d = 0.0 if y[a, b] else 2.0
                    else:
                        d = 0.0
                    out[r0 + i, q0 + j] = d * weights[i, j] * scale
    return out_arr
