# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_kernels_py``.

Same function names, shapes and term ordering; the shared wrappers in
``backend.py``/``projection.py`` perform the deterministic tree reduction.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def reynolds_terms(const cnp.complex128_t[:, :, ::1] rho_out,
                   const cnp.complex128_t[:, ::1] w,
                   const cnp.complex128_t[:, :, ::1] rho_in):
    """Stack of rho_out[g]^* @ w @ rho_in[g] over all group elements."""
    cdef Py_ssize_t n = rho_out.shape[0]
    cdef Py_ssize_t d_out = rho_out.shape[1]
    cdef Py_ssize_t d_in = rho_in.shape[1]
    out_arr = np.empty((n, d_out, d_in), dtype=np.complex128)
    tmp_arr = np.empty((d_out, d_in), dtype=np.complex128)
    cdef cnp.complex128_t[:, :, ::1] out = out_arr
    cdef cnp.complex128_t[:, ::1] tmp = tmp_arr
    cdef Py_ssize_t g, i, j, k
    cdef cnp.complex128_t acc
    with nogil:
        for g in range(n):
            # tmp = rho_out[g]^H @ w
            for i in range(d_out):
                for k in range(d_in):
                    acc = 0
                    for j in range(d_out):
                        acc = acc + rho_out[g, j, i].conjugate() * w[j, k]
                    tmp[i, k] = acc
            # out[g] = tmp @ rho_in[g]
            for i in range(d_out):
                for k in range(d_in):
                    acc = 0
                    for j in range(d_in):
                        acc = acc + tmp[i, j] * rho_in[g, j, k]
                    out[g, i, k] = acc
    return out_arr


def circulant_diagonal_sums(const cnp.complex128_t[:, ::1] t):
    """Stack over k of the cyclically shifted matrix t[(i+k)%n, (j+k)%n]."""
    cdef Py_ssize_t n = t.shape[0]
    out_arr = np.empty((n, n, n), dtype=np.complex128)
    cdef cnp.complex128_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t k, i, j, ik, jk
    with nogil:
        for k in range(n):
            for i in range(n):
                ik = i + k
                if ik >= n:
                    ik -= n
                for j in range(n):
                    jk = j + k
                    if jk >= n:
                        jk -= n
                    out[k, i, j] = t[ik, jk]
    return out_arr


def c4_kernel_terms(const cnp.float64_t[:, :, :, :, :, ::1] values):
    """The four orbit terms S^r (rot_r K) S^-r of a steerable kernel."""
    cdef Py_ssize_t c_out = values.shape[0]
    cdef Py_ssize_t c_in = values.shape[1]
    cdef Py_ssize_t s = values.shape[4]
    out_arr = np.empty((4, c_out, c_in, 4, 4, s, s), dtype=np.float64)
    cdef cnp.float64_t[:, :, :, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t r, p, q, a, b, i, j, sa, sb, ri, rj
    with nogil:
        for r in range(4):
            for p in range(c_out):
                for q in range(c_in):
                    for a in range(4):
                        sa = (a - r + 4) % 4
                        for b in range(4):
                            sb = (b - r + 4) % 4
                            for i in range(s):
                                for j in range(s):
                                    # apply rot_r: source index of (i, j)
                                    # under r quarter turns of (i,j)->(j,s-1-i)
                                    ri = i
                                    rj = j
                                    if r == 1:
                                        ri = s - 1 - j
                                        rj = i
                                    elif r == 2:
                                        ri = s - 1 - i
                                        rj = s - 1 - j
                                    elif r == 3:
                                        ri = j
                                        rj = s - 1 - i
                                    out[r, p, q, a, b, i, j] = values[p, q, sa, sb, ri, rj]
    return out_arr
