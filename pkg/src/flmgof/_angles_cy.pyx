# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel for the aggregated wedge-angle matrix.

For each anchor r the difference vectors are formed once and the packed
upper-triangle cells are filled in parallel with the (negated, clamped)
cosines; the arccos itself runs through numpy's SIMD loop, using that
|pi - acos(c)| = acos(-c). Tie cells carry the sentinel cosine -1 (angle
pi) plus a separately accumulated pi for the whole-sphere case. Cells sum
their anchors in a fixed order, so results are bit-identical under any
OMP_NUM_THREADS, and the n^3 intermediate never exists.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport M_PI, sqrt

cnp.import_array()


cdef void _fill_minus_cos(const double* x, const double* diffs, const double* norms,
                          const long* pair_i, const long* pair_j,
                          const unsigned char* pair_tied,
                          double* cosbuf, double* extra,
                          Py_ssize_t ncells, Py_ssize_t p, double tol) noexcept nogil:
    cdef Py_ssize_t idx, i, j, d
    cdef double na, nb, ab, m
    for idx in prange(ncells, schedule="static"):
        i = pair_i[idx]
        j = pair_j[idx]
        na = norms[i]
        nb = norms[j]
        if na <= tol and nb <= tol:
            cosbuf[idx] = -1.0          # pi from acos, plus pi below: whole sphere
            extra[idx] += M_PI
        elif na <= tol or nb <= tol or pair_tied[idx]:
            cosbuf[idx] = -1.0          # hemisphere
        else:
            ab = 0.0
            for d in range(p):
                ab = ab + diffs[i * p + d] * diffs[j * p + d]
            m = -ab / (na * nb)
            if m > 1.0:
                m = 1.0
            elif m < -1.0:
                m = -1.0
            cosbuf[idx] = m


def angle_sums_packed(xprime, double tol):
    """Packed upper triangle of sum_r wedge angles; entry (i<=j) at i + j(j+1)/2."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xc = np.ascontiguousarray(xprime, dtype=np.float64)
    cdef Py_ssize_t n = xc.shape[0]
    cdef Py_ssize_t p = xc.shape[1]
    cdef Py_ssize_t ncells = n * (n + 1) // 2

    iu, ju = np.triu_indices(n)
    order = iu + (ju * (ju + 1)) // 2
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pi_arr = np.empty(ncells, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pj_arr = np.empty(ncells, dtype=np.int64)
    pi_arr[order] = iu
    pj_arr[order] = ju
    # the pair tie ||x_i - x_j|| <= tol does not depend on the anchor
    deltas = xc[:, None, :] - xc[None, :, :]
    tied = np.sqrt(np.einsum("ijk,ijk->ij", deltas, deltas)) <= tol
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] tied_arr = np.empty(ncells, dtype=np.uint8)
    tied_arr[order] = tied[iu, ju]

    cdef cnp.ndarray[cnp.float64_t, ndim=1] total = np.zeros(ncells)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] extra_arr = np.zeros(ncells)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cos_arr = np.empty(ncells)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ang_arr = np.empty(ncells)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] diff_arr = np.empty((n, p))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] norm_arr = np.empty(n)

    cdef double* x = <double*> xc.data
    cdef double* diffs = <double*> diff_arr.data
    cdef double* norms = <double*> norm_arr.data
    cdef Py_ssize_t r, k, d
    cdef double acc, v

    for r in range(n):
        with nogil:
            for k in range(n):
                acc = 0.0
                for d in range(p):
                    v = x[k * p + d] - x[r * p + d]
                    diffs[k * p + d] = v
                    acc += v * v
                norms[k] = sqrt(acc)
            _fill_minus_cos(x, diffs, norms,
                            <long*> pi_arr.data, <long*> pj_arr.data,
                            <unsigned char*> tied_arr.data,
                            <double*> cos_arr.data, <double*> extra_arr.data,
                            ncells, p, tol)
        np.arccos(cos_arr, out=ang_arr)
        total += ang_arr
    total += extra_arr
    return total
