# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled GF(2) kernels for row widths up to 64 bits.

Semantics match ``fallback.py`` exactly (same pivot rule, same
results); the dispatcher in ``__init__.py`` routes wider matrices to
the fallback.
"""

from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t


def rank(rows, int ncols):
    """GF(2) row rank of packed rows (each an int < 2**ncols)."""
    cdef Py_ssize_t nrows = len(rows)
    cdef uint64_t *work = <uint64_t *> malloc(nrows * sizeof(uint64_t))
    if work == NULL:
        raise MemoryError()
    cdef Py_ssize_t i, nkept = 0
    cdef uint64_t v
    for i in range(nrows):
        v = <uint64_t> rows[i]
        if v:
            work[nkept] = v
            nkept += 1
    cdef int rk = 0
    cdef int col
    cdef Py_ssize_t pivot
    cdef uint64_t mask, prow
    try:
        for col in range(ncols):
            mask = (<uint64_t> 1) << col
            pivot = -1
            for i in range(rk, nkept):
                if work[i] & mask:
                    pivot = i
                    break
            if pivot < 0:
                continue
            v = work[rk]
            work[rk] = work[pivot]
            work[pivot] = v
            prow = work[rk]
            for i in range(nkept):
                if i != rk and (work[i] & mask):
                    work[i] ^= prow
            rk += 1
            if rk == nkept:
                break
    finally:
        free(work)
    return rk


def solve(rows, int ncols, rhs):
    """Solve rows · x = rhs over GF(2); see the fallback docstring."""
    cdef Py_ssize_t nrows = len(rows)
    cdef uint64_t *aug = <uint64_t *> malloc(nrows * sizeof(uint64_t))
    cdef uint64_t *rhsbit = <uint64_t *> malloc(nrows * sizeof(uint64_t))
    cdef int *pivots = <int *> malloc((ncols if ncols > 0 else 1) * sizeof(int))
    if aug == NULL or rhsbit == NULL or pivots == NULL:
        free(aug); free(rhsbit); free(pivots)
        raise MemoryError()
    cdef Py_ssize_t i
    cdef object rhs_obj = rhs
    for i in range(nrows):
        aug[i] = <uint64_t> rows[i]
        rhsbit[i] = <uint64_t> ((rhs_obj >> i) & 1)
    cdef int rk = 0, col
    cdef Py_ssize_t pivot
    cdef uint64_t mask, prow, prhs, tmp
    cdef bint consistent = True
    cdef uint64_t witness = 0
    try:
        for col in range(ncols):
            mask = (<uint64_t> 1) << col
            pivot = -1
            for i in range(rk, nrows):
                if aug[i] & mask:
                    pivot = i
                    break
            if pivot < 0:
                continue
            tmp = aug[rk]; aug[rk] = aug[pivot]; aug[pivot] = tmp
            tmp = rhsbit[rk]; rhsbit[rk] = rhsbit[pivot]; rhsbit[pivot] = tmp
            prow = aug[rk]
            prhs = rhsbit[rk]
            for i in range(nrows):
                if i != rk and (aug[i] & mask):
                    aug[i] ^= prow
                    rhsbit[i] ^= prhs
            pivots[rk] = col
            rk += 1
            if rk == nrows:
                break
        for i in range(rk, nrows):
            if rhsbit[i]:
                consistent = False
                break
        if consistent:
            for i in range(rk):
                if rhsbit[i]:
                    witness |= (<uint64_t> 1) << pivots[i]
    finally:
        free(aug)
        free(rhsbit)
        free(pivots)
    if not consistent:
        return False, None
    return True, int(witness)


def wht_inplace(int64_t[::1] a):
    """In-place Walsh-Hadamard butterfly on a length-2^k int64 buffer."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef int64_t lo, hi
    while h < n:
        i = 0
        while i < n:
            for j in range(i, i + h):
                lo = a[j]
                hi = a[j + h]
                a[j] = lo + hi
                a[j + h] = lo - hi
            i += 2 * h
        h *= 2


def wht_inplace_f64(double[::1] a):
    """In-place Walsh-Hadamard butterfly on a length-2^k float buffer."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef double lo, hi
    while h < n:
        i = 0
        while i < n:
            for j in range(i, i + h):
                lo = a[j]
                hi = a[j + h]
                a[j] = lo + hi
                a[j + h] = lo - hi
            i += 2 * h
        h *= 2
