# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bit-level kernels. See ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef extern from *:
    int __builtin_parityll(unsigned long long)


def updown_counter(steps, long states):
    cdef long long[:, ::1] d = np.ascontiguousarray(steps, dtype=np.int64)
    cdef Py_ssize_t rows = d.shape[0], m = d.shape[1], r, t
    out_arr = np.empty((rows, m), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef long long half = states // 2, top = states - 1, s, step
    cdef bint started
    for r in range(rows):
        s = 0
        started = False
        for t in range(m):
            step = d[r, t]
            if not started:
                if step == 0:
                    out[r, t] = 1 if (t & 1) == 0 else 0
                    continue
                started = True
                s = half - 1 + step if step > 0 else half + step
            else:
                s += step
            if s < 0:
                s = 0
            elif s > top:
                s = top
            out[r, t] = 1 if s >= half else 0
    return out_arr


def column_popcount(bits):
    cdef unsigned char[:, :, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t rows = b.shape[0], n = b.shape[1], m = b.shape[2], r, i, t
    out_arr = np.zeros((rows, m), dtype=np.int32)
    cdef int[:, ::1] out = out_arr
    for r in range(rows):
        for i in range(n):
            for t in range(m):
                out[r, t] += b[r, i, t]
    return out_arr


def mux_gather(bits, sel):
    cdef unsigned char[:, :, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t[:, ::1] s = np.ascontiguousarray(sel, dtype=np.intp)
    cdef Py_ssize_t rows = b.shape[0], n = b.shape[1], m = b.shape[2], r, t, k
    out_arr = np.empty((rows, m), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    for r in range(rows):
        for t in range(m):
            k = s[r, t]
            if k < 0 or k >= n:
                raise IndexError("select index out of range")
            out[r, t] = b[r, k, t]
    return out_arr


def lfsr_states(start, mask, int width, Py_ssize_t length):
    cdef unsigned long long full = (1ULL << width) - 1 if width < 64 else 0xFFFFFFFFFFFFFFFFULL
    cdef unsigned long long state = (<unsigned long long>start) & full
    cdef unsigned long long taps = <unsigned long long>mask
    cdef unsigned long long fb
    if state == 0:
        raise ValueError("LFSR state must be nonzero")
    out_arr = np.empty(length, dtype=np.uint64)
    cdef unsigned long long[::1] out = out_arr
    cdef Py_ssize_t t
    for t in range(length):
        out[t] = state
        fb = __builtin_parityll(state & taps)
        state = ((state << 1) | fb) & full
    return out_arr
