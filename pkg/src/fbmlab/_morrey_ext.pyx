# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ball-sum kernel for the frequency-space Morrey search."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


def ball_sums(const long long[:, ::1] coords, const double[::1] weights,
              const long long[:, ::1] centers, const double[::1] thresholds):
    """sums[c, m] = sum of weights over points with |x - center_c|^2 < thresholds[m]."""
    cdef Py_ssize_t npts = coords.shape[0]
    cdef Py_ssize_t dim = coords.shape[1]
    cdef Py_ssize_t ncen = centers.shape[0]
    cdef Py_ssize_t nthr = thresholds.shape[0]
    cdef Py_ssize_t c, i, a, lo, hi, mid, m
    cdef long long diff, d2
    cdef double acc
    out = np.zeros((ncen, nthr), dtype=np.float64)
    cdef double[:, ::1] sums = out
    cdef double[::1] bins = np.zeros(nthr + 1, dtype=np.float64)
    cdef double top = thresholds[nthr - 1]
    # thresholds 1, 4, 16, ... (one radius per octave) allow a bit-length lookup
    cdef bint pow4 = True
    for m in range(nthr):
        if thresholds[m] != 4.0 ** m:
            pow4 = False
    for c in range(ncen):
        for m in range(nthr + 1):
            bins[m] = 0.0
        for i in range(npts):
            d2 = 0
            for a in range(dim):
                diff = coords[i, a] - centers[c, a]
                d2 += diff * diff
            if d2 >= top:
                continue
            if pow4:
                # smallest m with d2 < 4^m is ceil(bit_length(d2) / 2)
                if d2 == 0:
                    lo = 0
                else:
                    lo = (64 - __builtin_clzll(<unsigned long long>d2) + 1) >> 1
                bins[lo] += weights[i]
                continue
            # first threshold strictly above d2
            lo = 0
            hi = nthr - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if thresholds[mid] > d2:
                    hi = mid
                else:
                    lo = mid + 1
            bins[lo] += weights[i]
        acc = 0.0
        for m in range(nthr):
            acc += bins[m]
            sums[c, m] = acc
    return out
