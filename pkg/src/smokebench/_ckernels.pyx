# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels; same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, M_PI

cnp.import_array()

cdef double EARTH_RADIUS_KM = 6371.0
cdef double DEG = M_PI / 180.0


def excess_exposure_batch(measured, forecast):
    cdef double[:, ::1] m = np.ascontiguousarray(measured, dtype=np.float64)
    cdef double[:, ::1] f = np.ascontiguousarray(forecast, dtype=np.float64)
    if m.shape[0] != f.shape[0] or m.shape[1] != f.shape[1]:
        raise ValueError("measured and forecast must be matching (n, 24) arrays")
    cdef Py_ssize_t n = m.shape[0], width = m.shape[1], i, k, best
    ee_arr = np.empty(n, dtype=np.float64)
    hour_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] ee = ee_arr
    cdef long long[::1] hour = hour_arr
    cdef double fmin, mmin
    for i in range(n):
        best = 0
        fmin = f[i, 0]
        mmin = m[i, 0]
        for k in range(1, width):
            if f[i, k] < fmin:
                fmin = f[i, k]
                best = k
            if m[i, k] < mmin:
                mmin = m[i, k]
        ee[i] = m[i, best] - mmin
        hour[i] = best + 1
    return ee_arr, hour_arr


def random_hour_excess_batch(measured):
    # row means go through numpy so both backends share one summation order
    arr = np.ascontiguousarray(measured, dtype=np.float64)
    return arr.mean(axis=1) - arr.min(axis=1)


def squared_error_sums(measured, forecast):
    cdef double[:, ::1] m = np.ascontiguousarray(measured, dtype=np.float64)
    cdef double[:, ::1] f = np.ascontiguousarray(forecast, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0], width = m.shape[1], i, k
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, d
    for i in range(n):
        acc = 0.0
        for k in range(width):
            d = f[i, k] - m[i, k]
            acc += d * d
        out[i] = acc
    return out_arr


def haversine_batch(double lat0, double lon0, lats, lons):
    cdef double[::1] la = np.ascontiguousarray(lats, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lons, dtype=np.float64)
    cdef Py_ssize_t n = la.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double p0 = lat0 * DEG, l0 = lon0 * DEG, p, a, s1, s2
    cdef double c0 = cos(p0)
    for i in range(n):
        p = la[i] * DEG
        s1 = sin((p - p0) / 2.0)
        s2 = sin((lo[i] * DEG - l0) / 2.0)
        a = s1 * s1 + c0 * cos(p) * s2 * s2
        if a > 1.0:
            a = 1.0
        out[i] = 2.0 * EARTH_RADIUS_KM * asin(sqrt(a))
    return out_arr
