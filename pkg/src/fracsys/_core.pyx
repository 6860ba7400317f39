# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same signatures as ``_core_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport acos, cos, sin, pow, sqrt, log, fabs, M_PI

cnp.import_array()

BACKEND = "cython"

cdef int SERIES_FROM = 30
cdef int SERIES_TERMS = 6


def sphere_kernel(double r, rho, double delta, double m, int d, t_ref, w_ref,
                  double sphere_const):
    cdef const double[::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t_ref, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w_ref, dtype=np.float64)
    cdef Py_ssize_t nr = rv.shape[0], nt = tv.shape[0], i, j
    cdef int e
    cdef double sn
    out = np.empty(nr, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double rh, cosc, thc, span, th, acc, dist2, val, half_m = -0.5 * m
    for i in range(nr):
        rh = rv[i]
        if fabs(rh - r) >= delta:
            thc = 0.0
        else:
            cosc = (rh * rh + r * r - delta * delta) / (2.0 * r * rh)
            if cosc > 1.0:
                cosc = 1.0
            elif cosc < -1.0:
                cosc = -1.0
            thc = acos(cosc)
        span = M_PI - thc
        acc = 0.0
        for j in range(nt):
            th = thc + span * tv[j]
            dist2 = rh * rh + r * r - 2.0 * r * rh * cos(th)
            val = pow(dist2, half_m)
            if d > 2:
                sn = sin(th)
                for e in range(d - 2):
                    val *= sn
            acc += wv[j] * val
        ov[i] = sphere_const * span * acc
    return out


cdef inline double _h(double y, double s):
    if s == 0.5:
        return -log(y)
    return pow(y, 1.0 - 2.0 * s) / (2.0 * s * (2.0 * s - 1.0))


cdef double _series(double k, double s):
    cdef double out = 0.0, rising = 1.0, fact = 2.0
    cdef double kp = pow(k, -1.0 - 2.0 * s), inv2 = 1.0 / (k * k)
    cdef int j
    for j in range(1, SERIES_TERMS + 1):
        out += 2.0 * rising / fact * kp
        kp *= inv2
        rising *= (2 * j - 1 + 2.0 * s) * (2 * j + 2.0 * s)
        fact *= (2 * j + 1) * (2 * j + 2)
    return out


def hat_weights(double s, Py_ssize_t kmax):
    out = np.empty(kmax, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t k
    cdef double kk
    ov[0] = _h(2.0, s) - _h(1.0, s) + 1.0 / (2.0 * s)
    for k in range(2, kmax + 1):
        kk = <double>k
        if k < SERIES_FROM:
            ov[k - 1] = _h(kk + 1.0, s) - 2.0 * _h(kk, s) + _h(kk - 1.0, s)
        else:
            ov[k - 1] = _series(kk, s)
    return out


def f_values(a, b, y, double alpha):
    a_arr = np.ascontiguousarray(a, dtype=np.float64)
    shape = a_arr.shape
    cdef const double[::1] av = a_arr.ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef Py_ssize_t n = av.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double aa, bb, y2, t1, t2, t3, t4
    for i in range(n):
        aa = av[i]
        bb = bv[i]
        y2 = yv[i] * yv[i]
        t1 = pow(1.0 - aa + sqrt((aa + bb) * (aa + bb) + y2), -2.0 * alpha)
        t2 = pow(1.0 - aa + sqrt((aa - bb) * (aa - bb) + y2), -2.0 * alpha)
        t3 = pow((1.0 + bb) * (1.0 + bb) + y2, -alpha)
        t4 = pow((1.0 - bb) * (1.0 - bb) + y2, -alpha)
        ov[i] = (t1 - t3) + (t2 - t4)
    return out.reshape(shape)
