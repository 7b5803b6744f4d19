# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference twin."""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt, fabs

cdef extern from "complex.h" nogil:
    double cabs(double complex)

cnp.import_array()

cdef double EPS = 2.220446049250313e-16
cdef int MAX_TERMS = 400


cdef inline double _cabs(double complex z) nogil:
    return cabs(z)


cdef void _series(double complex a, double complex b, double complex c, double z,
                  double complex* val, double complex* dval, double* magout) nogil:
    cdef double complex term = 1.0
    cdef double complex total = 1.0
    cdef double complex dtotal = 0.0
    cdef double mag = 1.0
    cdef int k = 0
    while k < MAX_TERMS:
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total = total + term
        mag += _cabs(term)
        if z != 0.0:
            dtotal = dtotal + (k + 1.0) * term / z
        k += 1
        if _cabs(term) <= EPS * 0.25 * mag:
            break
    val[0] = total
    dval[0] = dtotal
    magout[0] = mag


def hyp2f1_series(double complex a, double complex b, double complex c, double z):
    cdef double complex v, dv
    cdef double mag
    _series(a, b, c, z, &v, &dv, &mag)
    return v, dv, mag


cdef void _taylor_step(double complex a, double complex b, double complex c, double z0,
                       double complex* y_io, double complex* dy_io, double h,
                       double* mag_out, double* magd_out) nogil:
    cdef double p0 = z0 * (1.0 - z0)
    cdef double p1 = 1.0 - 2.0 * z0
    cdef double complex q0 = c - (a + b + 1.0) * z0
    cdef double complex q1 = -(a + b + 1.0)
    cdef double complex rr = -a * b
    cdef double complex d0 = y_io[0]
    cdef double complex d1 = dy_io[0] * h
    cdef double complex d2
    cdef double complex y = d0 + d1
    cdef double complex yd = d1
    cdef double mag = _cabs(d0) + _cabs(d1)
    cdef double magd = _cabs(d1)
    cdef int j = 0
    while j < MAX_TERMS:
        d2 = -((p1 * j + q0) * (j + 1.0) * d1 * h
               + (-j * (j - 1.0) + q1 * j + rr) * d0 * h * h) / (p0 * (j + 2.0) * (j + 1.0))
        y = y + d2
        yd = yd + (j + 2.0) * d2
        mag += _cabs(d2)
        magd += (j + 2.0) * _cabs(d2)
        if _cabs(d2) + _cabs(d1) <= EPS * 0.25 * mag:
            break
        d0 = d1
        d1 = d2
        j += 1
    y_io[0] = y
    dy_io[0] = yd / h
    mag_out[0] = mag
    magd_out[0] = magd


def hyp2f1_negative(double complex a, double complex b, double complex c, zs_in,
                    double r0, double alpha):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zs = np.ascontiguousarray(zs_in, dtype=np.float64)
    cdef Py_ssize_t m = zs.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] vals = np.zeros(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(-zs, kind="stable").astype(np.int64)
    cdef bint started = False
    cdef double zk = 0.0
    cdef double complex y = 0.0
    cdef double complex dy = 0.0
    cdef double complex v, dv
    cdef double acc = 0.0
    cdef double mag, magd, h, zt
    cdef Py_ssize_t idx, i
    with nogil:
        for idx in range(m):
            i = order[idx]
            zt = zs[i]
            if -zt <= r0:
                _series(a, b, c, zt, &v, &dv, &mag)
                vals[i] = v
                errs[i] = 4.0 * EPS * mag
                continue
            if not started:
                zk = -r0
                _series(a, b, c, zk, &y, &dy, &mag)
                acc = 4.0 * EPS * mag / (_cabs(y) + _cabs(dy * zk) + 1e-300)
                started = True
            while zk - alpha * fabs(zk) > zt:
                h = -alpha * fabs(zk)
                _taylor_step(a, b, c, zk, &y, &dy, h, &mag, &magd)
                zk = zk + h
                acc += 4.0 * EPS * (mag + magd) / (_cabs(y) + _cabs(dy * h) + 1e-300)
            h = zt - zk
            if h != 0.0:
                _taylor_step(a, b, c, zk, &y, &dy, h, &mag, &magd)
                acc += 4.0 * EPS * (mag + magd) / (_cabs(y) + _cabs(dy * h) + 1e-300)
                zk = zt
            vals[i] = y
            errs[i] = acc * (_cabs(y) + _cabs(dy * zk * alpha))
    return vals, errs


def gegenbauer_table(int L, double lam, x_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((L + 1, m), dtype=np.float64)
    cdef Py_ssize_t i
    cdef int l
    cdef double xi, p, pm, pn
    with nogil:
        for i in range(m):
            xi = x[i]
            pm = 1.0
            out[0, i] = 1.0
            if L >= 1:
                p = xi
                out[1, i] = p
                for l in range(1, L):
                    pn = (2.0 * (l + lam) * xi * p - l * pm) / (l + 2.0 * lam)
                    pm = p
                    p = pn
                    out[l + 1, i] = p
    return out


def laguerre_table(int M, double alpha, x_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((M + 1, m), dtype=np.float64)
    cdef Py_ssize_t i
    cdef int k
    cdef double xi, p, pm, pn
    with nogil:
        for i in range(m):
            xi = x[i]
            pm = 1.0
            out[0, i] = 1.0
            if M >= 1:
                p = 1.0 - xi / (1.0 + alpha)
                out[1, i] = p
                for k in range(1, M):
                    pn = ((2.0 * k + 1.0 + alpha - xi) * p - k * pm) / (k + 1.0 + alpha)
                    pm = p
                    p = pn
                    out[k + 1, i] = p
    return out


def enumerate_lattice(R_in, double bound):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] R = np.ascontiguousarray(R_in, dtype=np.float64)
    cdef int n = R.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] diag = np.ascontiguousarray(np.diag(R), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mu = R / diag[:, None]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = diag * diag
    cdef cnp.ndarray[cnp.int64_t, ndim=1] x = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hi = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] center = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rem = np.zeros(n + 1, dtype=np.float64)
    cdef double slack = bound * (1.0 + 1e-12) + 1e-300
    cdef int i, j
    cdef double width, dv, used
    found = []
    if n == 0:
        return np.zeros((0, 0), dtype=np.int64)
    # rem[i]: budget available at level i; levels descend from n-1 to 0
    i = n - 1
    rem[i] = slack
    center[i] = 0.0
    width = sqrt(rem[i] / q[i])
    x[i] = <long long>ceil(center[i] - width)
    hi[i] = <long long>floor(center[i] + width)
    while True:
        if x[i] > hi[i]:
            if i == n - 1:
                break
            x[i] = 0
            i += 1
            x[i] += 1
            continue
        dv = x[i] - center[i]
        used = q[i] * dv * dv
        if used > rem[i]:
            x[i] += 1
            continue
        if i == 0:
            found.append(x.copy())
            x[i] += 1
            continue
        rem[i - 1] = rem[i] - used
        i -= 1
        center[i] = 0.0
        for j in range(i + 1, n):
            center[i] -= mu[i, j] * x[j]
        width = sqrt(max(rem[i], 0.0) / q[i])
        x[i] = <long long>ceil(center[i] - width)
        hi[i] = <long long>floor(center[i] + width)
    if not found:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(found, dtype=np.int64)
