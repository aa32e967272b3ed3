# cython: language_level=3
"""Compiled implementations of the numerical hot kernels.

Mirrors ``_kernels_py`` exactly: same signatures, same return conventions,
same tolerances.  The equivalence test in the suite runs both backends on
identical inputs and compares.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

cnp.import_array()

IMPL = "c"

cdef enum:
    _MAXED = 0
    _CAPTURED = 1
    _ESCAPED = 2

RAY_MAXED = _MAXED
RAY_CAPTURED = _CAPTURED
RAY_ESCAPED = _ESCAPED

ctypedef double complex dcomplex

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)
    double complex csqrt(double complex)
    double creal(double complex)


def horner_with_deriv(coeffs, z):
    """Evaluate p, p' and the scale sum_k |c_k||z|^k at each z (ascending coeffs)."""
    cdef cnp.ndarray[dcomplex, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] zz = np.atleast_1d(np.asarray(z, dtype=np.complex128)).copy()
    cdef Py_ssize_t n = zz.shape[0]
    cdef cnp.ndarray[dcomplex, ndim=1] p = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] dp = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] scale = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _horner1(&c[0], c.shape[0], zz[i], &p[i], &dp[i], &scale[i])
    return p, dp, scale


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _horner1(dcomplex * c, Py_ssize_t nc, dcomplex z,
                   dcomplex * pout, dcomplex * dpout, double * sout) nogil:
    cdef dcomplex p = c[nc - 1]
    cdef dcomplex dp = 0
    cdef double s = cabs(c[nc - 1])
    cdef double az = cabs(z)
    cdef Py_ssize_t k
    for k in range(nc - 2, -1, -1):
        dp = dp * z + p
        p = p * z + c[k]
        s = s * az + cabs(c[k])
    pout[0] = p
    dpout[0] = dp
    sout[0] = s


@cython.boundscheck(False)
@cython.wraparound(False)
def aberth_iterate(coeffs, roots0, double tol, int max_iter):
    """Ehrlich-Aberth iteration; see the python backend for the contract."""
    cdef cnp.ndarray[dcomplex, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] z = np.array(roots0, dtype=np.complex128, copy=True)
    cdef Py_ssize_t n = z.shape[0]
    cdef cnp.ndarray[double, ndim=1] resid = np.zeros(n, dtype=np.float64)
    if n == 0:
        return z, resid, 0, True
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] done = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[dcomplex, ndim=1] pv = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] dpv = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] sv = np.empty(n, dtype=np.float64)
    cdef double tiny = np.finfo(np.float64).tiny
    cdef Py_ssize_t i, j
    cdef int it, iterations = 0
    cdef bint all_done
    cdef dcomplex newton, ssum, denom, w
    cdef double ad

    for it in range(1, max_iter + 1):
        iterations = it
        all_done = True
        with nogil:
            for i in range(n):
                _horner1(&c[0], c.shape[0], z[i], &pv[i], &dpv[i], &sv[i])
            for i in range(n):
                if sv[i] < tiny:
                    sv[i] = tiny
                resid[i] = cabs(pv[i]) / sv[i]
                if resid[i] <= tol:
                    done[i] = 1
                if not done[i]:
                    all_done = False
        if all_done:
            break
        with nogil:
            for i in range(n):
                if done[i]:
                    continue
                if dpv[i] == 0:
                    newton = pv[i] / 1e-30
                else:
                    newton = pv[i] / dpv[i]
                ssum = 0
                for j in range(n):
                    if j != i and z[i] != z[j]:
                        ssum = ssum + 1.0 / (z[i] - z[j])
                denom = 1.0 - newton * ssum
                ad = cabs(denom)
                if ad < 1e-12:
                    denom = 1.0
                w = newton / denom
                z[i] = z[i] - w
                if cabs(w) <= 4e-16 * (cabs(z[i]) + 1e-300):
                    done[i] = 1
        all_done = True
        for i in range(n):
            if not done[i]:
                all_done = False
                break
        if all_done:
            break

    cdef bint ok = True
    with nogil:
        for i in range(n):
            _horner1(&c[0], c.shape[0], z[i], &pv[i], &dpv[i], &sv[i])
            if sv[i] < tiny:
                sv[i] = tiny
            resid[i] = cabs(pv[i]) / sv[i]
            if resid[i] > tol * 64:
                ok = False
    if not ok:
        ok = True
        for i in range(n):
            if not done[i]:
                ok = False
                break
    return z, resid, iterations, bool(ok)


@cython.boundscheck(False)
@cython.wraparound(False)
def charpoly_scaled(int m, b):
    """Ascending coefficients of the scaled characteristic polynomial (monic, degree m+1)."""
    cdef dcomplex bb = b
    cdef double fm = <double> m
    cdef cnp.ndarray[dcomplex, ndim=1] prev2 = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] prev = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] cur = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] tmp
    prev[0] = 1.0
    cdef Py_ssize_t i, k
    cdef dcomplex a
    cdef double cc
    for i in range(1, m + 2):
        a = (4 * i - 3) * bb / fm
        cc = 4.0 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i) / (fm * fm * fm)
        for k in range(m + 2):
            cur[k] = 0
        for k in range(i, 0, -1):
            cur[k] = prev[k - 1]
        for k in range(i):
            cur[k] = cur[k] - a * prev[k]
        if i >= 2:
            for k in range(i - 1):
                cur[k] = cur[k] - cc * prev2[k]
        tmp = prev2
        prev2 = prev
        prev = tmp
        for k in range(m + 2):
            prev[k] = cur[k]
    return cur.copy()


@cython.boundscheck(False)
@cython.wraparound(False)
def charpoly_unscaled(int m, b):
    """Ascending coefficients of the raw characteristic polynomial (overflows past m ~ 60)."""
    cdef dcomplex bb = b
    cdef cnp.ndarray[dcomplex, ndim=1] prev2 = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] prev = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] cur = np.zeros(m + 2, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] tmp
    prev[0] = 1.0
    cdef Py_ssize_t i, k
    cdef dcomplex a
    cdef double cc
    for i in range(1, m + 2):
        a = (4 * i - 3) * bb
        cc = 4.0 * (2 * i - 2) * (2 * i - 3) * (m + 2 - i)
        for k in range(m + 2):
            cur[k] = 0
        for k in range(i, 0, -1):
            cur[k] = prev[k - 1]
        for k in range(i):
            cur[k] = cur[k] - a * prev[k]
        if i >= 2:
            for k in range(i - 1):
                cur[k] = cur[k] - cc * prev2[k]
        tmp = prev2
        prev2 = prev
        prev = tmp
        for k in range(m + 2):
            prev[k] = cur[k]
    return cur.copy()


cdef inline dcomplex _dir1(dcomplex c0, dcomplex c1, dcomplex c2, dcomplex c3,
                           dcomplex z, dcomplex ref) nogil:
    cdef dcomplex p = ((c3 * z + c2) * z + c1) * z + c0
    cdef dcomplex q = -p / z
    cdef dcomplex s = csqrt(q)
    cdef double mag = cabs(s)
    cdef dcomplex u
    if mag == 0.0:
        mag = 1.0
    u = conj(s) / mag
    if creal(u * conj(ref)) < 0.0:
        return -u
    return u


@cython.boundscheck(False)
@cython.wraparound(False)
def trace_rays(pc, z0, d0, step, int max_steps, targets,
               capture_r, escape_r, source, min_arc, int mask_target=-1):
    """Trace horizontal-trajectory rays; see the python backend for the contract."""
    cdef cnp.ndarray[dcomplex, ndim=2] pcc = np.ascontiguousarray(pc, dtype=np.complex128)
    cdef cnp.ndarray[dcomplex, ndim=1] z = np.array(z0, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[dcomplex, ndim=1] d = np.array(d0, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[double, ndim=1] h = np.ascontiguousarray(step, dtype=np.float64)
    cdef cnp.ndarray[dcomplex, ndim=2] tg = np.ascontiguousarray(targets, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] capr = np.ascontiguousarray(capture_r, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] escr = np.ascontiguousarray(escape_r, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] src = np.ascontiguousarray(source, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] marc = np.ascontiguousarray(min_arc, dtype=np.float64)

    cdef Py_ssize_t n = z.shape[0]
    cdef cnp.ndarray[cnp.int8_t, ndim=1] status = np.full(n, _MAXED, dtype=np.int8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hit = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2] min_dist = np.full((n, 4), INFINITY, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] arclen = np.zeros(n, dtype=np.float64)

    cdef Py_ssize_t i, t, s_
    cdef int stp
    cdef dcomplex c0, c1, c2, c3, zi, di, k1, k2, k3, k4, dn
    cdef double hs, mag, dist
    cdef bint caught

    with nogil:
        for i in range(n):
            c0 = pcc[i, 0]
            c1 = pcc[i, 1]
            c2 = pcc[i, 2]
            c3 = pcc[i, 3]
            zi = z[i]
            di = d[i]
            hs = h[i]
            for stp in range(max_steps):
                k1 = _dir1(c0, c1, c2, c3, zi, di)
                k2 = _dir1(c0, c1, c2, c3, zi + 0.5 * hs * k1, k1)
                k3 = _dir1(c0, c1, c2, c3, zi + 0.5 * hs * k2, k2)
                k4 = _dir1(c0, c1, c2, c3, zi + hs * k3, k3)
                dn = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
                mag = cabs(dn)
                if mag == 0.0:
                    mag = 1.0
                dn = dn / mag
                zi = zi + hs * dn
                di = dn
                arclen[i] = arclen[i] + hs
                caught = False
                for t in range(4):
                    dist = cabs(zi - tg[i, t])
                    if dist < min_dist[i, t]:
                        min_dist[i, t] = dist
                    if dist <= capr[i] and not caught:
                        if t == src[i] and arclen[i] < marc[i]:
                            continue
                        if t == mask_target and src[i] != mask_target:
                            continue
                        status[i] = _CAPTURED
                        hit[i] = t
                        caught = True
                if caught:
                    break
                if cabs(zi) > escr[i]:
                    status[i] = _ESCAPED
                    break
            z[i] = zi
            d[i] = di
    return status, hit, min_dist, arclen, z
