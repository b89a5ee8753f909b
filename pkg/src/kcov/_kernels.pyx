# cython: language_level=3
"""Compiled hot kernels: splitmix64/Box-Muller streams, modular gcd degree,
and the certified real-root counter (Aberth iteration + Weierstrass discs).

Mirrors kcov._pykernels; see that module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, exp, fabs, hypot, isfinite
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t kc_mulmod(uint64_t a, uint64_t b, uint64_t p) {
        return (uint64_t)(((unsigned __int128)a * b) % p);
    }
    """
    uint64_t kc_mulmod(uint64_t a, uint64_t b, uint64_t p) nogil

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double U = 1.1102230246251565e-16


cdef inline uint64_t _fmix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def fmix64(z):
    return _fmix64(<uint64_t>(z & 0xFFFFFFFFFFFFFFFF))


cdef void _fill(uint64_t seed, double* out, Py_ssize_t n) nogil:
    cdef uint64_t state = seed
    cdef uint64_t z1, z2
    cdef double u1, u2, r, t
    cdef Py_ssize_t i = 0
    while i < n:
        state = state + GOLDEN
        z1 = _fmix64(state)
        state = state + GOLDEN
        z2 = _fmix64(state)
        u1 = <double>((z1 >> 11) + 1) * INV_2_53
        u2 = <double>(z2 >> 11) * INV_2_53
        r = sqrt(-2.0 * log(u1))
        t = TWO_PI * u2
        out[i] = r * cos(t)
        if i + 1 < n:
            out[i + 1] = r * sin(t)
        i += 2


def gaussian_fill(seed, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    if n > 0:
        _fill(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF), &out[0], n)
    return out


def gaussian_block(seeds, Py_ssize_t n):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t m = s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n), dtype=np.float64)
    cdef Py_ssize_t row
    if n == 0:
        return out
    with nogil:
        for row in range(m):
            _fill(s[row], &out[row, 0], n)
    return out


cdef uint64_t _powmod(uint64_t a, uint64_t e, uint64_t p) nogil:
    cdef uint64_t r = 1
    a = a % p
    while e:
        if e & 1:
            r = kc_mulmod(r, a, p)
        a = kc_mulmod(a, a, p)
        e >>= 1
    return r


def gcd_degree_mod(a, b, p):
    """Degree of gcd(a, b) over GF(p) (p < 2**63); -1 when both are zero."""
    cdef uint64_t P = p
    cdef Py_ssize_t na = len(a), nb = len(b)
    cdef uint64_t* A = <uint64_t*>malloc((na + 1) * sizeof(uint64_t))
    cdef uint64_t* B = <uint64_t*>malloc((nb + 1) * sizeof(uint64_t))
    cdef uint64_t* T
    cdef Py_ssize_t k, shift, da, db, dt
    cdef uint64_t inv, f
    try:
        for k in range(na):
            A[k] = a[k] % p
        for k in range(nb):
            B[k] = b[k] % p
        da = na - 1
        while da >= 0 and A[da] == 0:
            da -= 1
        db = nb - 1
        while db >= 0 and B[db] == 0:
            db -= 1
        if da < db:
            T = A; A = B; B = T
            dt = da; da = db; db = dt
        with nogil:
            while db >= 0:
                inv = _powmod(B[db], P - 2, P)
                while da >= db:
                    f = kc_mulmod(A[da], inv, P)
                    shift = da - db
                    if f:
                        for k in range(db):
                            A[shift + k] = (A[shift + k] + P - kc_mulmod(f, B[k], P)) % P
                    A[da] = 0
                    da -= 1
                    while da >= 0 and A[da] == 0:
                        da -= 1
                T = A; A = B; B = T
                dt = da; da = db; db = dt
        return da
    finally:
        free(A)
        free(B)


# -- certified counting ---------------------------------------------------

cdef struct Eval:
    double vr, vi, dr, di, S, Sd, yr, yi
    int big


cdef inline void _eval(const double* c, int n, double zr, double zi, Eval* e) nogil:
    cdef double den, yr, yi, ay, vr = 0.0, vi = 0.0, dr = 0.0, di = 0.0
    cdef double S = 0.0, Sd = 0.0, t, ck
    cdef int k
    cdef int big = hypot(zr, zi) > 1.0
    if big:
        den = zr * zr + zi * zi
        yr = zr / den
        yi = -(zi / den)
    else:
        yr = zr
        yi = zi
    ay = hypot(yr, yi)
    for k in range(n, -1, -1):
        ck = c[n - k] if big else c[k]
        t = dr * yr - di * yi + vr
        di = dr * yi + di * yr + vi
        dr = t
        Sd = Sd * ay + S
        t = vr * yr - vi * yi + ck
        vi = vr * yi + vi * yr
        vr = t
        S = S * ay + fabs(ck)
    e.vr = vr; e.vi = vi; e.dr = dr; e.di = di
    e.S = S; e.Sd = Sd; e.yr = yr; e.yi = yi; e.big = big


cdef inline void _cdiv(double ar, double ai, double br, double bi, double* qr, double* qi) nogil:
    cdef double den = br * br + bi * bi
    qr[0] = (ar * br + ai * bi) / den
    qi[0] = (ai * br - ar * bi) / den


cdef void _init_points(const double* c, int n, double phase, double* zr, double* zi, int* hull, double* lg) nogil:
    cdef int k, h = 0, i, j, a, b, m, t, pos = 0
    cdef double r, ang
    for k in range(n + 1):
        if c[k] != 0.0:
            lg[k] = log(fabs(c[k]))
            while h >= 2:
                i = hull[h - 2]
                j = hull[h - 1]
                if (lg[j] - lg[i]) * (k - i) <= (lg[k] - lg[i]) * (j - i):
                    h -= 1
                else:
                    break
            hull[h] = k
            h += 1
    for t in range(h - 1):
        a = hull[t]
        b = hull[t + 1]
        r = exp((lg[a] - lg[b]) / (b - a))
        m = b - a
        for j in range(m):
            ang = TWO_PI * j / m + TWO_PI * a / n + phase
            zr[pos] = r * cos(ang)
            zi[pos] = r * sin(ang)
            pos += 1


cdef void _aberth(const double* c, int n, double phase, int maxit, double* zr, double* zi, char* done) nogil:
    cdef int it, i, j, remaining
    cdef double sr, si, dr, di, den, Nr, Ni, wr, wi, tr, ti, qr, qi, az
    cdef Eval e
    for i in range(n):
        done[i] = 0
    remaining = n
    for it in range(maxit):
        for i in range(n):
            if done[i]:
                continue
            _eval(c, n, zr[i], zi[i], &e)
            if hypot(e.vr, e.vi) <= 4.0 * n * U * e.S:
                done[i] = 1
                remaining -= 1
                continue
            if e.big:
                # p/p' = 1 / (y (n - y r'/r))
                _cdiv(e.dr, e.di, e.vr, e.vi, &qr, &qi)
                tr = n - (e.yr * qr - e.yi * qi)
                ti = -(e.yr * qi + e.yi * qr)
                _cdiv(1.0, 0.0, e.yr * tr - e.yi * ti, e.yr * ti + e.yi * tr, &Nr, &Ni)
            else:
                _cdiv(e.vr, e.vi, e.dr, e.di, &Nr, &Ni)
            sr = 0.0
            si = 0.0
            for j in range(n):
                if j != i:
                    dr = zr[i] - zr[j]
                    di = zi[i] - zi[j]
                    den = dr * dr + di * di
                    sr += dr / den
                    si -= di / den
            # w = N / (1 - N s)
            tr = 1.0 - (Nr * sr - Ni * si)
            ti = -(Nr * si + Ni * sr)
            _cdiv(Nr, Ni, tr, ti, &wr, &wi)
            if not (isfinite(wr) and isfinite(wi)):
                continue
            zr[i] -= wr
            zi[i] -= wi
            az = hypot(zr[i], zi[i])
            if hypot(wr, wi) <= 2.0 * U * az:
                done[i] = 1
                remaining -= 1
        if remaining == 0:
            break


cdef double _polish_real(const double* c, int n, double x) nogil:
    cdef int s, k
    cdef double v, vd, y, step, denom
    for s in range(3):
        v = 0.0
        vd = 0.0
        if fabs(x) <= 1.0:
            for k in range(n, -1, -1):
                vd = vd * x + v
                v = v * x + c[k]
            if vd == 0.0:
                break
            step = v / vd
        else:
            y = 1.0 / x
            for k in range(n, -1, -1):
                vd = vd * y + v
                v = v * y + c[n - k]
            if v == 0.0:
                break
            denom = y * (n - y * vd / v)
            if denom == 0.0 or not isfinite(denom):
                break
            step = 1.0 / denom
        if not isfinite(step):
            break
        x = x - step
    return x


cdef int _certify(const double* c, int n, double* zr, double* zi, double* r) nogil:
    cdef int i, j, count = 0
    cdef double err, bound, logz, logb, lsum, labs, d, ld, loglc, logr, slack, az
    cdef Eval e
    loglc = log(fabs(c[n]))
    for i in range(n):
        _eval(c, n, zr[i], zi[i], &e)
        err = (12.0 * n + 12.0) * U * e.S * (1.0 + 4.0 * (n + 1) * U)
        if e.big:
            err += 5.0 * U * hypot(e.yr, e.yi) * e.Sd * (1.0 + 6.0 * n * U)
        bound = hypot(e.vr, e.vi) + err
        if not (bound > 0.0):
            return -1
        az = hypot(zr[i], zi[i])
        logz = log(az) if e.big else 0.0
        logb = log(bound) + n * logz
        lsum = 0.0
        labs = 0.0
        for j in range(n):
            if j != i:
                d = hypot(zr[i] - zr[j], zi[i] - zi[j])
                if d == 0.0:
                    return -1
                ld = log(d)
                lsum += ld
                labs += fabs(ld)
        slack = 2.0 * (n + 4) * U * (labs + n * fabs(logz) + fabs(logb) + fabs(loglc) + log(<double>n) + 1.0) + 64.0 * U
        logr = log(<double>n) + logb - loglc - lsum + slack
        if not (logr <= 700.0):
            return -1
        r[i] = exp(logr) * (1.0 + 8.0 * U)
    for i in range(n):
        if zi[i] == 0.0:
            count += 1
        elif not (fabs(zi[i]) > r[i] * (1.0 + 2.0 * U)):
            return -1
        for j in range(i + 1, n):
            d = hypot(zr[i] - zr[j], zi[i] - zi[j])
            if not (d * (1.0 - 4.0 * U) > (r[i] + r[j]) * (1.0 + 2.0 * U)):
                return -1
    return count


def certified_real_count(c, double phase=0.4, int maxit=200):
    """Certified number of real roots of the float polynomial ``c``, or -1."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = np.ascontiguousarray(c, dtype=np.float64)
    cdef int n = cc.shape[0] - 1
    cdef int i, res
    cdef double* zr
    cdef double* zi
    cdef double* r
    cdef double* lg
    cdef int* hull
    cdef char* done
    cdef const double* cp
    if n < 1:
        return 0
    cp = &cc[0]
    zr = <double*>malloc(n * sizeof(double))
    zi = <double*>malloc(n * sizeof(double))
    r = <double*>malloc(n * sizeof(double))
    lg = <double*>malloc((n + 1) * sizeof(double))
    hull = <int*>malloc((n + 1) * sizeof(int))
    done = <char*>malloc(n * sizeof(char))
    try:
        with nogil:
            _init_points(cp, n, phase, zr, zi, hull, lg)
            _aberth(cp, n, phase, maxit, zr, zi, done)
            for i in range(n):
                if fabs(zi[i]) <= 1e-7 * (hypot(zr[i], zi[i]) if hypot(zr[i], zi[i]) > 1.0 else 1.0):
                    zr[i] = _polish_real(cp, n, zr[i])
                    zi[i] = 0.0
            res = _certify(cp, n, zr, zi, r)
        return res
    finally:
        free(zr); free(zi); free(r); free(lg); free(hull); free(done)
