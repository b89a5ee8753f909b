"""Pure-Python implementations of the hot kernels.

Selected automatically when the compiled extension is missing, or forced with
``KCOV_PURE_PYTHON=1``.  Gaussian streams are bit-identical to the compiled
version (same integer mixing, same libm calls, same operation order).  The
certified root counter may take a different iteration path, but it only ever
returns certified counts, so results agree.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
TWO_PI = 2.0 * math.pi
INV_2_53 = 1.0 / 9007199254740992.0
U = 2.0**-53

BACKEND = "python"


def fmix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def gaussian_fill(seed, n):
    """n standard normals from the splitmix64 stream started at ``seed``."""
    out = np.empty(n, dtype=np.float64)
    state = seed & MASK64
    i = 0
    while i < n:
        state = (state + GOLDEN) & MASK64
        z1 = fmix64(state)
        state = (state + GOLDEN) & MASK64
        z2 = fmix64(state)
        u1 = ((z1 >> 11) + 1) * INV_2_53
        u2 = (z2 >> 11) * INV_2_53
        r = math.sqrt(-2.0 * math.log(u1))
        t = TWO_PI * u2
        out[i] = r * math.cos(t)
        if i + 1 < n:
            out[i + 1] = r * math.sin(t)
        i += 2
    return out


def gaussian_block(seeds, n):
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty((len(seeds), n), dtype=np.float64)
    for row, s in enumerate(seeds):
        out[row] = gaussian_fill(int(s), n)
    return out


def gcd_degree_mod(a, b, p):
    """Degree of gcd(a, b) over GF(p); -1 when both are zero.

    ``a`` and ``b`` are residue lists, constant term first.
    """
    a = _trim([x % p for x in a])
    b = _trim([x % p for x in b])
    if len(a) < len(b):
        a, b = b, a
    while b:
        inv = pow(b[-1], p - 2, p)
        nb = len(b)
        while len(a) >= nb:
            f = a[-1] * inv % p
            shift = len(a) - nb
            if f:
                for k in range(nb - 1):
                    a[shift + k] = (a[shift + k] - f * b[k]) % p
            a.pop()
            a = _trim(a)
        a, b = b, a
    return len(a) - 1


def _trim(c):
    while c and c[-1] == 0:
        c.pop()
    return c


# -- certified counting ---------------------------------------------------


def _initial_points(c, phase):
    n = len(c) - 1
    ac = np.abs(c)
    idx = [k for k in range(n + 1) if ac[k] > 0]
    lg = {k: math.log(ac[k]) for k in idx}
    hull = []
    for k in idx:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            if (lg[j] - lg[i]) * (k - i) <= (lg[k] - lg[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    z = []
    for a, b in zip(hull, hull[1:]):
        r = math.exp((lg[a] - lg[b]) / (b - a))
        m = b - a
        for t in range(m):
            ang = TWO_PI * t / m + TWO_PI * a / n + phase
            z.append(complex(r * math.cos(ang), r * math.sin(ang)))
    return np.array(z, dtype=np.complex128)


def _evaluate(c, z):
    """Horner values in the chart adapted to |z|.

    Returns (v, vd, S, Sd, y, big) where for |z| <= 1 the polynomial is
    evaluated directly, and for |z| > 1 the reversed polynomial is evaluated
    at y = 1/z.  S and Sd are the absolute sums used in error bounds.
    """
    n = len(c) - 1
    az = np.abs(z)
    big = az > 1.0
    zz = np.where(big, z, 1.0)
    den = zz.real * zz.real + zz.imag * zz.imag
    yinv = (zz.real / den) - 1j * (zz.imag / den)
    y = np.where(big, yinv, z)
    ay = np.abs(y)
    v = np.zeros(len(z), dtype=np.complex128)
    vd = np.zeros(len(z), dtype=np.complex128)
    S = np.zeros(len(z))
    Sd = np.zeros(len(z))
    for k in range(n, -1, -1):
        ck = np.where(big, c[n - k], c[k])
        vd = vd * y + v
        Sd = Sd * ay + S
        v = v * y + ck
        S = S * ay + np.abs(ck)
    return v, vd, S, Sd, y, big


def _newton_ratio(v, vd, y, big, n):
    with np.errstate(all="ignore"):
        small = v / vd
        large = 1.0 / (y * (n - y * vd / v))
    return np.where(big, large, small)


def _aberth(c, phase, maxit):
    n = len(c) - 1
    z = _initial_points(c, phase)
    active = np.ones(n, dtype=bool)
    for _ in range(maxit):
        v, vd, S, Sd, y, big = _evaluate(c, z)
        N = _newton_ratio(v, vd, y, big, n)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(all="ignore"):
            w = N / (1.0 - N * s)
        small_res = np.abs(v) <= 4.0 * n * U * S
        w = np.where(active & np.isfinite(w) & ~small_res, w, 0.0)
        z = z - w
        active &= ~(small_res | (np.abs(w) <= 2.0 * U * np.abs(z)))
        if not active.any():
            break
    return z


def _polish_real(c, x, steps=3):
    n = len(c) - 1
    for _ in range(steps):
        if abs(x) <= 1.0:
            v = 0.0
            vd = 0.0
            for k in range(n, -1, -1):
                vd = vd * x + v
                v = v * x + c[k]
            if vd == 0.0:
                break
            step = v / vd
        else:
            y = 1.0 / x
            v = 0.0
            vd = 0.0
            for k in range(n, -1, -1):
                vd = vd * y + v
                v = v * y + c[n - k]
            denom = y * (n - y * vd / v) if v != 0.0 else 0.0
            if denom == 0.0 or not math.isfinite(denom):
                break
            step = 1.0 / denom
        if not math.isfinite(step):
            break
        x = x - step
    return x


def _certify(c, z):
    n = len(c) - 1
    v, vd, S, Sd, y, big = _evaluate(c, z)
    ay = np.abs(y)
    err = (12 * n + 12) * U * S * (1.0 + 4 * (n + 1) * U)
    err = err + np.where(big, 5.0 * U * ay * Sd * (1.0 + 6 * n * U), 0.0)
    bound = np.abs(v) + err
    if not np.all(bound > 0):
        return -1
    az = np.abs(z)
    with np.errstate(divide="ignore"):
        logz = np.where(big, np.log(az), 0.0)
    logb = np.log(bound) + n * logz
    diff = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        return -1
    ld = np.log(diff)
    lsum = ld.sum(axis=1)
    loglc = math.log(abs(c[-1]))
    absterm = np.abs(ld).sum(axis=1) + n * np.abs(logz) + np.abs(logb) + abs(loglc) + math.log(n) + 1.0
    slack = 2.0 * (n + 4) * U * absterm + 64 * U
    logr = math.log(n) + logb - loglc - lsum + slack
    if np.any(logr > 700.0):
        return -1
    r = np.exp(logr) * (1.0 + 8 * U)
    np.fill_diagonal(diff, np.inf)
    if not np.all(diff * (1.0 - 4 * U) > (r[:, None] + r[None, :]) * (1.0 + 2 * U)):
        return -1
    real = z.imag == 0.0
    if not np.all(np.abs(z.imag[~real]) > r[~real] * (1.0 + 2 * U)):
        return -1
    return int(real.sum())


def certified_real_count(c, phase=0.4, maxit=200):
    """Number of real roots of the float polynomial ``c``, certified, or -1.

    ``c`` is constant term first with c[0] != 0 and c[-1] != 0.  The count is
    certified for any polynomial whose coefficients lie within relative
    distance 2**-53 of ``c``: the Weierstrass inclusion discs around the
    approximate roots are pairwise disjoint, and each one either sits on
    the real axis (center real) or misses it.  A positive answer therefore
    also proves that all roots are simple.
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = len(c) - 1
    if n < 1:
        return 0
    z = _aberth(c, phase, maxit)
    near = np.abs(z.imag) <= 1e-7 * np.maximum(1.0, np.abs(z))
    for i in np.nonzero(near)[0]:
        z[i] = complex(_polish_real(c, float(z[i].real)), 0.0)
    return _certify(c, z)
