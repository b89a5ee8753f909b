"""Counting distinct real roots and real critical points.

Three routes give the same number:

* ``sturm_count_real``: Sturm sequence built from a subresultant PRS over
  exact integers, signs read at -inf and +inf;
* ``descartes_count_real``: Vincent-Collins-Akritas bisection with
  Descartes' rule of signs on a Cauchy root-bound interval;
* the default fast path: Aberth iteration in double precision followed by a
  rigorous Weierstrass inclusion certificate (see
  ``kcov._pykernels.certified_real_count``).  When the certificate cannot
  be established the exact Sturm count is used instead.
"""

from __future__ import annotations

import logging
from itertools import accumulate
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from ._backend import kernels
from .poly import CoveringPair, DegenerateWronskian, RealPoly, gcd_is_constant

log = logging.getLogger(__name__)

mpz = gmpy2.mpz


@dataclass
class CounterStats:
    certified: int = 0
    closed_form: int = 0
    fallback: int = 0


stats = CounterStats()


def _ints(p: RealPoly | Sequence[int]) -> list:
    nums = p.numerators if isinstance(p, RealPoly) else p
    c = [mpz(x) for x in nums]
    while c and c[-1] == 0:
        c.pop()
    return c


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _deriv(c: list) -> list:
    return [k * c[k] for k in range(1, len(c))]


def _prem(A: list, B: list) -> list:
    """lc(B)**(deg A - deg B + 1) * A mod B, exactly."""
    r = list(A)
    db = len(B) - 1
    lb = B[-1]
    e = len(A) - len(B) + 1
    while r and len(r) - 1 >= db:
        f = r[-1]
        shift = len(r) - 1 - db
        if lb != 1:
            r = [x * lb for x in r[:-1]]
        else:
            r = r[:-1]
        if f:
            for k in range(db):
                r[shift + k] -= f * B[k]
        e -= 1
        while r and r[-1] == 0:
            r.pop()
    if e > 0 and r:
        m = lb**e
        r = [x * m for x in r]
    return r


def _exact_quo(c: list, b) -> list:
    # exactness is guaranteed by subresultant theory; spot-check the last entry
    if b == 1:
        return c
    if c[0] % b:
        raise ArithmeticError("subresultant division was not exact")
    return [gmpy2.divexact(x, b) for x in c]


def _sturm_sequence(p: list) -> list:
    """Sturm sequence of p (up to positive factors) via the subresultant PRS."""
    chain = [p]
    dp = _deriv(p)
    if not dp:
        return chain
    chain.append(dp)
    A, B = p, dp
    delta = len(A) - len(B)
    R = _prem(A, B)
    if not R:
        return chain
    s = -1 if (_sign(B[-1]) ** (delta + 1)) > 0 else 1
    S = [s * x for x in R]
    c = abs(B[-1]) ** delta
    while S:
        chain.append(S)
        A, B = B, S
        delta = len(A) - len(B)
        beta = abs(A[-1]) * c**delta
        R = _prem(A, B)
        if not R:
            break
        s = -1 if (_sign(B[-1]) ** (delta + 1)) > 0 else 1
        S = _exact_quo([s * x for x in R], beta)
        lb = abs(B[-1])
        if delta > 1:
            c = _exact_div_scalar(lb**delta, c ** (delta - 1))
        else:
            c = lb
    return chain


def _exact_div_scalar(a, b):
    q, r = gmpy2.f_divmod(a, b)
    if r:
        raise ArithmeticError("subresultant scalar division was not exact")
    return q


def _divide_exact(p: list, g: list) -> list:
    """Primitive part of p / g over Q (g divides p)."""
    lg = g[-1]
    dg = len(g) - 1
    r = list(p)
    qdeg = len(p) - 1 - dg
    scale = lg ** (qdeg + 1)
    r = [x * scale for x in r]
    q = [mpz(0)] * (qdeg + 1)
    for i in range(qdeg, -1, -1):
        t = _exact_div_scalar(r[i + dg], lg)
        q[i] = t
        if t:
            for k in range(dg + 1):
                r[i + k] -= t * g[k]
    if any(r):
        raise ArithmeticError("divisor does not divide")
    cont = mpz(0)
    for x in q:
        cont = gmpy2.gcd(cont, x)
    if cont > 1:
        q = [x // cont for x in q]
    if q[-1] < 0:
        q = [-x for x in q]
    return q


def _horner_sign(c: list, n, m) -> int:
    # sign of m**deg * c(n/m), m > 0
    acc = mpz(0)
    mp = mpz(1)
    for k in range(len(c) - 1, -1, -1):
        acc = acc * n + c[k] * mp
        mp *= m
    return _sign(acc)


def _variations(signs: list) -> int:
    v = 0
    last = 0
    for s in signs:
        if s:
            if last and s != last:
                v += 1
            last = s
    return v


class SturmChain:
    """Sturm sequence of the square-free part of an integer polynomial.

    ``chain[0]`` is square-free, ``chain[1]`` its derivative, every later
    entry a positive multiple of minus the remainder of the previous two;
    the last entry is a nonzero constant.
    """

    def __init__(self, p: RealPoly | Sequence[int]):
        c = _ints(p)
        if not c:
            raise ValueError("zero polynomial has no Sturm chain")
        if c[-1] < 0:
            c = [-x for x in c]
        chain = _sturm_sequence(c)
        if len(chain[-1]) > 1:
            c = _divide_exact(c, chain[-1])
            chain = _sturm_sequence(c)
        self.chain = tuple(tuple(int(x) for x in s) for s in chain)
        self._mp = chain

    @property
    def squarefree(self) -> tuple[int, ...]:
        return self.chain[0]

    def variations_at(self, x) -> int:
        """Sign variations at x (a rational, or +/-inf as a float)."""
        if isinstance(x, float) and x in (float("inf"), float("-inf")):
            pos = x > 0
            signs = []
            for s in self._mp:
                sg = _sign(s[-1])
                if not pos and (len(s) - 1) % 2:
                    sg = -sg
                signs.append(sg)
            return _variations(signs)
        fx = Fraction(x)
        n, m = mpz(fx.numerator), mpz(fx.denominator)
        return _variations([_horner_sign(s, n, m) for s in self._mp])

    def count_real(self) -> int:
        return self.variations_at(float("-inf")) - self.variations_at(float("inf"))

    def count_in(self, a, b) -> int:
        """Distinct roots in the half-open interval (a, b]."""
        return self.variations_at(a) - self.variations_at(b)


def sturm_count_real(p: RealPoly | Sequence[int]) -> int:
    """Number of distinct real roots, exactly."""
    return SturmChain(p).count_real()


# -- Descartes / VCA -------------------------------------------------------


def _taylor_shift1(c: list) -> list:
    """Coefficients of c(x + 1): pass i replaces c[i:] by its suffix sums."""
    a = list(c)
    n = len(a) - 1
    for i in range(n):
        tail = list(accumulate(reversed(a[i:])))
        tail.reverse()
        a[i:] = tail
    return a


def _sign_var(c: list) -> int:
    v = 0
    last = 0
    for x in c:
        if x:
            s = 1 if x > 0 else -1
            if last and s != last:
                v += 1
            last = s
    return v


def _roots_in_unit_interval(q: list) -> int:
    total = 0
    stack = [q]
    while stack:
        q = stack.pop()
        v = _sign_var(_taylor_shift1(q[::-1]))
        if v == 0:
            continue
        if v == 1:
            total += 1
            continue
        n = len(q) - 1
        left = [q[k] << (n - k) for k in range(n + 1)]
        if sum(left) == 0:
            total += 1
        stack.append(left)
        stack.append(_taylor_shift1(left))
    return total


def is_squarefree(p: RealPoly | Sequence[int]) -> bool:
    c = [int(x) for x in _ints(p)]
    if len(c) <= 2:
        return bool(c)
    return gcd_is_constant(c, [k * c[k] for k in range(1, len(c))])


def descartes_count_real(p: RealPoly | Sequence[int]) -> int:
    """Distinct real roots of a square-free polynomial by Descartes bisection."""
    c = [int(x) for x in _ints(p)]
    if not c:
        raise ValueError("zero polynomial")
    if not is_squarefree(c):
        raise ValueError("descartes_count_real needs a square-free polynomial")
    count = 0
    if c[0] == 0:
        count += 1
        c = c[1:]
    n = len(c) - 1
    if n == 0:
        return count
    lead = abs(c[-1])
    top = max(abs(x) for x in c[:-1])
    e = 0
    while ((1 << e) - 1) * lead < top:
        e += 1
    # all roots lie in the open disc of radius 2**e
    pos = [c[k] << (e * k) for k in range(n + 1)]
    neg = [x if k % 2 == 0 else -x for k, x in enumerate(pos)]
    return count + _roots_in_unit_interval(pos) + _roots_in_unit_interval(neg)


# -- fast certified path ---------------------------------------------------


def _scaled_floats(c: Sequence[int]) -> np.ndarray | None:
    top = max(abs(int(x)) for x in c).bit_length()
    sh = top - 1
    den = 1 << sh
    out = np.array([int(x) / den for x in c], dtype=np.float64)
    nz = np.array([x != 0 for x in c])
    if np.any(np.abs(out[nz]) < 2.0**-1000):
        return None
    return out


def count_distinct_real(p: RealPoly | Sequence[int]) -> int:
    """Distinct real roots: certified floating-point route, exact fallback."""
    nums = p.numerators if isinstance(p, RealPoly) else p
    c = [int(x) for x in nums]
    while c and c[-1] == 0:
        c.pop()
    if not c:
        raise ValueError("zero polynomial")
    lo = 0
    while c[lo] == 0:
        lo += 1
    zero = 1 if lo else 0
    c = c[lo:]
    n = len(c) - 1
    if n <= 2:
        stats.closed_form += 1
        if n == 0:
            return zero
        if n == 1:
            return zero + 1
        disc = c[1] * c[1] - 4 * c[0] * c[2]
        return zero + (2 if disc > 0 else 1 if disc == 0 else 0)
    f = _scaled_floats(c)
    if f is not None:
        for phase in (0.4, 1.3):
            k = kernels.certified_real_count(f, phase)
            if k >= 0:
                stats.certified += 1
                return zero + k
    stats.fallback += 1
    log.info("certificate failed at degree %d; using exact Sturm count", n)
    return zero + sturm_count_real(c)


def count_real_critical(pair: CoveringPair, method: str = "auto") -> int:
    """Distinct real critical points of u = [P : Q] on RP^1 (including infinity)."""
    w = pair.wronskian
    if method == "auto":
        n = count_distinct_real(w)
    elif method == "sturm":
        n = sturm_count_real(w)
    elif method == "descartes":
        n = descartes_count_real(w if is_squarefree(w) else SturmChain(w).squarefree)
    else:
        raise ValueError(f"unknown method {method!r}")
    inf = 2 * pair.d - 2 - int(w.exact_degree)
    return n + (1 if inf > 0 else 0)


def order_at_infinity(pair: CoveringPair) -> int:
    """Order of vanishing of the Wronskian at x = infinity, read in the
    chart y = 1/x: the lowest nonzero coefficient of p~'q~ - p~q~' where
    p~, q~ are the reversed polynomials.  Computed coefficient by
    coefficient, independently of the affine Wronskian.
    """
    d = pair.d
    a = pair.p.numerators[::-1]
    b = pair.q.numerators[::-1]
    for m in range(2 * d - 1):
        s = 0
        for i in range(max(0, m + 1 - d), min(d, m + 1) + 1):
            j = m + 1 - i
            if i != j:
                s += (i - j) * a[i] * b[j]
        if s:
            return m
    raise DegenerateWronskian("Wronskian vanishes identically in the chart at infinity")


def count_complex_critical(pair: CoveringPair) -> int:
    """All critical points on CP^1 with multiplicity: exact_degree(w) + ord_inf(w)."""
    w = pair.wronskian
    return int(w.exact_degree) + order_at_infinity(pair)
