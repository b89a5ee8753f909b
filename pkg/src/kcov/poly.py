"""Exact dyadic polynomials in the affine chart x = x0/x1, Wronskians, GL2 actions.

A ``RealPoly`` stores integer numerators and one shared power-of-two
exponent, so every coefficient is an exact dyadic rational and all
arithmetic is exact.  ``nominal_degree`` is the degree slot (d for a
degree-d homogeneous form); the exact degree can be smaller, which is how
roots at infinity are represented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import gmpy2

from ._backend import kernels

NEG_INF = -math.inf

# primes just above 2**61 for the modular coprimality certificate
_PRIMES = tuple(int(gmpy2.next_prime(2**61 + k * 2**40)) for k in range(6))


class DegenerateWronskian(ArithmeticError):
    """The Wronskian vanishes identically (p and q are linearly dependent)."""


class InvalidPair(ValueError):
    """The homogeneous pair (P, Q) has a common zero on CP^1."""


def _dyadic(c: Any) -> tuple[int, int]:
    """(numerator, exponent) with c == numerator * 2**exponent."""
    if isinstance(c, bool):
        c = int(c)
    if isinstance(c, int):
        return c, 0
    if isinstance(c, float):
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        n, d = c.as_integer_ratio()
    else:
        fr = Fraction(c) if not isinstance(c, Fraction) else c
        n, d = fr.numerator, fr.denominator
    if d & (d - 1):
        raise ValueError(f"coefficient {c!r} is not a dyadic rational")
    return n, -(d.bit_length() - 1)


def _canonical(nums: list[int], exp: int) -> tuple[tuple[int, ...], int]:
    nz = [n for n in nums if n]
    if not nz:
        return tuple(0 for _ in nums), 0
    t = min((n & -n).bit_length() - 1 for n in nz)
    if t:
        nums = [n >> t for n in nums]
        exp += t
    return tuple(nums), exp


def _dyadic_str(n: int, e: int) -> str:
    if e >= 0:
        return str(n << e)
    k = -e
    sign = "-" if n < 0 else ""
    digits = str(abs(n) * 5**k).rjust(k + 1, "0")
    whole, frac = digits[:-k], digits[-k:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


class RealPoly:
    """Univariate polynomial with exact dyadic coefficients.

    ``coeffs[k]`` is the coefficient of ``x**k``.  Accepts ints, floats
    (converted exactly), Fractions with power-of-two denominators, or
    decimal strings.
    """

    __slots__ = ("_num", "_exp", "nominal_degree")

    def __init__(self, coeffs: Iterable[Any], nominal_degree: int | None = None):
        pairs = [_dyadic(c) for c in coeffs]
        if not pairs:
            pairs = [(0, 0)]
        if nominal_degree is None:
            nominal_degree = len(pairs) - 1
        if nominal_degree < 0:
            raise ValueError("nominal_degree must be >= 0")
        if len(pairs) > nominal_degree + 1:
            if any(n for n, _ in pairs[nominal_degree + 1 :]):
                raise ValueError("nonzero coefficient beyond nominal_degree")
            pairs = pairs[: nominal_degree + 1]
        pairs += [(0, 0)] * (nominal_degree + 1 - len(pairs))
        e = min(ex for _, ex in pairs)
        self._num, self._exp = _canonical([n << (ex - e) for n, ex in pairs], e)
        self.nominal_degree = nominal_degree

    @classmethod
    def from_scaled(cls, nums: Sequence[int], exp: int, nominal_degree: int | None = None) -> RealPoly:
        """Build from integer numerators and a shared exponent."""
        obj = cls.__new__(cls)
        nums = list(nums)
        if nominal_degree is None:
            nominal_degree = len(nums) - 1
        if len(nums) != nominal_degree + 1:
            raise ValueError("need nominal_degree + 1 numerators")
        obj._num, obj._exp = _canonical(nums, exp)
        obj.nominal_degree = nominal_degree
        return obj

    @classmethod
    def zero(cls, nominal_degree: int = 0) -> RealPoly:
        return cls.from_scaled([0] * (nominal_degree + 1), 0, nominal_degree)

    # -- views ---------------------------------------------------------
    @property
    def numerators(self) -> tuple[int, ...]:
        return self._num

    @property
    def exponent(self) -> int:
        return self._exp

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        s = Fraction(2) ** self._exp
        return tuple(n * s for n in self._num)

    @property
    def exact_degree(self) -> int | float:
        for k in range(self.nominal_degree, -1, -1):
            if self._num[k]:
                return k
        return NEG_INF

    def is_zero(self) -> bool:
        return not any(self._num)

    def __len__(self) -> int:
        return self.nominal_degree + 1

    def __getitem__(self, k: int) -> Fraction:
        return self._num[k] * Fraction(2) ** self._exp

    def to_floats(self) -> list[float]:
        """Correctly rounded float coefficients (may overflow to inf)."""
        e = self._exp
        if e >= 0:
            return [float(n << e) for n in self._num]
        den = 1 << -e
        return [n / den for n in self._num]

    # -- arithmetic ----------------------------------------------------
    def _aligned(self, other: RealPoly) -> tuple[list[int], list[int], int]:
        e = min(self._exp, other._exp)
        a = [n << (self._exp - e) for n in self._num]
        b = [n << (other._exp - e) for n in other._num]
        return a, b, e

    def __add__(self, other: RealPoly) -> RealPoly:
        a, b, e = self._aligned(other)
        m = max(len(a), len(b))
        a += [0] * (m - len(a))
        b += [0] * (m - len(b))
        return RealPoly.from_scaled([x + y for x, y in zip(a, b)], e)

    def __neg__(self) -> RealPoly:
        return RealPoly.from_scaled([-n for n in self._num], self._exp)

    def __sub__(self, other: RealPoly) -> RealPoly:
        return self + (-other)

    def __mul__(self, other: RealPoly | Any) -> RealPoly:
        if not isinstance(other, RealPoly):
            n, e = _dyadic(other)
            return RealPoly.from_scaled([x * n for x in self._num], self._exp + e)
        return RealPoly.from_scaled(_mul_ints(self._num, other._num), self._exp + other._exp)

    __rmul__ = __mul__

    def scale(self, lam: Any) -> RealPoly:
        """Multiply by a dyadic scalar."""
        return self * lam

    def derivative(self) -> RealPoly:
        nd = max(self.nominal_degree - 1, 0)
        nums = [k * self._num[k] for k in range(1, self.nominal_degree + 1)] or [0]
        return RealPoly.from_scaled(nums, self._exp, nd)

    def reversed(self) -> RealPoly:
        """x**n p(1/x) with n = nominal_degree (the chart swap x -> 1/x)."""
        return RealPoly.from_scaled(self._num[::-1], self._exp, self.nominal_degree)

    def __call__(self, x: Any) -> Any:
        acc: Any = 0
        for n in reversed(self._num):
            acc = acc * x + n
        if isinstance(acc, (int, Fraction)):
            return acc * Fraction(2) ** self._exp
        return acc * 2.0**self._exp

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RealPoly):
            return NotImplemented
        return (
            self.nominal_degree == other.nominal_degree
            and self._num == other._num
            and self._exp == other._exp
        )

    def __hash__(self) -> int:
        return hash((self.nominal_degree, self._num, self._exp))

    def __repr__(self) -> str:
        cs = ", ".join(_dyadic_str(n, self._exp) for n in self._num)
        return f"RealPoly([{cs}], nominal_degree={self.nominal_degree})"

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        return {
            "degree": self.nominal_degree,
            "coeffs": [_dyadic_str(n, self._exp) for n in self._num],
        }

    @classmethod
    def from_json(cls, obj: dict) -> RealPoly:
        return cls(obj["coeffs"], nominal_degree=int(obj["degree"]))


def _mul_ints(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Exact product of integer coefficient lists (Kronecker substitution)."""
    if len(a) * len(b) <= 64:
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return out
    ma = max(abs(x) for x in a).bit_length()
    mb = max(abs(x) for x in b).bit_length()
    k = _slot(ma + mb + min(len(a), len(b)).bit_length() + 2)
    res = _pack(a, k) * _pack(b, k)
    return _unpack(res, k, len(a) + len(b) - 1)


def _slot(bits: int) -> int:
    return (bits + 7) // 8 * 8


def _pack(c: Sequence[int], k: int) -> int:
    """Sum c[i] 2**(k i) for signed c[i] with |c[i]| < 2**(k-1)."""
    kb = k // 8
    half = 1 << (k - 1)
    raw = b"".join((x + half).to_bytes(kb, "little") for x in c)
    return int.from_bytes(raw, "little") - _offset(len(c), kb)


def _unpack(v: int, k: int, n: int) -> list[int]:
    kb = k // 8
    half = 1 << (k - 1)
    v += _offset(n, kb)
    raw = v.to_bytes(kb * n, "little")
    return [int.from_bytes(raw[i * kb : (i + 1) * kb], "little") - half for i in range(n)]


def _offset(n: int, kb: int) -> int:
    # sum_{i<n} 2**(8 kb i + 8 kb - 1): the half-slot bias of every digit
    return int.from_bytes((b"\x00" * (kb - 1) + b"\x80") * n, "little")


def wronskian_ints(p: Sequence[int], q: Sequence[int]) -> list[int]:
    """Coefficients of p'q - pq' (length 2d), computed without shortcuts.

    The entry at index 2d-1 is returned as computed so callers can check
    that it cancels.
    """
    d = len(p) - 1
    if d == 0:
        return [0]
    dp = [k * p[k] for k in range(1, d + 1)]
    dq = [k * q[k] for k in range(1, d + 1)]
    mp = max(max(abs(x) for x in p), max(abs(x) for x in dp)).bit_length()
    mq = max(max(abs(x) for x in q), max(abs(x) for x in dq)).bit_length()
    k = _slot(mp + mq + (2 * (d + 1)).bit_length() + 2)
    W = _pack(dp, k) * _pack(q, k) - _pack(p, k) * _pack(dq, k)
    return _unpack(W, k, 2 * d)


# -- modular / exact gcd -----------------------------------------------


def _trimmed(c: Sequence[int]) -> list[int]:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def exact_gcd_degree(a: Sequence[int], b: Sequence[int]) -> int:
    """Degree of gcd(a, b) over Q via a primitive PRS; -1 if both are zero."""
    A = [gmpy2.mpz(x) for x in _trimmed(a)]
    B = [gmpy2.mpz(x) for x in _trimmed(b)]
    if len(A) < len(B):
        A, B = B, A
    while B:
        R = _prem(A, B)
        R = _primitive(_trimmed(R))
        A, B = B, R
    return len(A) - 1


def _prem(A: list, B: list) -> list:
    A = list(A)
    lb = B[-1]
    nb = len(B)
    while len(A) >= nb:
        f = A[-1]
        shift = len(A) - nb
        A = [x * lb for x in A]
        for k in range(nb):
            A[shift + k] -= f * B[k]
        A.pop()
        A = _trimmed(A) if A and A[-1] == 0 else A
        if not A:
            break
    return A


def _primitive(c: list) -> list:
    if not c:
        return c
    g = gmpy2.mpz(0)
    for x in c:
        g = gmpy2.gcd(g, x)
        if g == 1:
            return c
    return [x // g for x in c]


def gcd_is_constant(a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff gcd(a, b) over Q is a nonzero constant.

    A prime p that keeps both leading coefficients nonzero and gives a
    constant gcd mod p certifies the answer; otherwise the exact PRS decides.
    """
    a = _trimmed(a)
    b = _trimmed(b)
    if not a or not b:
        return bool(a or b) and len(a or b) == 1
    if len(a) == 1 or len(b) == 1:
        return True
    for p in _PRIMES:
        if a[-1] % p and b[-1] % p:
            if kernels.gcd_degree_mod([x % p for x in a], [x % p for x in b], p) == 0:
                return True
            break
    return exact_gcd_degree(a, b) == 0


# -- pairs ---------------------------------------------------------------


@dataclass(frozen=True)
class Provenance:
    master_seed: int | None = None
    index: int | None = None
    attempts: int = 0
    note: str = ""


@dataclass(frozen=True, eq=False)
class CoveringPair:
    """A degree-d pair (p, q) whose homogenizations have no common zero.

    Validation runs on construction unless ``check=False`` (used by the
    sampler, which certifies the pair itself, and by tests that need a
    deliberately degenerate pair).
    """

    p: RealPoly
    q: RealPoly
    d: int
    provenance: Provenance = field(default_factory=Provenance)
    check: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("degree must be >= 1")
        if self.p.nominal_degree != self.d or self.q.nominal_degree != self.d:
            raise ValueError("p and q must both have nominal_degree d")
        if self.check:
            validate_pair(self.p, self.q)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoveringPair):
            return NotImplemented
        return (self.d, self.p, self.q) == (other.d, other.p, other.q)

    def __hash__(self) -> int:
        return hash((self.d, self.p, self.q))

    @property
    def wronskian(self) -> RealPoly:
        w = self.__dict__.get("_w")
        if w is None:
            w = _wronskian(self)
            object.__setattr__(self, "_w", w)
        return w

    def to_json(self) -> dict:
        out: dict = {"degree": self.d, "p": self.p.to_json(), "q": self.q.to_json()}
        if self.provenance.master_seed is not None:
            out["seed"] = self.provenance.master_seed
        if self.provenance.index is not None:
            out["index"] = self.provenance.index
        return out

    @classmethod
    def from_json(cls, obj: dict) -> CoveringPair:
        prov = Provenance(obj.get("seed"), obj.get("index"))
        return cls(RealPoly.from_json(obj["p"]), RealPoly.from_json(obj["q"]), int(obj["degree"]), prov)


def validate_pair(p: RealPoly, q: RealPoly) -> None:
    """Raise InvalidPair if P and Q share a zero on CP^1."""
    if p.is_zero() and q.is_zero():
        raise InvalidPair("p and q are both zero")
    d = p.nominal_degree
    if p.numerators[d] == 0 and q.numerators[d] == 0:
        raise InvalidPair("common zero at infinity (both leading coefficients vanish)")
    if not gcd_is_constant(p.numerators, q.numerators):
        raise InvalidPair("p and q have a common affine root")


def pair_from_coeffs(p: Iterable[Any], q: Iterable[Any], d: int | None = None, check: bool = True) -> CoveringPair:
    pp = list(p)
    qq = list(q)
    if d is None:
        d = max(len(pp), len(qq)) - 1
    return CoveringPair(RealPoly(pp, d), RealPoly(qq, d), d, check=check)


def _wronskian(pair: CoveringPair) -> RealPoly:
    d = pair.d
    w = wronskian_ints(pair.p.numerators, pair.q.numerators)
    if w[2 * d - 1 if d else 0] != 0 and d > 0:
        raise ArithmeticError("x^(2d-1) coefficient of the Wronskian did not cancel")
    nd = 2 * d - 2
    res = RealPoly.from_scaled(w[: nd + 1], pair.p.exponent + pair.q.exponent, nd)
    if res.is_zero():
        raise DegenerateWronskian("Wronskian vanishes identically: p and q are dependent")
    return res


def derivative(p: RealPoly) -> RealPoly:
    return p.derivative()


def affine_wronskian(pair: CoveringPair) -> RealPoly:
    """w = p'q - pq' with nominal degree 2d-2; raises DegenerateWronskian if w == 0."""
    return pair.wronskian


def infinity_multiplicity(pair: CoveringPair) -> int:
    """Multiplicity of the critical point at x = infinity."""
    w = pair.wronskian
    return 2 * pair.d - 2 - int(w.exact_degree)


def _matrix(A: Any) -> tuple[tuple[int, int], ...]:
    rows = [list(r) for r in A]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("A must be 2x2")
    return tuple(tuple(r) for r in rows)  # type: ignore[return-value]


def _det(A: Any) -> Fraction:
    (a, b), (c, d) = _matrix(A)
    fa, fb, fc, fd = (Fraction(*_frac(v)) for v in (a, b, c, d))
    return fa * fd - fb * fc


def _frac(v: Any) -> tuple[int, int]:
    n, e = _dyadic(v)
    return (n << e, 1) if e >= 0 else (n, 1 << -e)


def mobius_act(pair: CoveringPair, A: Any) -> CoveringPair:
    """(p, q) -> (a p + b q, c p + d q) for an invertible real (dyadic) matrix."""
    (a, b), (c, d) = _matrix(A)
    if _det(A) == 0:
        raise ValueError("singular matrix")
    p2 = pair.p * a + pair.q * b
    q2 = pair.p * c + pair.q * d
    p2 = RealPoly.from_scaled(p2.numerators, p2.exponent, pair.d)
    q2 = RealPoly.from_scaled(q2.numerators, q2.exponent, pair.d)
    return CoveringPair(p2, q2, pair.d, pair.provenance, check=False)


def substitute(p: RealPoly, A: Any) -> RealPoly:
    """Source action P(X0, X1) -> P(a X0 + b X1, c X0 + d X1).

    In the chart this is p(x) -> (c x + d)**n p((a x + b)/(c x + d)) with
    n = nominal_degree.
    """
    (a, b), (c, d) = _matrix(A)
    if _det(A) == 0:
        raise ValueError("singular matrix")
    n = p.nominal_degree
    num = RealPoly([b, a])
    den = RealPoly([d, c])
    one = RealPoly([1])
    npow = [one]
    dpow = [one]
    for _ in range(n):
        npow.append(npow[-1] * num)
        dpow.append(dpow[-1] * den)
    acc = RealPoly.zero(n)
    for k, coef in enumerate(p.coeffs):
        if coef:
            acc = acc + npow[k] * dpow[n - k] * coef
    nums = list(acc.numerators) + [0] * (n + 1 - len(acc.numerators))
    return RealPoly.from_scaled(nums[: n + 1], acc.exponent, n)


def substitute_pair(pair: CoveringPair, A: Any) -> CoveringPair:
    return CoveringPair(substitute(pair.p, A), substitute(pair.q, A), pair.d, pair.provenance, check=False)


def chart_swap(pair: CoveringPair) -> CoveringPair:
    """The same covering read in the chart y = x1/x0 (x -> 1/x)."""
    return CoveringPair(pair.p.reversed(), pair.q.reversed(), pair.d, pair.provenance, check=False)
