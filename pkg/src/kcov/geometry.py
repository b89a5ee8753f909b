"""Fubini-Study geometry of CP^1 and O(d).

Convention (fixed throughout the package):

* omega is the Fubini-Study form normalized to total mass 1, so lengths are
  the usual arccos distances divided by sqrt(pi);
* h_d is the Fubini-Study metric on O(d), |s(x)|^2 = |S(x0, x1)|^2 on unit
  representatives;
* the L2 product integrates h_d against omega, and the orthonormal basis of
  real sections is e_k = sqrt((d+1) C(d,k)) X0^k X1^(d-k).

Everything is evaluated on unit homogeneous representatives (never through
(1+|z|^2)^d), with monomials assembled in the log domain, so degrees in the
hundreds neither overflow nor underflow.

Cotangent vectors: at a unit x the tangent space is represented by vectors
of C^2 orthogonal to x; the unit one y = (-conj x1, conj x0) has FS length 1
and mass-1 length 1/sqrt(pi).  For a section S vanishing at x, or for the
Chern connection in general, the derivative along y is DS(x).y, so
|nabla S(x)| = sqrt(pi) |DS(x).y|.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .poly import CoveringPair, RealPoly

SQRT_PI = math.sqrt(math.pi)


class OnRealLocus(ValueError):
    """The real jet maps degenerate at points of RP^1."""


@dataclass(frozen=True, eq=False)
class PointCP1:
    """A point of CP^1 stored as a unit vector (x0, x1)."""

    x0: complex
    x1: complex

    def __post_init__(self) -> None:
        a, b = complex(self.x0), complex(self.x1)
        n = math.hypot(abs(a), abs(b))
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("homogeneous coordinates must not both vanish")
        object.__setattr__(self, "x0", a / n)
        object.__setattr__(self, "x1", b / n)

    @classmethod
    def affine(cls, z: complex) -> PointCP1:
        """The point [z : 1]; z = inf gives [1 : 0]."""
        if isinstance(z, float) and math.isinf(z):
            return cls(1.0, 0.0)
        return cls(complex(z), 1.0)

    @classmethod
    def parse(cls, text: str) -> PointCP1:
        """'RE,IM' -> [RE + i IM : 1]; 'inf' -> [1 : 0]."""
        if text.strip().lower() in ("inf", "infinity"):
            return cls(1.0, 0.0)
        re_, im_ = (float(t) for t in text.split(","))
        return cls.affine(complex(re_, im_))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x0, self.x1], dtype=np.complex128)

    @property
    def orthogonal(self) -> tuple[complex, complex]:
        """Unit tangent representative y with <x, y> = 0."""
        return (-self.x1.conjugate(), self.x0.conjugate())

    def conj(self) -> PointCP1:
        return PointCP1(self.x0.conjugate(), self.x1.conjugate())

    def rotate(self, phase: float) -> PointCP1:
        u = cmath.exp(1j * phase)
        return PointCP1(u * self.x0, u * self.x1)

    def affine_coordinate(self) -> complex:
        if self.x1 == 0:
            return complex("inf")
        return self.x0 / self.x1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCP1):
            return NotImplemented
        return abs(self.x0 * other.x1 - self.x1 * other.x0) <= 1e-14

    def __hash__(self) -> int:
        return hash(PointCP1)

    def __repr__(self) -> str:
        return f"PointCP1({self.x0:.6g}, {self.x1:.6g})"


def _pairing(x: PointCP1, y: PointCP1) -> float:
    return abs(x.x0.conjugate() * y.x0 + x.x1.conjugate() * y.x1)


def fs_distance(x: PointCP1, y: PointCP1) -> float:
    """Geodesic distance for the mass-1 metric: arccos |<x, y>| / sqrt(pi)."""
    c = min(1.0, _pairing(x, y))
    # arccos loses half the digits near 1; use the sine of the angle there
    s = abs(x.x0 * y.x1 - x.x1 * y.x0)
    ang = math.asin(min(1.0, s)) if c > 0.7 else math.acos(c)
    return ang / SQRT_PI


def dist_to_real_locus(x: PointCP1) -> float:
    """Distance from x to RP^1, by a bracketed 1-d minimization over theta.

    Points of RP^1 are t = (cos th, sin th), th in [0, pi).  A coarse scan
    brackets the minimum of |x ^ t| (the sine of the FS angle), and a
    bounded Brent search refines the offset from the best grid node.  The
    search variable is the offset, not th itself, because the bounded
    method's tolerance carries a term relative to |x|.  Exactly real points
    (x0 conj(x1) real) return 0.
    """
    if (x.x0 * x.x1.conjugate()).imag == 0.0:
        return 0.0

    def sine(th: float) -> float:
        return abs(x.x0 * math.sin(th) - x.x1 * math.cos(th))

    grid = np.linspace(0.0, math.pi, 65)
    vals = [sine(t) for t in grid]
    i = int(np.argmin(vals))
    th0, h = float(grid[i]), float(grid[1])
    # the bracket may straddle th ~ th + pi; sine is pi-periodic so that is harmless
    s = vals[i]
    for _ in range(2):
        # second pass re-centres so the relative part of the tolerance vanishes
        res = minimize_scalar(lambda u: sine(th0 + u), bounds=(-h, h), method="bounded", options={"xatol": 1e-14})
        if res.fun < s:
            s, th0 = float(res.fun), th0 + float(res.x)
        h = 1e-6
    return math.asin(min(1.0, s)) / SQRT_PI


# -- orthonormal basis evaluations -----------------------------------------


@lru_cache(maxsize=64)
def _log_norm_consts(d: int) -> np.ndarray:
    """log sqrt((d+1) C(d,k)), k = 0..d, from exact integers."""
    return np.array([0.5 * (math.log(d + 1) + math.log(math.comb(d, k))) for k in range(d + 1)])


def _clog(z: complex) -> complex:
    return complex(-math.inf, 0.0) if z == 0 else cmath.log(z)


def _monomials(d: int, x0: complex, x1: complex, extra: np.ndarray | None = None) -> np.ndarray:
    """exp(log A_k + k log x0 + (d-k) log x1) for k = 0..d (zero powers handled)."""
    k = np.arange(d + 1)
    la = _log_norm_consts(d) if extra is None else extra
    l0, l1 = _clog(x0), _clog(x1)
    out = np.zeros(d + 1, dtype=np.complex128)
    with np.errstate(invalid="ignore"):
        # 0 * log 0 is 0 here (x^0 = 1)
        t0 = np.where(k == 0, 0.0, k * l0) if x0 == 0 else k * l0
        t1 = np.where(k == d, 0.0, (d - k) * l1) if x1 == 0 else (d - k) * l1
        e = la + t0 + t1
        fin = np.isfinite(e.real)
        out[fin] = np.exp(e[fin])
    return out


def basis_values(d: int, x: PointCP1) -> np.ndarray:
    """e_k(x) on the unit representative, k = 0..d."""
    return _monomials(d, x.x0, x.x1)


def basis_derivatives(d: int, x: PointCP1) -> np.ndarray:
    """De_k(x).y with y the unit tangent representative (FS length 1)."""
    y0, y1 = x.orthogonal
    if d == 0:
        return np.zeros(1, dtype=np.complex128)
    # k x0^(k-1) x1^(d-k) y0 = A_k k y0 * [x0^(k-1) x1^(d-k)], a degree d-1 monomial
    la = _log_norm_consts(d)
    k = np.arange(d + 1)
    part0 = np.zeros(d + 1, dtype=np.complex128)
    part1 = np.zeros(d + 1, dtype=np.complex128)
    part0[1:] = _monomials(d - 1, x.x0, x.x1, la[1:]) * k[1:] * y0
    part1[:-1] = _monomials(d - 1, x.x0, x.x1, la[:-1]) * (d - k[:-1]) * y1
    return part0 + part1


def bergman_kernel(d: int, x: PointCP1) -> float:
    """sum_k |e_k(x)|^2, summed explicitly; d + 1 under the convention."""
    if d < 0:
        raise ValueError("d must be >= 0")
    v = basis_values(d, x)
    return float(np.sum(v.real**2 + v.imag**2))


@dataclass(frozen=True)
class PeakSections:
    s0: np.ndarray
    s1: np.ndarray
    value_s0: float  # |s0(x)|
    grad_s1: float  # |nabla s1(x)|, mass-1 cotangent norm


def peak_sections(d: int, x: PointCP1) -> PeakSections:
    """Unit generators s0 of (H_x)^perp and s1 of (H_2x)^perp within H_x.

    Coefficient vectors are in the basis e_k.  The evaluation functional at x
    is alpha -> sum alpha_k e_k(x), so its Riesz representative has
    coefficients conj(e_k(x)); s1 comes from the derivative functional in
    the same way, orthogonalized against s0.
    """
    if d < 1:
        raise ValueError("peak sections need d >= 1")
    ev = basis_values(d, x)
    dv = basis_derivatives(d, x)
    s0 = ev.conj() / np.linalg.norm(ev)
    t = dv.conj()
    t = t - np.vdot(s0, t) * s0
    t = t - np.vdot(s0, t) * s0
    s1 = t / np.linalg.norm(t)
    value_s0 = abs(np.dot(s0, ev))
    grad_s1 = SQRT_PI * abs(np.dot(s1, dv))
    return PeakSections(s0, s1, float(value_s0), float(grad_s1))


def peak_ratio(d: int, x: PointCP1) -> float:
    """|nabla s1(x)| / (sqrt(d) |s0(x)|)."""
    ps = peak_sections(d, x)
    return ps.grad_s1 / (math.sqrt(d) * ps.value_s0)


# -- Wronskian norms -------------------------------------------------------


def _chart_eval(c: np.ndarray, t: complex) -> tuple[complex, complex]:
    v = 0j
    dv = 0j
    for a in c[::-1]:
        dv = dv * t + v
        v = v * t + a
    return v, dv


def _homogeneous_jet(coeffs: np.ndarray, d: int, x: PointCP1) -> tuple[complex, complex]:
    """(S(x), DS(x).y) for S = sum a_k X0^k X1^(d-k), on unit representatives.

    Evaluated in the chart of the larger coordinate, so the power factor is
    at least 2^(-d/2) and Horner runs with |t| <= 1.
    """
    y0, y1 = x.orthogonal
    c = np.asarray(coeffs, dtype=np.float64)
    if abs(x.x0) <= abs(x.x1):
        t = x.x0 / x.x1
        v, dv = _chart_eval(c, t)  # S = x1^d p(t)
        s = x.x1**d * v
        # dS/dX0 = x1^(d-1) p'(t), dS/dX1 = x1^(d-1) (d p(t) - t p'(t))
        p0 = x.x1 ** (d - 1) * dv
        p1 = x.x1 ** (d - 1) * (d * v - t * dv)
    else:
        t = x.x1 / x.x0
        v, dv = _chart_eval(c[::-1], t)  # S = x0^d p~(t)
        s = x.x0**d * v
        p1 = x.x0 ** (d - 1) * dv
        p0 = x.x0 ** (d - 1) * (d * v - t * dv)
    return s, p0 * y0 + p1 * y1


def wronskian_norm(pair: CoveringPair, x: PointCP1, connection: str = "chern") -> float:
    """|W(x)| for W = alpha (x) nabla beta - beta (x) nabla alpha.

    ``connection="chern"`` differentiates the homogeneous sections along the
    horizontal tangent vector (Chern connection of h_d);
    ``connection="naive"`` uses the plain chart derivative of the
    trivialized sections in whichever affine chart contains x, then converts
    with the frame and cotangent norms.  The two agree because the
    connection term cancels in the antisymmetric combination.
    """
    d = pair.d
    if connection == "chern":
        a, da = _homogeneous_jet(np.array(pair.p.to_floats()), d, x)
        b, db = _homogeneous_jet(np.array(pair.q.to_floats()), d, x)
        return SQRT_PI * abs(a * db - b * da)
    if connection == "naive":
        p = np.array(pair.p.to_floats())
        q = np.array(pair.q.to_floats())
        if abs(x.x0) <= abs(x.x1):
            z = x.x0 / x.x1
            frame = abs(x.x1)  # |X1^d| = |x1|^d on the unit representative
        else:
            z = x.x1 / x.x0
            p, q = p[::-1], q[::-1]
            frame = abs(x.x0)
        pv, pd = _chart_eval(p, z)
        qv, qd = _chart_eval(q, z)
        w = pv * qd - qv * pd
        # |dz| in the mass-1 cotangent metric is sqrt(pi) (1 + |z|^2)
        return SQRT_PI * abs(w) * frame ** (2 * d) * (1.0 + abs(z) ** 2)
    raise ValueError(f"unknown connection {connection!r}")


def normalized_wronskian_norm(pair: CoveringPair, x: PointCP1) -> float:
    """R(x) = |W(x)| / (|s0(x)| |nabla s1(x)|)."""
    ps = peak_sections(pair.d, x)
    return wronskian_norm(pair, x) / (ps.value_s0 * ps.grad_s1)


def homogeneous_wronskian(w: RealPoly, x: PointCP1, d: int) -> complex:
    """The degree-(2d-2) homogenization of w at the unit representative."""
    c = np.array(w.to_floats() + [0.0] * (2 * d - 1 - len(w.to_floats())))
    m = 2 * d - 2
    if abs(x.x0) <= abs(x.x1):
        v, _ = _chart_eval(c, x.x0 / x.x1)
        return x.x1**m * v
    v, _ = _chart_eval(c[::-1], x.x1 / x.x0)
    return x.x0**m * v


# -- jet maps --------------------------------------------------------------


@dataclass(frozen=True)
class JetReport:
    d: int
    x: tuple[float, float, float, float]
    B: float
    dist_to_real: float
    regime_radius: float
    in_regime: bool
    on_real_locus: bool
    ev_x: float | None = None
    ev_2x: float | None = None
    ev_x_real: float | None = None
    ev_2x_real: float | None = None
    ev_x_inv: float | None = None
    ev_2x_inv: float | None = None
    ev_x_real_inv: float | None = None
    ev_2x_real_inv: float | None = None
    composite_determinant: float | None = None

    @property
    def norms(self) -> tuple[float, ...]:
        return (
            self.ev_x,
            self.ev_2x,
            self.ev_x_real,
            self.ev_2x_real,
            self.ev_x_inv,
            self.ev_2x_inv,
            self.ev_x_real_inv,
            self.ev_2x_real_inv,
        )

    def to_json(self) -> dict:
        return asdict(self)


def _real_block(rows: np.ndarray) -> np.ndarray:
    """Singular values of the 2 x (d+1) real matrix [Re rows; Im rows]."""
    m = np.vstack([rows.real, rows.imag])
    return np.linalg.svd(m, compute_uv=False)


def jet_report(d: int, x: PointCP1, B: float = 1.0) -> JetReport:
    """Norms of the scaled evaluation and 1-jet maps, complex and real.

    Complex maps act on span(s0) and span(s1); real maps on the real
    sections orthogonal to the real sections vanishing at x (resp. to
    first order), which are 2-real-dimensional when x is not real.  The
    fiber C is viewed as R^2 for the real maps.  The composite determinant
    is |s0(x)|^2 |nabla s1(x)|^2 divided by the product of the four real
    singular values (both maps are block triangular in the jet order).
    """
    if d < 2:
        raise ValueError("jet_report needs d >= 2")
    dist = dist_to_real_locus(x)
    radius = B * math.log(d) / math.sqrt(d)
    base = dict(
        d=d,
        x=(x.x0.real, x.x0.imag, x.x1.real, x.x1.imag),
        B=B,
        dist_to_real=dist,
        regime_radius=radius,
        in_regime=dist >= radius,
    )
    ev = basis_values(d, x)
    dv = SQRT_PI * basis_derivatives(d, x)
    sv0 = _real_block(ev)
    if sv0[1] <= 1e-12 * sv0[0] or dist == 0.0:
        return JetReport(on_real_locus=True, **base)
    ps = peak_sections(d, x)
    # real 1-jet: derivative rows restricted to the complement of span(Re ev, Im ev)
    q, _ = np.linalg.qr(np.vstack([ev.real, ev.imag]).T)
    m = np.vstack([dv.real, dv.imag])
    m = m - (m @ q) @ q.T
    sv1 = np.linalg.svd(m, compute_uv=False)
    a, b = 1.0 / math.sqrt(d), 1.0 / d
    det = (ps.value_s0 * ps.grad_s1) ** 2 / float(np.prod(sv0) * np.prod(sv1))
    return JetReport(
        on_real_locus=False,
        ev_x=a * ps.value_s0,
        ev_2x=b * ps.grad_s1,
        ev_x_real=a * float(sv0[0]),
        ev_2x_real=b * float(sv1[0]),
        ev_x_inv=1.0 / (a * ps.value_s0),
        ev_2x_inv=1.0 / (b * ps.grad_s1),
        ev_x_real_inv=1.0 / (a * float(sv0[1])),
        ev_2x_real_inv=1.0 / (b * float(sv1[1])),
        composite_determinant=det,
        **base,
    )
