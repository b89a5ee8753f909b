"""Log-moment integrals, Gaussian determinant moments, Wronskian moments and
the Poincare-Lelong residual.

Quadrature uses scipy's adaptive Gauss-Kronrod (QUADPACK) after explicit
substitutions: u = -log rho on (0, 1] removes the log singularity, t = 1/rho
maps (1, inf) to (0, 1].  Monte Carlo draws come from the same counter-based
Gaussian streams as the Kostlan sampler.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from ._backend import kernels
from .geometry import SQRT_PI, PointCP1, basis_derivatives, basis_values, dist_to_real_locus, peak_sections
from .kostlan import GOLDEN, MASK64, EnsembleSpec
from .poly import CoveringPair

RADIAL_CONST = math.sqrt(2.0)
CUBIC_CONST = (4.0 * math.sqrt(6.0) + 9.0 * math.sqrt(2.0)) / 12.0
DET_CONST = 4.0 * (4.0 * math.sqrt(3.0) + 9.0) / 3.0


class QuadratureError(ArithmeticError):
    pass


class BoundViolation(ArithmeticError):
    pass


class IllPosedFixture(ValueError):
    """A zero of W sits on the support boundary of the test function."""


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float  # quadrature error estimate or Monte Carlo standard error


# -- 1-d log moments ---------------------------------------------------------


def _integrate(f: Callable[[float], float], a: float, b: float, budget: int) -> tuple[float, float]:
    val, err = quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=budget)[:2]
    return val, err


def _log_moment(n: int, power: int, budget: int) -> Estimate:
    """int_0^inf |log r|^n exp(-r^2) r^power dr."""
    if not 0 <= n <= 30:
        raise ValueError("n must be in 0..30")
    k = power + 1

    def near_zero(u: float) -> float:
        # r = exp(-u), dr = -exp(-u) du
        return u**n * math.exp(-math.exp(-2.0 * u) - k * u)

    def near_inf(t: float) -> float:
        # r = 1/t, dr = -dt/t^2
        if t == 0.0:
            return 0.0
        return (-math.log(t)) ** n * math.exp(-1.0 / (t * t)) * t ** (-k - 1)

    a, ea = _integrate(near_zero, 0.0, math.inf, budget)
    b, eb = _integrate(near_inf, 0.0, 1.0, budget)
    val, err = a + b, ea + eb
    if not math.isfinite(val) or err > 1e-10 * val:
        raise QuadratureError(f"log moment n={n}: error estimate {err:.3g} exceeds 1e-10 * {val:.6g}")
    return Estimate(val, err)


def radial_estimate(n: int, budget: int = 200) -> Estimate:
    est = _log_moment(n, 1, budget)
    if est.value > RADIAL_CONST * math.factorial(n):
        raise BoundViolation(f"radial moment {est.value} exceeds sqrt(2) {n}!")
    return est


def cubic_estimate(n: int, budget: int = 200) -> Estimate:
    est = _log_moment(n, 3, budget)
    if est.value > CUBIC_CONST * math.factorial(n):
        raise BoundViolation(f"cubic moment {est.value} exceeds {CUBIC_CONST:.6f} {n}!")
    return est


def log_moment_radial(n: int) -> float:
    """int_0^inf |log rho|^n exp(-rho^2) rho d rho."""
    return radial_estimate(n).value


def log_moment_cubic(n: int) -> float:
    """int_0^inf |log r|^n exp(-r^2) r^3 dr."""
    return cubic_estimate(n).value


def log_power_integral(n: int, eps: float) -> float:
    """int_eps^1 (log x)^n dx by the integration-by-parts recursion

        I_n = [x log^n x]_eps^1 - n I_{n-1},   I_0 = 1 - eps.

    Forward recursion: rounding is amplified by up to n!, which matters
    only when eps is close to 1 and I_n is tiny.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    le = math.log(eps)
    val = 1.0 - eps
    for k in range(1, n + 1):
        val = -eps * le**k - k * val
    return val


# -- Gaussian determinant moments ------------------------------------------


def _stream_seeds(master_seed: int, salt: int, start: int, count: int) -> np.ndarray:
    key = int(kernels.fmix64((master_seed ^ int(kernels.fmix64((salt + GOLDEN) & MASK64))) & MASK64))
    return np.array(
        [int(kernels.fmix64((key + GOLDEN * (i + 1)) & MASK64)) for i in range(start, start + count)],
        dtype=np.uint64,
    )


DET_SALT = 0x5EED_DE7


def det_log_samples(N: int, seed: int = 0, chunk: int = 1 << 14) -> np.ndarray:
    """log|a0 b1 - a1 b0| for N draws of four standard complex Gaussians (E|z|^2 = 1)."""
    out = np.empty(N)
    s = math.sqrt(0.5)
    for lo in range(0, N, chunk):
        n = min(chunk, N - lo)
        g = kernels.gaussian_block(_stream_seeds(seed, DET_SALT, lo, n), 8) * s
        z = g[:, 0::2] + 1j * g[:, 1::2]
        out[lo : lo + n] = np.log(np.abs(z[:, 0] * z[:, 3] - z[:, 1] * z[:, 2]))
    return out


def det_log_quadrature(m: int) -> Estimate:
    """4 int int |log(rho r)|^m exp(-r^2 - rho^2) r^3 rho dr d rho.

    After the unitary change of variables, |det| = r rho with r = |first
    column| (density 2 r^3 e^{-r^2}) and rho the modulus of the orthogonal
    part of the second column (density 2 rho e^{-rho^2}).  Integrated in
    log variables u = log r, v = log rho, with the inner integral split at
    the kink u = -v.
    """

    def fr(u: float) -> float:
        return 2.0 * math.exp(4.0 * u - math.exp(2.0 * u)) if u < 20.0 else 0.0

    def frho(v: float) -> float:
        return 2.0 * math.exp(2.0 * v - math.exp(2.0 * v)) if v < 20.0 else 0.0

    def inner(v: float) -> float:
        g = lambda u: abs(u + v) ** m * fr(u)
        a = quad(g, -math.inf, -v, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        b = quad(g, -v, math.inf, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        return (a + b) * frho(v)

    val, err = quad(inner, -math.inf, math.inf, epsabs=1e-14, epsrel=1e-11, limit=200)
    return Estimate(val, max(err, 1e-11 * abs(val)))


@dataclass(frozen=True)
class DetMoment:
    m: int
    monte_carlo: Estimate
    quadrature: Estimate
    bound: float

    @property
    def z_score(self) -> float:
        se = math.hypot(self.monte_carlo.error, self.quadrature.error)
        return abs(self.monte_carlo.value - self.quadrature.value) / se if se > 0 else 0.0

    @property
    def agree(self) -> bool:
        return self.z_score <= 4.0

    @property
    def within_bound(self) -> bool:
        return max(self.monte_carlo.value, self.quadrature.value) <= self.bound


def det_log_moment(m: int, N: int = 100_000, seed: int = 0, samples: np.ndarray | None = None) -> DetMoment:
    """E|log|a0 b1 - a1 b0||^m by Monte Carlo and by the reduced quadrature.

    Raises when the two disagree beyond 4 combined standard errors or when
    either exceeds (4 (4 sqrt 3 + 9) / 3) (m+1)!.
    """
    if not 0 <= m <= 12:
        raise ValueError("m must be in 0..12")
    L = det_log_samples(N, seed) if samples is None else samples
    a = np.abs(L) ** m
    mc = Estimate(float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a))) if m else 0.0)
    qd = Estimate(1.0, 0.0) if m == 0 else det_log_quadrature(m)
    res = DetMoment(m, mc, qd, DET_CONST * math.factorial(m + 1))
    if not res.agree:
        raise ArithmeticError(f"det moment m={m}: estimators differ by {res.z_score:.2f} combined SE")
    if not res.within_bound:
        raise BoundViolation(f"det moment m={m} exceeds {res.bound}")
    return res


# -- Wronskian moments -----------------------------------------------------


def regime_radius(d: int, B: float = 1.0) -> float:
    return B * math.log(d) / math.sqrt(d)


def wronskian_log_samples(
    d: int, x: PointCP1, N: int, seed: int = 0, B: float | None = 1.0, chunk: int = 4096
) -> np.ndarray:
    """log R(x) for N pairs of standard Gaussian sections of O(d).

    The pair with index i uses the same Gaussian stream as
    ``sample_pair(EnsembleSpec(d, "real", seed), i)`` (first attempt): the
    Gaussians are the coordinates in the orthonormal basis e_k, i.e. the
    Kostlan pair rescaled by sqrt(d+1).  Evaluation is vectorized through
    the basis values and derivatives at x; see
    ``geometry.normalized_wronskian_norm`` for the single-pair route.
    """
    if B is not None:
        dist = dist_to_real_locus(x)
        if dist < regime_radius(d, B):
            raise ValueError(
                f"dist(x, RP^1) = {dist:.6g} is below B log d / sqrt d = {regime_radius(d, B):.6g} (B = {B})"
            )
    spec = EnsembleSpec(d, "real", seed)
    ev = basis_values(d, x)
    dv = SQRT_PI * basis_derivatives(d, x)
    ps = peak_sections(d, x)
    norm = ps.value_s0 * ps.grad_s1
    out = np.empty(N)
    n1 = d + 1
    for lo in range(0, N, chunk):
        n = min(chunk, N - lo)
        g = kernels.gaussian_block(spec.seeds(range(lo, lo + n)), 2 * n1)
        gp, gq = g[:, :n1], g[:, n1:]
        a, da = gp @ ev, gp @ dv
        b, db = gq @ ev, gq @ dv
        out[lo : lo + n] = np.log(np.abs(a * db - b * da)) - math.log(norm)
    return out


def moments_from_logs(L: np.ndarray, orders: Sequence[int]) -> list[Estimate]:
    out = []
    for m in orders:
        a = np.abs(L) ** m
        se = float(a.std(ddof=1) / math.sqrt(len(a))) if m else 0.0
        out.append(Estimate(float(a.mean()), se))
    return out


def wronskian_log_moment(d: int, x: PointCP1, m: int, N: int, seed: int = 0, B: float = 1.0) -> Estimate:
    """Monte Carlo E|log R(x)|^m with its standard error."""
    if not 0 <= m <= 8:
        raise ValueError("m must be in 0..8")
    L = wronskian_log_samples(d, x, N, seed, B)
    return moments_from_logs(L, [m])[0]


def fit_factorial_constant(estimates: Sequence[Estimate], orders: Sequence[int]) -> float:
    """Smallest c with estimate_m <= c (m+1)! for every listed order."""
    return max(e.value / math.factorial(m + 1) for e, m in zip(estimates, orders))


def wronskian_single(pair: CoveringPair, x: PointCP1) -> float:
    """log R(x) for one exact pair scaled to unit basis coordinates."""
    from .geometry import normalized_wronskian_norm

    return math.log(normalized_wronskian_norm(pair, x) * (pair.d + 1))


# -- reports ---------------------------------------------------------------


@dataclass
class MomentReport:
    mode: str
    orders: list[int]
    values: list[float]
    errors: list[float]
    bounds: list[float | None]
    satisfied: list[bool]
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def moment_report(
    mode: str,
    m_max: int,
    d: int | None = None,
    x: PointCP1 | None = None,
    N: int = 100_000,
    seed: int = 0,
    B: float = 1.0,
) -> MomentReport:
    orders = list(range(m_max + 1))
    if mode in ("radial", "cubic"):
        fn, const = (radial_estimate, RADIAL_CONST) if mode == "radial" else (cubic_estimate, CUBIC_CONST)
        ests = [fn(n) for n in orders]
        bounds = [const * math.factorial(n) for n in orders]
        return MomentReport(
            mode,
            orders,
            [e.value for e in ests],
            [e.error for e in ests],
            bounds,
            [e.value <= b for e, b in zip(ests, bounds)],
        )
    if mode == "det":
        L = det_log_samples(N, seed)
        rows = [det_log_moment(m, samples=L) for m in orders]
        return MomentReport(
            mode,
            orders,
            [r.monte_carlo.value for r in rows],
            [r.monte_carlo.error for r in rows],
            [r.bound for r in rows],
            [r.agree and r.within_bound for r in rows],
            {
                "quadrature": [r.quadrature.value for r in rows],
                "quadrature_error": [r.quadrature.error for r in rows],
                "z_scores": [r.z_score for r in rows],
                "N": N,
            },
        )
    if mode == "wronskian":
        if d is None or x is None:
            raise ValueError("wronskian mode needs a degree and a point")
        L = wronskian_log_samples(d, x, N, seed, B)
        ests = moments_from_logs(L, orders)
        c = fit_factorial_constant(ests, orders)
        bounds = [c * math.factorial(m + 1) for m in orders]
        return MomentReport(
            mode,
            orders,
            [e.value for e in ests],
            [e.error for e in ests],
            bounds,
            [e.value <= b * (1 + 1e-12) for e, b in zip(ests, bounds)],
            {"fitted_c": c, "d": d, "N": N, "dist_to_real": dist_to_real_locus(x), "B": B},
        )
    raise ValueError(f"unknown mode {mode!r}")


# -- Poincare-Lelong residual ----------------------------------------------


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
        b = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class DiscBump:
    """phi(z) = exp(1 - 1/(1 - s)), s = |z - c|^2 / R^2, supported in |z - c| < R."""

    center: complex = 1.0 + 1.0j
    radius: float = 0.2

    def value(self, z: np.ndarray) -> np.ndarray:
        s = np.abs(z - self.center) ** 2 / self.radius**2
        inside = s < 1.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = np.exp(1.0 - 1.0 / np.where(inside, 1.0 - s, 1.0))
        return np.where(inside, v, 0.0)

    def laplacian(self, z: np.ndarray) -> np.ndarray:
        """(4/R^2) psi(s) (s (g'^2 + g'') + g'), g = -1/(1-s)."""
        s = np.abs(z - self.center) ** 2 / self.radius**2
        inside = s < 1.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            u = np.where(inside, 1.0 - s, 1.0)
            psi = np.exp(1.0 - 1.0 / u)
            g1 = -1.0 / u**2
            g2 = -2.0 / u**3
            lap = 4.0 / self.radius**2 * psi * (s * (g1 * g1 + g2) + g1)
        return np.where(inside, lap, 0.0)


@dataclass(frozen=True)
class ConstantBump:
    """phi = 1 on all of CP^1."""

    value_: float = 1.0


STANDARD_DISC = DiscBump(1.0 + 1.0j, 0.2)


def _horner(c: np.ndarray, z):
    v = np.zeros_like(z, dtype=np.complex128)
    for a in c[::-1]:
        v = v * z + a
    return v


def _taylor_at(c: np.ndarray, m: complex) -> np.ndarray:
    """Coefficients of c(m + h) in h."""
    a = c.astype(np.complex128).copy()
    n = len(a) - 1
    for i in range(n):
        for j in range(n - 1, i - 1, -1):
            a[j] += m * a[j + 1]
    return a


def _excluded(c: np.ndarray, m: complex, h: float) -> bool:
    t = np.abs(_taylor_at(c, m))
    rad = math.sqrt(2.0) * h
    tail = sum(t[k] * rad**k for k in range(1, len(t)))
    return t[0] > tail * (1.0 + 1e-12)


def _winding(c: np.ndarray, center: complex, radius: float, n: int = 4096) -> int:
    th = np.linspace(0.0, 2.0 * math.pi, n + 1)
    v = _horner(c, center + radius * np.exp(1j * th))
    ang = np.unwrap(np.angle(v))
    return int(round((ang[-1] - ang[0]) / (2.0 * math.pi)))


def zeros_in_disc(w_coeffs: Sequence[float], center: complex, radius: float) -> list[complex]:
    """Zeros of w in |z - center| < radius by quadtree exclusion and Newton.

    Boxes failing the Taylor exclusion test are split until their size is
    tiny; surviving clusters seed Newton, and the count is confirmed by the
    winding number along the circle.
    """
    c = np.asarray(w_coeffs, dtype=np.float64)
    while len(c) > 1 and c[-1] == 0.0:
        c = c[:-1]
    dc = np.array([k * c[k] for k in range(1, len(c))]) if len(c) > 1 else np.zeros(1)
    boxes = [(complex(center), float(radius))]
    hmin = radius * 1e-4
    leaves = []
    while boxes:
        m, h = boxes.pop()
        if _excluded(c, m, h):
            continue
        if h < hmin:
            leaves.append(m)
            continue
        q = h / 2
        boxes.extend((m + complex(sx * q, sy * q), q) for sx in (-1, 1) for sy in (-1, 1))
    found: list[complex] = []
    for z in leaves:
        for _ in range(60):
            v = _horner(c, np.array([z]))[0]
            dv = _horner(dc, np.array([z]))[0]
            if dv == 0:
                break
            step = v / dv
            z = z - step
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        if abs(z - center) < radius and all(abs(z - f) > 1e-8 * max(1.0, abs(z)) for f in found):
            found.append(complex(z))
    wind = _winding(c, center, radius)
    if wind != len(found):
        raise ArithmeticError(f"zero search found {len(found)} zeros, winding number says {wind}")
    return found


@dataclass(frozen=True)
class PLRow:
    grid: int
    lhs: float
    rhs: float
    residual: float


def _log_norm_w(c: np.ndarray, d: int, z: np.ndarray) -> np.ndarray:
    """log |W| at [z : 1] under the package convention (unit representatives)."""
    with np.errstate(divide="ignore"):
        return 0.5 * math.log(math.pi) + np.log(np.abs(_horner(c, z))) - (d - 1) * np.log1p(np.abs(z) ** 2)


def _curvature_integral(bump: DiscBump, d: int) -> float:
    """int phi omega_W, omega_W = (2d - 2)/pi dA / (1 + |z|^2)^2."""
    th = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    e = np.exp(1j * th)

    def ring(r: float) -> float:
        z = bump.center + r * e
        dens = 1.0 / (1.0 + np.abs(z) ** 2) ** 2
        return float(bump.value(np.array([bump.center + r]))[0] * dens.mean() * 2.0 * math.pi * r)

    val = quad(ring, 0.0, bump.radius, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    return (2 * d - 2) / math.pi * val


def poincare_lelong_rhs(pair: CoveringPair, bump, zeros: Sequence[complex] | None = None) -> float:
    if isinstance(bump, ConstantBump):
        from .realroots import count_complex_critical

        return bump.value_ * ((2 * pair.d - 2) - count_complex_critical(pair))
    c = np.array(pair.wronskian.to_floats())
    if zeros is None:
        zeros = zeros_in_disc(c, bump.center, bump.radius)
    deltas = sum(float(bump.value(np.array([z]))[0]) for z in zeros)
    return _curvature_integral(bump, pair.d) - deltas


def poincare_lelong_lhs(pair: CoveringPair, bump, grid: int, zeros: Sequence[complex] | None = None) -> float:
    """-(1/2 pi) int log|W| Laplacian(phi) dA.

    Grid part: midpoint rule on the square around the support, applied to
    (1 - sum chi_j) f with f = log|W| Lap(phi) and chi_j smooth cutoffs equal
    to 1 near each zero z_j.  Local parts int chi_j f are done in polar
    coordinates about z_j with r = eps s^2 (Gauss-Legendre in s, trapezoid
    in theta), which absorbs the log singularity.
    """
    if isinstance(bump, ConstantBump):
        return 0.0
    d = pair.d
    c = np.array(pair.wronskian.to_floats())
    R = bump.radius
    if zeros is None:
        zeros = zeros_in_search(c, bump)
    zs = list(zeros)
    eps = []
    for j, z in enumerate(zs):
        others = [abs(z - o) for k, o in enumerate(zs) if k != j]
        eps.append(min([R / 2] + [0.45 * o for o in others]))
    h = 2.0 * R / grid
    t = -R + (np.arange(grid) + 0.5) * h
    Z = bump.center + t[None, :] + 1j * t[:, None]
    lap = bump.laplacian(Z)
    f = np.where(lap != 0.0, _log_norm_w(c, d, Z) * lap, 0.0)
    weight = np.ones_like(Z, dtype=np.float64)
    for z, e in zip(zs, eps):
        weight -= _smooth_step(2.0 * np.abs(Z - z) / e - 1.0)
    # weight is 0 exactly where a cutoff equals 1, so log(0) never reaches the sum
    with np.errstate(invalid="ignore"):
        total = float(np.sum(np.where(weight > 0.0, weight * f, 0.0))) * h * h
    s, ws = np.polynomial.legendre.leggauss(96)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    th = np.linspace(0.0, 2.0 * math.pi, 128, endpoint=False)
    for z, e in zip(zs, eps):
        r = e * s * s
        jac = 2.0 * e * s * r  # dr = 2 e s ds, area element r dr dtheta
        P = z + r[:, None] * np.exp(1j * th)[None, :]
        chi = _smooth_step(2.0 * r / e - 1.0)
        g = _log_norm_w(c, d, P) * bump.laplacian(P)
        total += float(np.sum((chi * jac * ws)[:, None] * g) * (2.0 * math.pi / len(th)))
    return -total / (2.0 * math.pi)


def zeros_in_search(c: np.ndarray, bump: DiscBump) -> list[complex]:
    return zeros_in_disc(c, bump.center, 1.5 * bump.radius)


def _check_fixture(bump: DiscBump, zeros: Sequence[complex], tol: float) -> None:
    for z in zeros:
        if abs(abs(z - bump.center) - bump.radius) < tol:
            raise IllPosedFixture(f"zero {z} lies within {tol:.3g} of the support boundary")


def poincare_lelong_study(pair: CoveringPair, bump=STANDARD_DISC, grids: Sequence[int] = (64, 128, 256)) -> list[PLRow]:
    if isinstance(bump, ConstantBump):
        rhs = poincare_lelong_rhs(pair, bump)
        return [PLRow(g, 0.0, rhs, abs(rhs)) for g in grids]
    c = np.array(pair.wronskian.to_floats())
    zs = zeros_in_search(c, bump)
    _check_fixture(bump, zs, 2.0 * bump.radius / max(grids))
    inside = [z for z in zs if abs(z - bump.center) < bump.radius]
    rhs = poincare_lelong_rhs(pair, bump, inside)
    rows = []
    for g in grids:
        lhs = poincare_lelong_lhs(pair, bump, g, zs)
        rows.append(PLRow(g, lhs, rhs, abs(lhs - rhs)))
    return rows


def poincare_lelong_residual(pair: CoveringPair, bump=STANDARD_DISC, grid: int = 256) -> float:
    """|LHS - RHS| of the currents identity tested against ``bump``."""
    return poincare_lelong_study(pair, bump, (grid,))[0].residual


def empirical_order(rows: Sequence[PLRow], floor: float = 1e-13) -> float:
    """Convergence order between the coarsest and finest grid.

    Residuals are clipped at ``floor`` (the round-off level of the sums);
    a study that reaches the floor already on the coarse grid is reported
    as infinitely fast.
    """
    a, b = rows[0], rows[-1]
    ra, rb = max(a.residual, floor), max(b.residual, floor)
    if ra <= floor:
        return math.inf
    return math.log(ra / rb) / math.log(b.grid / a.grid)
