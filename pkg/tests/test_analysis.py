import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcov import analysis
from kcov.analysis import (
    CUBIC_CONST,
    DET_CONST,
    RADIAL_CONST,
    BoundViolation,
    ConstantBump,
    DiscBump,
    IllPosedFixture,
    PLRow,
    det_log_moment,
    det_log_quadrature,
    det_log_samples,
    empirical_order,
    fit_factorial_constant,
    log_moment_cubic,
    log_moment_radial,
    log_power_integral,
    moment_report,
    poincare_lelong_residual,
    poincare_lelong_study,
    radial_estimate,
    wronskian_log_moment,
    wronskian_log_samples,
    wronskian_single,
    zeros_in_disc,
)
from kcov.geometry import PointCP1
from kcov.kostlan import EnsembleSpec, sample_pair
from kcov.poly import pair_from_coeffs

I = PointCP1.affine(1j)


def mp_log_moment(n, power):
    with mp.workdps(30):
        f = lambda r: abs(mp.log(r)) ** n * mp.exp(-(r**2)) * r**power
        return float(mp.quad(f, [0, mp.mpf("0.01"), 1, 3, mp.inf]))


def test_radial_first_moment_closed_form():
    # substitute t = r^2: (1/4) int |log t| e^{-t} dt = (gamma + 2 E1(1)) / 4
    exact = (float(mp.euler) + 2 * float(mp.e1(1))) / 4
    assert log_moment_radial(1) == pytest.approx(exact, rel=1e-12)
    assert log_moment_radial(0) == pytest.approx(0.5, rel=1e-13)
    assert log_moment_cubic(0) == pytest.approx(0.5, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 20, 30])
def test_log_moments_match_mpmath(n):
    assert log_moment_radial(n) == pytest.approx(mp_log_moment(n, 1), rel=1e-10)
    assert log_moment_cubic(n) == pytest.approx(mp_log_moment(n, 3), rel=1e-10)


@pytest.mark.parametrize("n", range(0, 31))
def test_log_moments_respect_factorial_bounds(n):
    assert log_moment_radial(n) <= RADIAL_CONST * math.factorial(n)
    assert log_moment_cubic(n) <= CUBIC_CONST * math.factorial(n)


def test_quadrature_is_stable_in_the_budget():
    for n in (3, 12, 25):
        a = radial_estimate(n, budget=100).value
        b = radial_estimate(n, budget=400).value
        assert a == pytest.approx(b, rel=1e-12)


def test_bound_violation_raised(monkeypatch):
    monkeypatch.setattr(analysis, "RADIAL_CONST", 0.1)
    with pytest.raises(BoundViolation):
        radial_estimate(2)
    with pytest.raises(ValueError):
        log_moment_radial(31)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 6, 10])
@pytest.mark.parametrize("eps", [1e-9, 0.01, 0.5, 1.0])
def test_log_power_recursion_matches_direct_integral(n, eps):
    with mp.workdps(30):
        ref = float(mp.quad(lambda x: mp.log(x) ** n, [eps, 1])) if eps < 1 else 0.0
    # forward recursion amplifies rounding by up to n!
    assert log_power_integral(n, eps) == pytest.approx(ref, rel=1e-11, abs=1e-15 * math.factorial(n))


def test_log_power_integral_limit():
    # int_0^1 log^n = (-1)^n n!
    for n in range(8):
        assert log_power_integral(n, 1e-300) == pytest.approx((-1) ** n * math.factorial(n), rel=1e-12)
    with pytest.raises(ValueError):
        log_power_integral(2, 0.0)


def det_oracle(m):
    # |a0 b1 - a1 b0| has density 4 t^2 K_1(2 t) on (0, inf)
    with mp.workdps(20):
        f = lambda t: abs(mp.log(t)) ** m * 4 * t**2 * mp.besselk(1, 2 * t)
        return float(mp.quad(f, [0, 1, 4, mp.inf]))


@pytest.mark.parametrize("m", [1, 2, 4])
def test_det_quadrature_matches_bessel_density(m):
    assert det_log_quadrature(m).value == pytest.approx(det_oracle(m), rel=1e-9)


def test_det_monte_carlo_agrees_with_quadrature():
    L = det_log_samples(40_000, seed=3)
    for m in (0, 1, 2, 3, 5):
        r = det_log_moment(m, samples=L)
        assert r.agree and r.within_bound
    assert det_log_moment(0, samples=L).monte_carlo.value == 1.0
    assert np.array_equal(det_log_samples(1000, 9), det_log_samples(1000, 9))
    # chunking does not change the stream
    assert np.array_equal(det_log_samples(1000, 9), analysis.det_log_samples(1000, 9, chunk=77))
    assert DET_CONST == pytest.approx(4 * (4 * math.sqrt(3) + 9) / 3)


def test_wronskian_vector_route_matches_single_pairs():
    d, x = 12, PointCP1.affine(0.4 + 1.5j)
    L = wronskian_log_samples(d, x, 6, seed=21, B=None)
    spec = EnsembleSpec(d, "real", 21)
    for i in range(6):
        pair = sample_pair(spec, i)
        assert pair.provenance.attempts == 0
        assert L[i] == pytest.approx(wronskian_single(pair, x), abs=1e-11)


def test_wronskian_log_matches_det_law_at_i():
    # at [i:1] log R is distributed as log|a0 b1 - a1 b0| for every d
    L = wronskian_log_samples(200, I, 40_000, seed=2)
    for m in (1, 2, 3):
        mc = float(np.mean(np.abs(L) ** m))
        se = float(np.std(np.abs(L) ** m) / math.sqrt(len(L)))
        assert abs(mc - det_oracle(m)) < 4.5 * se


def test_wronskian_moment_zero_and_precondition():
    assert wronskian_log_moment(200, I, 0, 100).value == 1.0
    x = PointCP1.affine(0.3 + 0.01j)
    with pytest.raises(ValueError, match=r"dist\(x, RP\^1\) = 0\.00"):
        wronskian_log_moment(200, x, 2, 100)
    # [i:1] is outside the regime for small d
    with pytest.raises(ValueError, match="0.443113"):
        wronskian_log_moment(20, I, 2, 100)
    with pytest.raises(ValueError):
        wronskian_log_moment(200, I, 9, 100)


def test_factorial_fit_and_report():
    rep = moment_report("wronskian", 4, 200, I, N=5000, seed=1)
    assert rep.values[0] == 1.0 and all(rep.satisfied)
    c = rep.extra["fitted_c"]
    assert max(v / math.factorial(m + 1) for m, v in zip(rep.orders, rep.values)) == pytest.approx(c)
    est = [analysis.Estimate(2.0, 0), analysis.Estimate(5.0, 0)]
    assert fit_factorial_constant(est, [0, 1]) == 2.5
    r = moment_report("radial", 3)
    assert r.satisfied == [True] * 4 and r.bounds[3] == pytest.approx(6 * RADIAL_CONST)
    with pytest.raises(ValueError):
        moment_report("wronskian", 2)
    with pytest.raises(ValueError):
        moment_report("quartic", 2)


# -- Poincare-Lelong ---------------------------------------------------------


def simple_zero_pair(z0):
    """Pair (p, 1) of degree 3 whose Wronskian p' has simple zeros z0, conj(z0)."""
    a, b = z0.real, z0.imag
    # p' = (x - a)^2 + b^2  ->  p = x^3/3 - a x^2 + (a^2 + b^2) x; scale by 3
    p = [0.0, 3 * (a * a + b * b), -3 * a, 1.0]
    return pair_from_coeffs(p, [1.0, 0.0, 0.0, 0.0], 3)


@pytest.mark.parametrize("d,seed", [(5, 0), (8, 3)])
def test_pl_residual_converges_on_random_pairs(d, seed):
    pair = sample_pair(EnsembleSpec(d, "real", seed), 0)
    rows = poincare_lelong_study(pair, grids=(64, 128, 256))
    assert rows[-1].residual < 1e-6
    assert rows[-1].residual <= rows[0].residual
    assert empirical_order(rows) >= 2


def test_pl_with_a_zero_inside_the_disc():
    pair = simple_zero_pair(1.05 + 1.03j)
    bump = DiscBump(1 + 1j, 0.2)
    zs = zeros_in_disc(pair.wronskian.to_floats(), bump.center, bump.radius)
    assert len(zs) == 1 and abs(zs[0] - (1.05 + 1.03j)) < 1e-12
    rows = poincare_lelong_study(pair, bump, (64, 128, 256))
    assert rows[-1].residual < 1e-6
    # the delta term matters: dropping it would leave an O(1) mismatch
    assert abs(rows[-1].rhs - analysis._curvature_integral(bump, 3)) > 0.1


def test_pl_constant_bump_is_exact():
    pair = sample_pair(EnsembleSpec(7, "real", 1), 2)
    rows = poincare_lelong_study(pair, ConstantBump(), (64, 128))
    assert all(r.residual == 0.0 for r in rows)


def test_pl_ill_posed_fixture_rejected():
    # a zero of W exactly on the boundary circle of the support
    pair = simple_zero_pair(1 + 1.25j)
    with pytest.raises(IllPosedFixture):
        poincare_lelong_residual(pair, DiscBump(1 + 1j, 0.25))


def test_bump_laplacian_matches_finite_differences():
    b = DiscBump(0.3 - 0.2j, 0.5)
    z = np.array([0.3 - 0.2j + 0.1 + 0.2j, 0.3 - 0.2j - 0.31j])
    h = 1e-4
    fd = (b.value(z + h) + b.value(z - h) + b.value(z + 1j * h) + b.value(z - 1j * h) - 4 * b.value(z)) / h**2
    assert np.allclose(b.laplacian(z), fd, rtol=1e-6)
    assert b.value(np.array([b.center]))[0] == 1.0
    assert b.value(np.array([b.center + 0.5]))[0] == 0.0


@given(st.integers(2, 14), st.integers(0, 10**5))
@settings(max_examples=40, deadline=None)
def test_zeros_in_disc_matches_numpy_roots(d, idx):
    pair = sample_pair(EnsembleSpec(d, "real", 4), idx)
    c = np.array(pair.wronskian.to_floats())
    while c[-1] == 0:
        c = c[:-1]
    center, radius = 0.2 + 0.3j, 0.9
    ref = [r for r in np.roots(c[::-1]) if abs(r - center) < radius]
    # skip draws with a root too close to the circle for either method
    if any(abs(abs(r - center) - radius) < 1e-6 for r in np.roots(c[::-1])):
        return
    got = zeros_in_disc(c, center, radius)
    assert len(got) == len(ref)
    for r in ref:
        assert min(abs(r - g) for g in got) < 1e-8 * max(1, abs(r))


def test_empirical_order_floor():
    rows = [PLRow(64, 0, 0, 1e-4), PLRow(256, 0, 0, 1e-4 / 4**3)]
    assert empirical_order(rows) == pytest.approx(3.0)
    assert empirical_order([PLRow(64, 0, 0, 1e-16), PLRow(128, 0, 0, 0.0)]) == math.inf
