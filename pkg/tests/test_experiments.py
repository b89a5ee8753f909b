import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcov import experiments
from kcov.experiments import (
    DegreeCounts,
    ExperimentConfig,
    RiemannHurwitzViolation,
    TailReport,
    collect_counts,
    emit_report,
    exceedance_threshold,
    kac_rice_expected_real_critical,
    linear_fit,
    maximal_frequency,
    parse_degrees,
    parse_ell_grid,
    sweep_mean,
    tail_estimate,
    tail_from_counts,
    wilson_interval,
)
from kcov.kostlan import EnsembleSpec, sample_pair
from kcov.poly import CoveringPair
from kcov.realroots import count_real_critical


@pytest.fixture(autouse=True)
def _no_worker_env(monkeypatch):
    monkeypatch.delenv("KCOV_WORKERS", raising=False)


def test_wilson_interval_reference_values():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and hi == pytest.approx(0.27753279986288, abs=1e-12)
    lo, hi = wilson_interval(5, 10)
    assert (lo, hi) == pytest.approx((0.23659309051, 0.76340690949), abs=1e-10)
    lo, hi = wilson_interval(10, 10)
    assert hi == 1.0 and lo == pytest.approx(1 - 0.27753279986288, abs=1e-12)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


@given(st.integers(1, 10**6).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_interval_contains_the_estimate(kn):
    k, n = kn
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


@pytest.mark.parametrize(
    "ell,d,t",
    [(0.5, 100, 5), (1.0, 100, 10), (1.5, 100, 15), (0.7, 2, 1), (1.0, 50, 8), (2.0, 50, 15), (0.1, 100, 1), (0.0, 9, 0)],
)
def test_exceedance_thresholds(ell, d, t):
    assert exceedance_threshold(ell, d) == t


@given(st.floats(0.01, 5), st.integers(1, 10**6))
def test_threshold_is_exact_ceiling(ell, d):
    t = exceedance_threshold(ell, d)
    from fractions import Fraction

    q = Fraction(ell) ** 2 * d
    assert t * t >= q and (t - 1) ** 2 < q


def test_parsers():
    assert parse_ell_grid("0.5:2.5:0.5") == (0.5, 1.0, 1.5, 2.0, 2.5)
    assert parse_ell_grid("0.1:0.3:0.1") == (0.1, 0.2, 0.3)  # exact decimal stepping
    assert parse_ell_grid("1,2.5") == (1.0, 2.5)
    assert parse_degrees("2:5") == (2, 3, 4, 5)
    assert parse_degrees("50,100") == (50, 100)
    with pytest.raises(ValueError):
        parse_ell_grid("1:2:0")


def test_config_validation_and_identity(monkeypatch):
    with pytest.raises(ValueError):
        ExperimentConfig(degrees=(600,))
    assert ExperimentConfig(degrees=(600,), allow_large=True).degrees == (600,)
    with pytest.raises(ValueError):
        ExperimentConfig(samples=0)
    a = ExperimentConfig(workers=1, out_dir="x")
    b = ExperimentConfig(workers=8, out_dir="y")
    assert a.digest() == b.digest()
    assert ExperimentConfig(master_seed=1).digest() != a.digest()
    monkeypatch.setenv("KCOV_WORKERS", "3")
    assert a.resolved_workers() == 3


def test_kac_rice_values():
    assert kac_rice_expected_real_critical(1) == 0.0
    assert kac_rice_expected_real_critical(3) == 2.0
    assert kac_rice_expected_real_critical(51) == pytest.approx(10.0)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_mean_matches_kac_rice_at_small_degree(d):
    c = collect_counts(d, 4000, seed=17, chunk=1000)
    assert abs(c.mean() - kac_rice_expected_real_critical(d)) < 4 * c.se()


def test_counts_are_invariant_under_rescaling():
    spec = EnsembleSpec(9, "real", 12)
    for i in range(10):
        pair = sample_pair(spec, i)
        scaled = CoveringPair(pair.p.scale(3.5), pair.q.scale(-0.125), pair.d)
        assert count_real_critical(scaled) == count_real_critical(pair)


def test_collect_counts_is_chunk_and_worker_independent():
    a = collect_counts(6, 300, seed=5, workers=1, chunk=300)
    b = collect_counts(6, 300, seed=5, workers=1, chunk=37)
    c = collect_counts(6, 300, seed=5, workers=2, chunk=50)
    assert np.array_equal(a.histogram, b.histogram) and np.array_equal(a.histogram, c.histogram)
    assert a.checked == 300
    # disjoint index ranges add up
    lo = collect_counts(6, 120, seed=5, chunk=120)
    hi = collect_counts(6, 180, seed=5, chunk=180, start=120)
    assert np.array_equal(lo.histogram + hi.histogram, a.histogram)


def test_degree_one_is_always_maximal():
    rep = maximal_frequency(ExperimentConfig(degrees=(1,), samples=50, workers=1), 1)
    assert rep.hits == rep.n == 50 and rep.p_hat == 1.0


def test_riemann_hurwitz_violation_is_fatal(monkeypatch):
    monkeypatch.setattr(experiments, "count_complex_critical", lambda pair: 0)
    with pytest.raises(RiemannHurwitzViolation):
        collect_counts(4, 10, seed=1)


def test_tail_edge_cases():
    hist = np.zeros(9, dtype=np.int64)  # d = 5
    hist[[0, 2, 4, 6, 8]] = [10, 40, 30, 15, 5]
    c = DegreeCounts(5, hist)
    rep = tail_from_counts(c, (0.5, 1.0, 2.0, 3.0, 4.0))
    t = [r.threshold for r in rep.rows]
    assert t == [2, 3, 5, 7, 9]
    assert [r.hits for r in rep.rows] == [90, 50, 20, 5, 0]
    assert rep.rows[-1].impossible and not rep.rows[-2].impossible
    assert rep.monotone
    assert [r.below_regime for r in rep.rows] == [True, False, False, False, False]
    assert rep.fit_rows == 3 and rep.slope < 0


def test_linear_fit_exact_line():
    s, b, r2 = linear_fit([0, 1, 2, 3], [1, -1, -3, -5])
    assert (s, b, r2) == pytest.approx((-2, 1, 1))


def small_config(**kw):
    base = dict(degrees=(4, 6), samples=200, master_seed=3, workers=1, chunk=100)
    base.update(kw)
    return ExperimentConfig(**base)


def test_emitted_files_and_headers(tmp_path):
    cfg = small_config()
    sweep = sweep_mean(cfg)
    files = emit_report(sweep, tmp_path, cfg, 1.0)
    names = sorted(p.name for p in files)
    assert names == ["meta.json", "sweep.csv", "sweep.json"]
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0] == "d,n,mean,se,mean_over_sqrt_d"
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["config_hash"] == cfg.digest() and meta["wall_seconds"] == 1.0
    tail = tail_estimate(cfg, 6)
    emit_report(tail, tmp_path)
    assert (tmp_path / "tail_d6.csv").read_text().startswith("ell,threshold,hits,n,p_hat,ci_lo,ci_hi\n")
    assert (tmp_path / "tail_d6.dat").read_text().startswith("# ell ell2")
    assert (tmp_path / "tail_d6.svg").read_text().startswith("<svg")
    with pytest.raises(TypeError):
        emit_report({"a": 1}, tmp_path)


def test_outputs_are_byte_identical_across_workers(tmp_path):
    texts = []
    for w in (1, 2):
        cfg = small_config(workers=w, chunk=50)
        out = tmp_path / f"w{w}"
        emit_report(tail_estimate(cfg, 6), out)
        emit_report(sweep_mean(cfg), out)
        texts.append([(out / n).read_bytes() for n in ("tail_d6.csv", "tail_d6.json", "sweep.csv", "sweep.json")])
    assert texts[0] == texts[1]


def test_sweep_requires_enough_samples():
    with pytest.raises(ValueError):
        sweep_mean(small_config(samples=50))
    with pytest.raises(ValueError):
        sweep_mean(small_config(degrees=(1, 4)))


def test_tail_report_json_carries_monotone_flag():
    rep = tail_from_counts(DegreeCounts(3, np.array([1, 0, 3, 0, 5])), (1.0, 2.0))
    assert isinstance(rep, TailReport)
    js = rep.to_json()
    assert js["monotone"] is True and js["rows"][0]["threshold"] == math.ceil(math.sqrt(3))
