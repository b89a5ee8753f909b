"""Monte Carlo harness: mean sweep, rarefaction tail, maximal-covering rarity.

Sample i of degree d is always ``sample_pair(EnsembleSpec(d, "real", seed), i)``,
so every output is a function of the configuration alone.  Work is split
into fixed-size chunks of consecutive indices (the split does not depend on
the worker count), each chunk returns a histogram of real critical point
counts, and histograms are summed in chunk order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from ._backend import BACKEND
from .kostlan import EnsembleSpec, RejectionLog, sample_pair
from .poly import infinity_multiplicity
from .realroots import count_complex_critical, count_real_critical, is_squarefree

log = logging.getLogger(__name__)

DEFAULT_ELL_GRID = (0.5, 1.0, 1.5, 2.0, 2.5)
MAX_DEGREE = 500
WILSON_Z = 1.959963984540054  # standard normal 97.5% quantile


class RiemannHurwitzViolation(ArithmeticError):
    """A sample whose complex critical count differs from 2d - 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    degrees: tuple[int, ...] = (50, 100, 200, 400)
    samples: int = 2000
    master_seed: int = 42
    ell_grid: tuple[float, ...] = DEFAULT_ELL_GRID
    workers: int | None = None
    out_dir: str | None = None
    chunk: int = 250
    allow_large: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "ell_grid", tuple(float(x) for x in self.ell_grid))
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")
        big = [d for d in self.degrees if d > MAX_DEGREE]
        if big and not self.allow_large:
            raise ValueError(f"degrees {big} exceed the default cap {MAX_DEGREE}; pass allow_large")
        if big:
            log.warning("degrees %s above %d: root counting cost grows superquadratically", big, MAX_DEGREE)

    def resolved_workers(self) -> int:
        env = os.environ.get("KCOV_WORKERS")
        if env:
            return max(1, int(env))
        if self.workers:
            return max(1, self.workers)
        return os.cpu_count() or 1

    def identity(self) -> dict:
        """The part of the configuration that determines the results."""
        d = asdict(self)
        for k in ("workers", "out_dir", "allow_large"):
            d.pop(k)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# -- sampling core -----------------------------------------------------------


@dataclass
class ChunkResult:
    histogram: list[int]
    common_zero: int = 0
    dependent: int = 0
    nonsimple: int = 0
    roots_at_infinity: int = 0
    checked: int = 0


def _count_chunk(d: int, seed: int, lo: int, hi: int, check_simple: bool) -> ChunkResult:
    spec = EnsembleSpec(d, "real", seed)
    rej = RejectionLog()
    hist = [0] * (max(2 * d - 2, 0) + 1)
    res = ChunkResult(hist)
    for i in range(lo, hi):
        pair = sample_pair(spec, i, rej)
        n_complex = count_complex_critical(pair)
        if n_complex != 2 * d - 2:
            raise RiemannHurwitzViolation(f"d={d} seed={seed} index={i}: {n_complex} complex critical points")
        n_real = count_real_critical(pair)
        hist[n_real] += 1
        res.checked += 1
        m_inf = infinity_multiplicity(pair)
        if m_inf:
            res.roots_at_infinity += 1
        if check_simple and d >= 2:
            w = pair.wronskian
            if m_inf > 1 or (w.exact_degree >= 2 and not is_squarefree(w)):
                res.nonsimple += 1
                log.info("d=%d index=%d has a multiple critical point", d, i)
    res.common_zero = rej.common_zero
    res.dependent = rej.dependent
    return res


@dataclass
class DegreeCounts:
    d: int
    histogram: np.ndarray
    common_zero: int = 0
    dependent: int = 0
    nonsimple: int = 0
    roots_at_infinity: int = 0
    checked: int = 0

    @property
    def n(self) -> int:
        return int(self.histogram.sum())

    def mean(self) -> float:
        k = np.arange(len(self.histogram))
        return float((k * self.histogram).sum() / self.n)

    def se(self) -> float:
        k = np.arange(len(self.histogram), dtype=np.float64)
        n = self.n
        m = (k * self.histogram).sum() / n
        var = ((k - m) ** 2 * self.histogram).sum() / (n - 1) if n > 1 else 0.0
        return float(math.sqrt(var / n))

    def at_least(self, t: int) -> int:
        if t <= 0:
            return self.n
        return int(self.histogram[t:].sum()) if t < len(self.histogram) else 0


def collect_counts(
    d: int,
    N: int,
    seed: int,
    workers: int = 1,
    chunk: int = 250,
    check_simple: bool = False,
    start: int = 0,
) -> DegreeCounts:
    """Histogram of real critical point counts over indices start..start+N-1."""
    bounds = [(lo, min(lo + chunk, start + N)) for lo in range(start, start + N, chunk)]
    if workers <= 1 or len(bounds) == 1:
        results = [_count_chunk(d, seed, lo, hi, check_simple) for lo, hi in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_count_chunk, d, seed, lo, hi, check_simple) for lo, hi in bounds]
            results = [f.result() for f in futs]
    hist = np.zeros(max(2 * d - 2, 0) + 1, dtype=np.int64)
    out = DegreeCounts(d, hist)
    for r in results:
        hist += np.asarray(r.histogram, dtype=np.int64)
        out.common_zero += r.common_zero
        out.dependent += r.dependent
        out.nonsimple += r.nonsimple
        out.roots_at_infinity += r.roots_at_infinity
        out.checked += r.checked
    return out


# -- statistics --------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    z2 = z * z
    den = 1.0 + z2 / n
    mid = (p + z2 / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den
    # the endpoints are exactly 0 and 1 at k = 0 and k = n; rounding would blur that
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


def kac_rice_expected_real_critical(d: int) -> float:
    """E #(real critical points) for a pair of independent Kostlan polynomials.

    The Kac-Rice density of zeros of the Wronskian on RP^1 is constant in
    the FS arc length, with total sqrt(2(d-1)); it agrees with
    sqrt(2/pi) * length(RP^1) * sqrt(d - 1) for the mass-1 length sqrt(pi).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.sqrt(2.0 * (d - 1))


def exceedance_threshold(ell: float, d: int) -> int:
    """ceil(ell * sqrt(d)) computed exactly from the decimal value of ell."""
    if ell <= 0:
        return 0
    q = Fraction(repr(float(ell))) ** 2 * d
    k = math.isqrt(q.numerator // q.denominator)
    while Fraction(k * k) < q:
        k += 1
    while k > 0 and Fraction((k - 1) ** 2) >= q:
        k -= 1
    return k


def parse_ell_grid(text: str) -> tuple[float, ...]:
    """'0.5:2.5:0.25' (inclusive) or '0.5,1,1.5'."""
    if ":" in text:
        a, b, s = (Fraction(t) for t in text.split(":"))
        if s <= 0:
            raise ValueError("step must be positive")
        out = []
        x = a
        while x <= b:
            out.append(float(x))
            x += s
        return tuple(out)
    return tuple(float(t) for t in text.split(","))


def parse_degrees(text: str) -> tuple[int, ...]:
    """'25,50,100' or the inclusive range '2:6'."""
    if ":" in text:
        a, b = (int(t) for t in text.split(":"))
        return tuple(range(a, b + 1))
    return tuple(int(t) for t in text.split(","))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least squares y = slope x + intercept; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# -- reports -----------------------------------------------------------------


@dataclass
class SweepRow:
    d: int
    n: int
    mean: float
    se: float
    mean_over_sqrt_d: float


@dataclass
class SweepReport:
    rows: list[SweepRow]
    limit: float | None
    slope: float | None
    rejections: dict
    checked: int
    kac_rice: list[float] = field(default_factory=list)

    @property
    def differences(self) -> list[float]:
        v = [r.mean_over_sqrt_d for r in self.rows]
        return [abs(b - a) for a, b in zip(v, v[1:])]

    @property
    def differences_decreasing(self) -> bool:
        diff = self.differences
        return all(b < a for a, b in zip(diff, diff[1:]))

    def to_json(self) -> dict:
        out = asdict(self)
        out["differences"] = self.differences
        out["differences_decreasing"] = self.differences_decreasing
        return out


@dataclass
class TailRow:
    ell: float
    threshold: int
    hits: int
    n: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    below_regime: bool = False
    impossible: bool = False


@dataclass
class TailReport:
    d: int
    rows: list[TailRow]
    slope: float | None
    intercept: float | None
    r2: float | None
    fit_rows: int
    rejections: dict
    checked: int

    @property
    def monotone(self) -> bool:
        p = [r.p_hat for r in self.rows]
        return all(b <= a for a, b in zip(p, p[1:]))

    def to_json(self) -> dict:
        out = asdict(self)
        out["monotone"] = self.monotone
        return out


@dataclass
class MaximalReport:
    d: int
    hits: int
    n: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    nonsimple: int
    checked: int

    def to_json(self) -> dict:
        return asdict(self)


def _rejections(c: DegreeCounts) -> dict:
    return {"common_zero": c.common_zero, "dependent": c.dependent}


def sweep_mean(config: ExperimentConfig) -> SweepReport:
    """mean number of real critical points per degree, with the 1/sqrt(d) extrapolation."""
    if any(d < 2 for d in config.degrees):
        raise ValueError("sweep degrees must be >= 2")
    if config.samples < 100:
        raise ValueError("sweep needs at least 100 samples per degree")
    w = config.resolved_workers()
    rows = []
    rej = {"common_zero": 0, "dependent": 0}
    checked = 0
    for d in config.degrees:
        c = collect_counts(d, config.samples, config.master_seed, w, config.chunk)
        m = c.mean()
        rows.append(SweepRow(d, c.n, m, c.se(), m / math.sqrt(d)))
        for k, v in _rejections(c).items():
            rej[k] += v
        checked += c.checked
    limit = slope = None
    if len(rows) >= 2:
        slope, limit, _ = linear_fit([1 / math.sqrt(r.d) for r in rows], [r.mean_over_sqrt_d for r in rows])
    kr = [kac_rice_expected_real_critical(r.d) for r in rows]
    return SweepReport(rows, limit, slope, rej, checked, kr)


def tail_from_counts(c: DegreeCounts, ell_grid: Iterable[float]) -> TailReport:
    d = c.d
    n = c.n
    regime = math.log(d) / math.sqrt(d) if d > 1 else 0.0
    rows = []
    for ell in ell_grid:
        t = exceedance_threshold(ell, d)
        impossible = t > 2 * d - 2
        hits = 0 if impossible else c.at_least(t)
        lo, hi = wilson_interval(hits, n)
        rows.append(TailRow(ell, t, hits, n, hits / n, lo, hi, ell < regime, impossible))
    use = [r for r in rows if r.hits >= 10 and not r.impossible]
    slope = intercept = r2 = None
    if len(use) >= 2:
        slope, intercept, r2 = linear_fit([r.ell**2 for r in use], [math.log(r.p_hat) for r in use])
    return TailReport(d, rows, slope, intercept, r2, len(use), _rejections(c), c.checked)


def tail_estimate(config: ExperimentConfig, d: int) -> TailReport:
    """P[#real critical >= ceil(ell sqrt d)] on the ell grid, and the log p vs ell^2 fit."""
    for ell in config.ell_grid:
        if ell < 0 or (d > 1 and ell > (2 * d - 2) / math.sqrt(d)):
            log.warning("ell=%g outside [0, (2d-2)/sqrt d]; reported as structurally impossible", ell)
    c = collect_counts(d, config.samples, config.master_seed, config.resolved_workers(), config.chunk)
    return tail_from_counts(c, config.ell_grid)


def maximal_from_counts(c: DegreeCounts) -> MaximalReport:
    top = 2 * c.d - 2
    hits = c.at_least(top) if top > 0 else c.n
    lo, hi = wilson_interval(hits, c.n)
    return MaximalReport(c.d, hits, c.n, hits / c.n, lo, hi, c.nonsimple, c.checked)


def maximal_frequency(config: ExperimentConfig, d: int) -> MaximalReport:
    """Fraction of samples whose 2d - 2 critical points are all real and distinct."""
    c = collect_counts(d, config.samples, config.master_seed, config.resolved_workers(), config.chunk, True)
    if c.nonsimple:
        log.warning("d=%d: %d samples with a multiple critical point", d, c.nonsimple)
    return maximal_from_counts(c)


# -- emission ----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _svg_tail(rep: TailReport) -> str:
    pts = [(r.ell**2, math.log(r.p_hat)) for r in rep.rows if r.hits > 0]
    W, H, pad = 480, 360, 50
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}"></svg>\n'
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = 0.0, max(xs) * 1.05 or 1.0
    y0, y1 = min(ys) - 0.5, max(0.0, max(ys)) + 0.25

    def px(x: float) -> float:
        return pad + (x - x0) / (x1 - x0) * (W - 2 * pad)

    def py(y: float) -> float:
        return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle">ell^2</text>',
        f'<text x="14" y="{H / 2:.1f}" transform="rotate(-90 14 {H / 2:.1f})" text-anchor="middle">log p_hat</text>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle">tail, d = {rep.d}</text>',
    ]
    for r in rep.rows:
        if r.hits == 0:
            continue
        x = px(r.ell**2)
        lo = math.log(r.ci_lo) if r.ci_lo > 0 else y0
        out.append(f'<line x1="{x:.2f}" y1="{py(lo):.2f}" x2="{x:.2f}" y2="{py(math.log(r.ci_hi)):.2f}" stroke="gray"/>')
        out.append(f'<circle cx="{x:.2f}" cy="{py(math.log(r.p_hat)):.2f}" r="3" fill="black"/>')
    if rep.slope is not None:
        a, b = x0, x1
        out.append(
            f'<line x1="{px(a):.2f}" y1="{py(rep.slope * a + rep.intercept):.2f}" '
            f'x2="{px(b):.2f}" y2="{py(rep.slope * b + rep.intercept):.2f}" stroke="steelblue" stroke-dasharray="4 3"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report, out_dir: str | os.PathLike, config: ExperimentConfig | None = None, wall: float | None = None) -> list[Path]:
    """Write CSV + JSON (and .dat/.svg for tails); timing goes only to meta.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out}: {e}") from e
    written = []
    if isinstance(report, SweepReport):
        stem = "sweep"
        text = _csv(("d", "n", "mean", "se", "mean_over_sqrt_d"), [astuple_row(r) for r in report.rows])
        _write(out / "sweep.csv", text)
        written.append(out / "sweep.csv")
    elif isinstance(report, TailReport):
        stem = f"tail_d{report.d}"
        rows = [(r.ell, r.threshold, r.hits, r.n, r.p_hat, r.ci_lo, r.ci_hi) for r in report.rows]
        _write(out / f"{stem}.csv", _csv(("ell", "threshold", "hits", "n", "p_hat", "ci_lo", "ci_hi"), rows))
        dat = ["# ell ell2 log_p_hat log_ci_lo log_ci_hi hits"]
        for r in report.rows:
            if r.hits:
                lo = math.log(r.ci_lo) if r.ci_lo > 0 else float("-inf")
                dat.append(f"{r.ell!r} {r.ell**2!r} {math.log(r.p_hat)!r} {lo!r} {math.log(r.ci_hi)!r} {r.hits}")
        _write(out / f"{stem}.dat", "\n".join(dat) + "\n")
        _write(out / f"{stem}.svg", _svg_tail(report))
        written += [out / f"{stem}.csv", out / f"{stem}.dat", out / f"{stem}.svg"]
    elif isinstance(report, list) and report and isinstance(report[0], MaximalReport):
        stem = "maximal"
        rows = [(r.d, r.hits, r.n, r.p_hat, r.ci_lo, r.ci_hi) for r in report]
        _write(out / "maximal.csv", _csv(("d", "hits", "n", "p_hat", "ci_lo", "ci_hi"), rows))
        written.append(out / "maximal.csv")
    else:
        raise TypeError(f"cannot emit {type(report).__name__}")
    payload = [r.to_json() for r in report] if isinstance(report, list) else report.to_json()
    _write(out / f"{stem}.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(out / f"{stem}.json")
    if config is not None:
        meta = {
            "version": __version__,
            "backend": BACKEND,
            "config": config.identity(),
            "config_hash": config.digest(),
            "workers": config.resolved_workers(),
            "wall_seconds": wall,
            "python": platform.python_version(),
            "rejections": _collect_rejections(report),
        }
        _write(out / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(out / "meta.json")
    return written


def astuple_row(r: SweepRow) -> tuple:
    return (r.d, r.n, r.mean, r.se, r.mean_over_sqrt_d)


def _collect_rejections(report) -> dict:
    if isinstance(report, list):
        return {"nonsimple": sum(r.nonsimple for r in report)}
    return dict(report.rejections)


def run_timed(fn, *args):
    t = time.perf_counter()
    res = fn(*args)
    return res, time.perf_counter() - t


def with_workers(config: ExperimentConfig, workers: int) -> ExperimentConfig:
    return replace(config, workers=workers)
