"""Timing of the compiled kernels against the pure-Python fallback."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .kostlan import EnsembleSpec, sample_pair
from .realroots import _scaled_floats


@dataclass
class BenchRow:
    kernel: str
    d: int
    backend: str
    median_ms: float
    result: str


def _median_ms(fn, repeats: int) -> tuple[float, object]:
    times = []
    out = None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return 1000.0 * statistics.median(times), out


def run_benchmark(degrees, samples: int = 20, seed: int = 1) -> list[BenchRow]:
    backends = {"python": _backend.get("python")}
    try:
        backends["cython"] = _backend.get("cython")
    except ImportError:
        pass
    rows = []
    for d in degrees:
        spec = EnsembleSpec(d, "real", seed)
        polys = []
        for i in range(samples):
            f = _scaled_floats(sample_pair(spec, i).wronskian.numerators)
            if f is not None and f[0] != 0.0:
                polys.append(f)
        seeds = spec.seeds(range(256))
        for name, k in backends.items():
            counts: list[int] = []

            def count_all():
                counts[:] = [k.certified_real_count(f) for f in polys]

            ms, _ = _median_ms(count_all, 3)
            rows.append(BenchRow("certified_real_count", d, name, ms / max(len(polys), 1), ",".join(map(str, counts))))
            ms, g = _median_ms(lambda: k.gaussian_block(seeds, 2 * (d + 1)), 3)
            rows.append(BenchRow("gaussian_block[256]", d, name, ms, f"{float(np.sum(g)):.17g}"))
    return rows


def format_table(rows: list[BenchRow]) -> str:
    lines = [f"{'kernel':<24}{'d':>5}{'backend':>9}{'median ms':>12}  same result"]
    ref = {}
    for r in rows:
        ref.setdefault((r.kernel, r.d), r.result)
    for r in rows:
        same = "yes" if ref[(r.kernel, r.d)] == r.result else "NO"
        lines.append(f"{r.kernel:<24}{r.d:>5}{r.backend:>9}{r.median_ms:>12.3f}  {same}")
    return "\n".join(lines)
