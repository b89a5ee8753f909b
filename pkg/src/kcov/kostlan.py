"""Kostlan ensembles on CP^1 and the conditioned pair sampler.

Seeding: every sample index owns an independent splitmix64 stream whose
start is ``fmix64(key + GOLDEN*(index+1))``, where ``key`` mixes the master
seed with the ensemble tag (degree, field).  Gaussians come from the
Box-Muller transform applied to consecutive pairs of 53-bit uniforms,
u1 in (0, 1] and u2 in [0, 1): g = sqrt(-2 log u1) * (cos 2 pi u2, sin 2 pi u2).
Coefficients are a_k = g_k * sqrt(C(d, k)) rounded once to double, then
held exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .poly import CoveringPair, DegenerateWronskian, Provenance, RealPoly, gcd_is_constant

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
RETRY_MIX = 0xD1B54A32D192ED03
MAX_REJECTIONS = 100
EXACT_SQRT_MAX_DEGREE = 1000

fmix64 = kernels.fmix64


@dataclass(frozen=True)
class EnsembleSpec:
    degree: int
    field: str = "real"
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")

    @property
    def key(self) -> int:
        tag = (self.degree << 1) | (1 if self.field == "complex" else 0)
        return int(fmix64((self.master_seed ^ int(fmix64((tag + GOLDEN) & MASK64))) & MASK64))

    def sample_seed(self, index: int, attempt: int = 0) -> int:
        """Start of the stream for ``index``; a bijection of index for fixed spec."""
        if index < 0:
            raise ValueError("index must be >= 0")
        s = int(fmix64((self.key + GOLDEN * (index + 1)) & MASK64))
        if attempt:
            s = int(fmix64((s ^ int(fmix64((RETRY_MIX * attempt) & MASK64))) & MASK64))
        return s

    def seeds(self, indices) -> np.ndarray:
        return np.array([self.sample_seed(int(i)) for i in indices], dtype=np.uint64)


def _sqrt_int_rounded(n: int) -> float:
    """sqrt(n) correctly rounded to double, for a positive integer n."""
    shift = max(0, 120 - n.bit_length()) // 2 + 1
    m = n << (2 * shift)
    r = math.isqrt(m)
    if r * r != m:
        # sticky bit: r has > 60 significant bits, so no false ties
        r = (r << 1) | 1
        shift += 1
    return math.ldexp(float(r), -shift)


def log_binomial(d: int, k: int) -> float:
    return math.lgamma(d + 1) - math.lgamma(k + 1) - math.lgamma(d - k + 1)


@lru_cache(maxsize=64)
def sqrt_binomials(d: int) -> tuple[float, ...]:
    """sqrt(C(d, k)) for k = 0..d.

    Exact integer square roots (correctly rounded) up to d = 1000, and
    exp(log-binomial / 2) beyond, where C(d, k) no longer fits a double.
    """
    if d <= EXACT_SQRT_MAX_DEGREE:
        return tuple(_sqrt_int_rounded(math.comb(d, k)) for k in range(d + 1))
    return tuple(math.exp(0.5 * log_binomial(d, k)) for k in range(d + 1))


def sqrt_binomials_lgamma(d: int) -> tuple[float, ...]:
    return tuple(math.exp(0.5 * log_binomial(d, k)) for k in range(d + 1))


def real_coefficients(spec: EnsembleSpec, index: int, attempt: int = 0, count: int = 1) -> np.ndarray:
    """Float Kostlan coefficients for ``count`` consecutive polynomials of one stream."""
    d = spec.degree
    g = kernels.gaussian_fill(spec.sample_seed(index, attempt), count * (d + 1))
    s = np.array(sqrt_binomials(d))
    return g.reshape(count, d + 1) * s


def sample_real_kostlan(spec: EnsembleSpec, index: int) -> RealPoly:
    """a_k = g_k sqrt(C(d, k)), g_k i.i.d. N(0, 1), held exactly."""
    if spec.field != "real":
        raise ValueError("sample_real_kostlan needs a real ensemble")
    a = real_coefficients(spec, index)[0]
    return RealPoly(a.tolist(), spec.degree)


def sample_complex_kostlan(spec: EnsembleSpec, index: int) -> np.ndarray:
    """Complex coefficients a_k = z_k sqrt(C(d, k)), Re z and Im z ~ N(0, 1/2)."""
    if spec.field != "complex":
        raise ValueError("sample_complex_kostlan needs a complex ensemble")
    d = spec.degree
    g = kernels.gaussian_fill(spec.sample_seed(index), 2 * (d + 1))
    s = np.array(sqrt_binomials(d)) * math.sqrt(0.5)
    return (g[0::2] * s) + 1j * (g[1::2] * s)


def _to_exact(a: np.ndarray, d: int) -> RealPoly:
    return RealPoly(a.tolist(), d)


@dataclass
class RejectionLog:
    """Running count of resampled draws (shared by a sampling run)."""

    common_zero: int = 0
    dependent: int = 0
    events: list | None = None

    @property
    def total(self) -> int:
        return self.common_zero + self.dependent

    def record(self, kind: str, index: int, attempt: int) -> None:
        if kind == "common_zero":
            self.common_zero += 1
        else:
            self.dependent += 1
        if self.events is None:
            self.events = []
        self.events.append((kind, index, attempt))
        log.warning("rejected %s draw at index %d attempt %d", kind, index, attempt)


def sample_pair(spec: EnsembleSpec, index: int, rejections: RejectionLog | None = None) -> CoveringPair:
    """Two independent real Kostlan polynomials with no common zero on CP^1.

    A draw with a common zero, or with p and q dependent, is replaced by the
    next attempt of the same index; after 100 consecutive rejections the
    sampler gives up, because that can only be a bug.
    """
    if spec.field != "real":
        raise ValueError("sample_pair needs a real ensemble")
    d = spec.degree
    if d < 1:
        raise ValueError("pairs need degree >= 1")
    for attempt in range(MAX_REJECTIONS):
        a = real_coefficients(spec, index, attempt, count=2)
        p = _to_exact(a[0], d)
        q = _to_exact(a[1], d)
        kind = _defect(p, q)
        if kind is None:
            prov = Provenance(spec.master_seed, index, attempt)
            pair = CoveringPair(p, q, d, prov, check=False)
            try:
                pair.wronskian
            except DegenerateWronskian:
                kind = "dependent"
            else:
                return pair
        if rejections is not None:
            rejections.record(kind, index, attempt)
        else:
            log.warning("rejected %s draw at index %d attempt %d", kind, index, attempt)
    raise RuntimeError(f"sample_pair: {MAX_REJECTIONS} consecutive rejections at index {index}; this is a bug")


def _defect(p: RealPoly, q: RealPoly) -> str | None:
    d = p.nominal_degree
    if p.numerators[d] == 0 and q.numerators[d] == 0:
        return "common_zero"
    if not gcd_is_constant(p.numerators, q.numerators):
        return "common_zero"
    return None


def gaussian_vectors(spec: EnsembleSpec, indices, width: int | None = None) -> np.ndarray:
    """Raw standard Gaussian vectors (first ``width`` draws of each stream)."""
    n = spec.degree + 1 if width is None else width
    return kernels.gaussian_block(spec.seeds(indices), n)
