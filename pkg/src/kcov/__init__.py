"""Random real branched coverings of the projective line: Kostlan sampling,
exact real critical point counts, Fubini-Study jet geometry, log-moment
checks and the Monte Carlo harness."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .poly import CoveringPair, DegenerateWronskian, InvalidPair, RealPoly, mobius_act, pair_from_coeffs
from .kostlan import EnsembleSpec, sample_complex_kostlan, sample_pair, sample_real_kostlan
from .realroots import (
    SturmChain,
    count_complex_critical,
    count_real_critical,
    descartes_count_real,
    sturm_count_real,
)
from .geometry import PointCP1, bergman_kernel, dist_to_real_locus, fs_distance, jet_report, peak_sections

__all__ = [
    "BACKEND",
    "CoveringPair",
    "DegenerateWronskian",
    "EnsembleSpec",
    "InvalidPair",
    "PointCP1",
    "RealPoly",
    "SturmChain",
    "bergman_kernel",
    "count_complex_critical",
    "count_real_critical",
    "descartes_count_real",
    "dist_to_real_locus",
    "fs_distance",
    "jet_report",
    "mobius_act",
    "pair_from_coeffs",
    "peak_sections",
    "sample_complex_kostlan",
    "sample_pair",
    "sample_real_kostlan",
    "sturm_count_real",
]
