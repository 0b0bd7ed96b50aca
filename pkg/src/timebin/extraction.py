"""Photon-number probabilities from a detected rate and a measured g2(0).

Assumes no pulse carries three or more photons, so the mean photon number
and the second factorial moment fix P0, P1 and P2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlator import g2_histogram, normalize_side_peaks
from .fock import DEFAULT_CUTOFF
from .tagio import TagStream


class InconsistentInputError(ValueError):
    """The inputs imply a probability outside [0, 1]."""


class ImplausibleRateWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ExtractionInput:
    counts_per_second: float
    repetition_period: float
    total_efficiency: float
    g2_zero: float
    g3_zero: Optional[float] = None

    def __post_init__(self):
        if self.counts_per_second < 0 or self.repetition_period <= 0:
            raise ValueError("rate must be non-negative and repetition period positive")
        if not 0.0 < self.total_efficiency <= 1.0:
            raise ValueError("total_efficiency must lie in (0, 1]")
        if self.g2_zero < 0 or (self.g3_zero is not None and self.g3_zero < 0):
            raise ValueError("correlations must be non-negative")


@dataclass(frozen=True)
class ExtractedProbs:
    n: float
    P0: float
    P1: float
    P2: float
    P3_bound: Optional[float] = None

    def as_tuple(self) -> tuple[float, float, float]:
        return self.P0, self.P1, self.P2


def mean_photon(counts_per_second: float, repetition_period: float, total_efficiency: float,
                cutoff: int = DEFAULT_CUTOFF) -> float:
    if counts_per_second < 0 or repetition_period <= 0 or total_efficiency <= 0:
        raise ValueError("need counts_per_second >= 0, repetition_period > 0, total_efficiency > 0")
    n = counts_per_second * repetition_period / total_efficiency
    if n > 1.0:
        warnings.warn(f"mean photon number {n:.4g} per pulse exceeds one; check rate and efficiency "
                      f"(cutoff {cutoff})", ImplausibleRateWarning, stacklevel=2)
    return n


def probs_from_g2(n: float, g2_zero: float) -> ExtractedProbs:
    if n < 0 or g2_zero < 0:
        raise ValueError("n and g2_zero must be non-negative")
    p2 = 0.5 * n * n * g2_zero
    p1 = n - 2.0 * p2
    p0 = 1.0 - p1 - p2
    for name, p in (("P0", p0), ("P1", p1), ("P2", p2)):
        if not 0.0 <= p <= 1.0:
            raise InconsistentInputError(
                f"{name}={p:.6g} for n={n:.6g}, g2(0)={g2_zero:.6g}; three-photon events are not negligible")
    return ExtractedProbs(n, p0, p1, p2)


def p3_bound(n: float, g3_zero: float) -> float:
    """Upper bound on P3 from the third factorial moment, assuming P(>=4) = 0."""
    if n < 0 or g3_zero < 0:
        raise ValueError("n and g3_zero must be non-negative")
    return g3_zero * n ** 3 / 6.0


def extract(inp: ExtractionInput) -> ExtractedProbs:
    n = mean_photon(inp.counts_per_second, inp.repetition_period, inp.total_efficiency)
    out = probs_from_g2(n, inp.g2_zero)
    if inp.g3_zero is None:
        return out
    return ExtractedProbs(out.n, out.P0, out.P1, out.P2, p3_bound(n, inp.g3_zero))


def propagate_errors(n: float, g2_zero: float, sigma_n: float, sigma_g2: float,
                     covariance: float = 0.0) -> tuple[float, float, float]:
    """First-order standard errors of (P0, P1, P2) from those of n and g2(0)."""
    # gradients of (P0, P1, P2) with respect to (n, g2)
    grads = (
        (-1.0 + n * g2_zero, 0.5 * n * n),
        (1.0 - 2.0 * n * g2_zero, -n * n),
        (n * g2_zero, 0.5 * n * n),
    )
    out = []
    for dn, dg in grads:
        var = dn * dn * sigma_n ** 2 + dg * dg * sigma_g2 ** 2 + 2.0 * dn * dg * covariance
        out.append(math.sqrt(max(var, 0.0)))
    return tuple(out)


# estimates from tag streams ------------------------------------------------------

@dataclass(frozen=True)
class StreamEstimate:
    probs: ExtractedProbs
    stderr: tuple[float, float, float]
    g2_zero: float
    n_blocks: int


def _g2_zero(stream, det_a: int, det_b: int, window: tuple[int, int]) -> float:
    return normalize_side_peaks(g2_histogram(stream, det_a, det_b, window[1]), window)[0]


def estimate_from_stream(stream, det_a: int, det_b: int, efficiency: float, blocks: int = 20,
                         window: tuple[int, int] = (2, 20)) -> StreamEstimate:
    """P0, P1, P2 of the port feeding ``det_a`` and ``det_b``, with block-jackknife errors.

    The mean photon number comes from the tags on both detectors divided by
    ``efficiency``; g2(0) from their side-peak-normalized coincidences. Pass
    the same id twice for a single number-resolving detector.
    """
    if blocks < 2:
        raise ValueError("need at least two blocks")
    dets = {det_a, det_b}

    def estimate(s: TagStream) -> tuple[ExtractedProbs, float]:
        hits = int(np.isin(s.detector, list(dets)).sum())
        g2 = _g2_zero(s, det_a, det_b, window)
        return probs_from_g2(hits / (s.n_bins * efficiency), g2), g2

    full, g2 = estimate(stream)
    edges = np.linspace(0, stream.n_bins, blocks + 1).astype(np.int64)
    cut = np.searchsorted(stream.bin, edges)
    leave_out = []
    for k in range(blocks):
        keep = np.r_[0:cut[k], cut[k + 1]:len(stream)]
        width = edges[k + 1] - edges[k]
        b = stream.bin[keep]
        b = np.where(b >= edges[k + 1], b - width, b)
        leave_out.append(estimate(TagStream(stream.detector[keep], b, stream.n_bins - width))[0].as_tuple())
    arr = np.array(leave_out)
    var = (blocks - 1) / blocks * ((arr - arr.mean(axis=0)) ** 2).sum(axis=0)
    return StreamEstimate(full, tuple(float(x) for x in np.sqrt(var)), g2, blocks)
