"""Coincidence histograms, side-peak normalization and visibility estimators.

A coincidence at delay ``delta`` pairs a tag on detector A in bin ``i`` with
a tag on detector B in bin ``i + delta``. When both ends of a pair (or
triple) refer to the same detector at the same bin, only distinct tags are
paired, so a bin with ``k`` tags contributes ``k (k - 1)`` ordered pairs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .tagio import FormatError, TagStream, TimeTagRecord, as_stream

DEFAULT_WINDOW = (2, 20)


class DegenerateNormalizationError(ZeroDivisionError):
    """The side-peak baseline is zero, so nothing can be normalized."""


class FitError(RuntimeError):
    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3g})")
        self.residual = residual


Delay = Union[int, tuple[int, int]]


@dataclass
class CorrelationHistogram:
    order: int
    counts: dict
    detectors: tuple[int, ...]
    n_bins: int
    max_delta: int

    def __post_init__(self):
        if self.order not in (2, 3):
            raise ValueError("order must be 2 or 3")
        if len(self.detectors) != self.order:
            raise ValueError(f"order-{self.order} histogram needs {self.order} detector ids")
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be non-negative")

    def __getitem__(self, key: Delay) -> int:
        return self.counts[key]

    def merge(self, other: "CorrelationHistogram") -> "CorrelationHistogram":
        """Sum two histograms taken as independent experiments."""
        if (self.order, self.detectors, self.max_delta) != (other.order, other.detectors, other.max_delta):
            raise ValueError("histograms differ in order, detectors or delay range")
        counts = {k: self.counts[k] + other.counts[k] for k in self.counts}
        return CorrelationHistogram(self.order, counts, self.detectors, self.n_bins + other.n_bins,
                                    self.max_delta)

    __add__ = merge


def _check_max_delta(max_delta: int):
    if max_delta < 2:
        raise ValueError("max_delta must be at least 2")


def _dense(stream: TagStream, det: int) -> np.ndarray:
    return stream.counts_per_bin(det)


def _shifted(x: np.ndarray, idx: np.ndarray, shift: int) -> np.ndarray:
    j = idx + shift
    ok = (j >= 0) & (j < x.size)
    out = np.zeros(idx.size, dtype=np.int64)
    out[ok] = x[j[ok]]
    return out


def _falling(x: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(x)
    for r in range(k):
        out = out * (x - r)
    return out


def _coincidences(arrays: dict, keys: Sequence[tuple[int, int]], anchor: np.ndarray) -> int:
    """Sum over anchor bins of the product of tag counts at (detector, offset) keys."""
    prod = np.ones(anchor.size, dtype=np.int64)
    for (det, off), mult in Counter(keys).items():
        prod *= _falling(_shifted(arrays[det], anchor, off), mult)
    return int(prod.sum())


def g2_histogram(tags: Union[TagStream, Iterable[TimeTagRecord]], det_a: int, det_b: int,
                 max_delta: int = 20) -> CorrelationHistogram:
    _check_max_delta(max_delta)
    stream = as_stream(tags)
    arrays = {d: _dense(stream, d) for d in {det_a, det_b}}
    anchor = np.flatnonzero(arrays[det_a])
    counts = {d: _coincidences(arrays, [(det_a, 0), (det_b, d)], anchor)
              for d in range(-max_delta, max_delta + 1)}
    return CorrelationHistogram(2, counts, (det_a, det_b), stream.n_bins, max_delta)


def g3_histogram(tags: Union[TagStream, Iterable[TimeTagRecord]], det0: int, det1: int, det2: int,
                 max_delta: int = 20) -> CorrelationHistogram:
    """Triples (det0 at i, det1 at i + delta1, det2 at i + delta2)."""
    _check_max_delta(max_delta)
    stream = as_stream(tags)
    arrays = {d: _dense(stream, d) for d in {det0, det1, det2}}
    anchor = np.flatnonzero(arrays[det0])
    rng = range(-max_delta, max_delta + 1)
    counts = {(d1, d2): _coincidences(arrays, [(det0, 0), (det1, d1), (det2, d2)], anchor)
              for d1 in rng for d2 in rng}
    return CorrelationHistogram(3, counts, (det0, det1, det2), stream.n_bins, max_delta)


# normalization -----------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedCorrelations:
    g: dict
    baseline: float
    window: tuple[int, int]
    stderr: dict = field(default_factory=dict)
    order: int = 2

    def __getitem__(self, key: Delay) -> float:
        return self.g[key]


def _in_window(key: Delay, lo: int, hi: int) -> bool:
    if isinstance(key, tuple):
        d1, d2 = key
        # every pair of the three bins must be at least lo apart
        return min(abs(d1), abs(d2), abs(d1 - d2)) >= lo and max(abs(d1), abs(d2)) <= hi
    return lo <= abs(key) <= hi


def normalize_side_peaks(hist: CorrelationHistogram, window: tuple[int, int] = DEFAULT_WINDOW) -> NormalizedCorrelations:
    """Divide every cell by the mean count over uncorrelated delays in ``window``."""
    lo, hi = int(window[0]), int(window[1])
    if lo < 2 or hi < lo:
        raise ValueError(f"baseline window must satisfy 2 <= lo <= hi, got {window}")
    cells = [c for k, c in hist.counts.items() if _in_window(k, lo, hi)]
    if not cells:
        raise ValueError(f"window {window} selects no cells of a histogram with max_delta={hist.max_delta}")
    total = float(sum(cells))
    if total == 0.0:
        raise DegenerateNormalizationError("side-peak baseline is zero")
    baseline = total / len(cells)
    g, err = {}, {}
    for k, c in hist.counts.items():
        g[k] = c / baseline
        # Poisson errors on the cell and the pooled baseline; an empty cell gets one count of slack
        err[k] = g[k] * math.sqrt(1.0 / c + 1.0 / total) if c else 1.0 / baseline
    return NormalizedCorrelations(g, baseline, (lo, hi), err, hist.order)


def normalized_from_counts(counts: dict, baseline: float, window: tuple[int, int] = DEFAULT_WINDOW) -> NormalizedCorrelations:
    """Normalize externally reported coincidence counts against a known baseline."""
    if baseline <= 0:
        raise DegenerateNormalizationError("baseline must be positive")
    g = {k: c / baseline for k, c in counts.items()}
    return NormalizedCorrelations(g, float(baseline), tuple(window))


def hom_visibility(norm: NormalizedCorrelations) -> float:
    """Two-photon indistinguishability from the central cross-correlation peak."""
    if 0 not in norm.g:
        raise KeyError("normalized cross-correlation has no zero-delay entry")
    return 1.0 - 2.0 * norm.g[0]


# fringe scans ------------------------------------------------------------------

@dataclass(frozen=True)
class FringeFit:
    visibility: float
    offsets: tuple[float, float]
    amplitudes: tuple[float, float]
    residual: float


def _coverage_gap(phases: np.ndarray) -> float:
    p = np.sort(np.mod(phases, 2 * math.pi))
    gaps = np.diff(np.concatenate([p, [p[0] + 2 * math.pi]]))
    return float(gaps.max())


def fit_fringes(phases: Sequence[float], counts_e: Sequence[float], counts_f: Sequence[float]) -> FringeFit:
    """Least-squares ``a + b cos(phi) + c sin(phi)`` fit of both normalized outputs.

    Phases must cover the circle with no gap wider than pi/2.
    """
    ph = np.asarray(phases, dtype=float)
    ce = np.asarray(counts_e, dtype=float)
    cf = np.asarray(counts_f, dtype=float)
    if not (ph.shape == ce.shape == cf.shape) or ph.ndim != 1:
        raise ValueError("phases and count series must be 1-D and equally long")
    if ph.size < 3 or _coverage_gap(ph) > math.pi / 2 + 1e-12:
        raise FitError("phase samples do not cover a full fringe period")
    scale = ce.mean() + cf.mean()
    if not np.isfinite(scale) or scale <= 0:
        raise FitError("count series are empty or non-finite")
    design = np.column_stack([np.ones_like(ph), np.cos(ph), np.sin(ph)])
    y = np.column_stack([ce, cf]) / scale
    coef, res, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    if rank < 3 or not np.all(np.isfinite(coef)):
        raise FitError("sinusoid fit is rank deficient", resid)
    offsets = (float(coef[0, 0]), float(coef[0, 1]))
    amps = (float(math.hypot(coef[1, 0], coef[2, 0])), float(math.hypot(coef[1, 1], coef[2, 1])))
    v = (amps[0] + amps[1]) / (offsets[0] + offsets[1])
    return FringeFit(v, offsets, amps, resid)


def fringe_scan(phases: Sequence[float], counts_e: Sequence[float], counts_f: Sequence[float]) -> float:
    return fit_fringes(phases, counts_e, counts_f).visibility
