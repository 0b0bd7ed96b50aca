"""Brute-force observables from the exact multi-bin output state.

Everything here goes through ``build_pulse_train_state`` and the generic
Fock-space observables; nothing reuses the closed forms except
``verify_analytic``, which compares the two.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import analytic
from .fock import (
    DEFAULT_CUTOFF,
    MixedState,
    ModeLabel,
    expectation_number,
    normally_ordered_moment,
    occupation_distribution,
    partial_trace,
)
from .interferometer import MAX_EXACT_BINS, CapacityError, MziConfig, build_pulse_train_state
from .seed import SeedSpec, seed_mixed

THREADS_ENV = "TIMEBIN_THREADS"


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    theta: float
    phi: float
    delta: Optional[int]
    exact: float
    analytic: Optional[float] = None
    deviation: Optional[float] = None

    @classmethod
    def make(cls, quantity, theta, phi, delta, exact, analytic_value=None) -> "OracleReport":
        dev = None if analytic_value is None else abs(exact - analytic_value)
        return cls(quantity, theta, phi, delta, exact, analytic_value, dev)


class PulseTrain:
    """An exact pulse-train state with observables on its interior bins.

    Interior bins are ``1 .. n_bins-1``; correlators are averaged over every
    pair of interior bins at the requested offset.
    """

    def __init__(self, seed: MixedState, cfg: MziConfig, n_bins: int, cutoff: int = DEFAULT_CUTOFF):
        if n_bins > MAX_EXACT_BINS:
            raise CapacityError(f"exact enumeration limited to {MAX_EXACT_BINS} bins")
        self.n_bins = n_bins
        self.state = build_pulse_train_state(n_bins, seed, cfg, cutoff)
        self.interior = list(range(1, n_bins))

    def _bins_for(self, offsets: Sequence[int]) -> list[int]:
        lo, hi = min(0, *offsets), max(0, *offsets)
        starts = [i for i in self.interior if i + lo >= 1 and i + hi <= self.n_bins - 1]
        if not starts:
            raise CapacityError(f"offsets {tuple(offsets)} need more than {self.n_bins} bins")
        return starts

    def population(self, output: str = "e") -> float:
        vals = [expectation_number(partial_trace(self.state, [ModeLabel(output, i)]), ModeLabel(output, i))
                for i in self.interior]
        return sum(vals) / len(vals)

    def correlation(self, outputs: Sequence[str], offsets: Sequence[int]) -> float:
        """Normalized correlation of ``outputs[k]`` at bin ``i + offsets[k]``, averaged over i."""
        vals = []
        for i in self._bins_for(offsets):
            ms = [ModeLabel(x, i + o) for x, o in zip(outputs, offsets)]
            reduced = partial_trace(self.state, set(ms))
            den = math.prod(expectation_number(reduced, m) for m in ms)
            if den == 0.0:
                raise analytic.UndefinedCorrelationError("zero population in a correlated mode")
            vals.append(normally_ordered_moment(reduced, ms) / den)
        return sum(vals) / len(vals)

    def photon_dist(self, output: str = "e", nmax: int = 3) -> tuple[float, ...]:
        acc = [0.0] * (nmax + 1)
        for i in self.interior:
            m = ModeLabel(output, i)
            dist = occupation_distribution(partial_trace(self.state, [m]), [m])
            for (n,), p in dist.items():
                if n <= nmax:
                    acc[n] += p
        return tuple(a / len(self.interior) for a in acc)


def _train(seed, cfg, n_bins) -> PulseTrain:
    return PulseTrain(seed, cfg, n_bins, max(seed.cutoff, 2))


def exact_population(seed: MixedState, cfg: MziConfig, n_bins: int = 4, output: str = "e") -> float:
    if not 3 <= n_bins <= MAX_EXACT_BINS:
        raise CapacityError(f"n_bins must lie in [3, {MAX_EXACT_BINS}]")
    return _train(seed, cfg, n_bins).population(output)


def exact_g2(seed: MixedState, cfg: MziConfig, delta: int, outputs: Sequence[str] = ("e", "e"),
             n_bins: Optional[int] = None) -> float:
    """Normalized g2 with ``delta = i - j`` for x at bin i and y at bin j."""
    n_bins = abs(delta) + 4 if n_bins is None else n_bins
    if n_bins < abs(delta) + 3:
        raise CapacityError("n_bins must be at least |delta| + 3")
    x, y = outputs
    return _train(seed, cfg, n_bins).correlation((x, y), (delta, 0))


def exact_g3(seed: MixedState, cfg: MziConfig, delta1: int, delta2: int, output: str = "e",
             n_bins: Optional[int] = None) -> float:
    """Normalized third-order correlation at bins (i, i + delta1, i + delta2) of one output."""
    span = max(abs(delta1), abs(delta2), abs(delta1 - delta2))
    n_bins = span + 4 if n_bins is None else n_bins
    if n_bins < span + 3:
        raise CapacityError("n_bins must be at least max|delta| + 3")
    return _train(seed, cfg, n_bins).correlation((output,) * 3, (0, delta1, delta2))


def exact_photon_dist(seed: MixedState, cfg: MziConfig, n_bins: int = 4,
                      output: str = "e") -> tuple[float, float, float, float]:
    if not 3 <= n_bins <= MAX_EXACT_BINS:
        raise CapacityError(f"n_bins must lie in [3, {MAX_EXACT_BINS}]")
    return _train(seed, cfg, n_bins).photon_dist(output, 3)


# analytic cross-check ----------------------------------------------------------

@dataclass(frozen=True)
class VerificationGrid:
    """Points (theta, phi) in radians and offsets to compare.

    ``purity < 1`` makes every report exact-only, as no closed form exists.
    """

    thetas: Sequence[float]
    phis: Sequence[float]
    deltas: Sequence[int] = (0, 1, 2)
    purity: float = 1.0

    def points(self) -> list[tuple[float, float]]:
        return [(t, p) for t in self.thetas for p in self.phis]

    def __len__(self):
        return len(self.thetas) * len(self.phis)


ACCEPTANCE_GRID = VerificationGrid(
    thetas=tuple(math.pi * t for t in (0.25, 0.5, 0.75, 1.0)),
    phis=tuple(math.pi * p for p in (0.0, 0.12, 0.5, 0.87, 1.0)),
)


def _reports_at(theta: float, phi: float, deltas: Sequence[int], purity: float) -> list[OracleReport]:
    seed = seed_mixed(SeedSpec(theta, purity=purity))
    cfg = MziConfig(phase=phi)
    n_bins = max(abs(d) for d in deltas) + 4
    train = _train(seed, cfg, n_bins)
    pure = purity == 1.0

    def ref(fn, *args):
        return fn(*args) if pure else None

    out = [
        OracleReport.make("population_e", theta, phi, None, train.population("e"),
                          ref(analytic.population, theta, phi, "e")),
        OracleReport.make("population_f", theta, phi, None, train.population("f"),
                          ref(analytic.population, theta, phi, "f")),
    ]
    dist = train.photon_dist("e", 3)
    ana = ref(analytic.probs_single, theta, phi)
    for n in range(3):
        out.append(OracleReport.make(f"P{n}", theta, phi, None, dist[n], None if ana is None else ana[n]))
    out.append(OracleReport.make("P3", theta, phi, None, dist[3], 0.0 if pure else None))
    if seed_mixed(SeedSpec(theta)).probabilities()[1] == 0.0:
        return out
    for d in deltas:
        out.append(OracleReport.make("g2_ee", theta, phi, d, train.correlation(("e", "e"), (d, 0)),
                                     ref(analytic.g2_auto, theta, phi, d, "e")))
        out.append(OracleReport.make("g2_ff", theta, phi, d, train.correlation(("f", "f"), (d, 0)),
                                     ref(analytic.g2_auto, theta, phi, d, "f")))
        out.append(OracleReport.make("g2_ef", theta, phi, d, train.correlation(("e", "f"), (d, 0)),
                                     ref(analytic.g2_cross, theta, phi, d)))
    return out


def _reports_star(args):
    return _reports_at(*args)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def verify_analytic(grid: VerificationGrid, tolerance: float = 1e-10,
                    threads: Optional[int] = None) -> list[OracleReport]:
    """One report per (quantity, point), in grid order."""
    if len(grid) == 0:
        raise ValueError("verification grid is empty")
    threads = default_threads() if threads is None else threads
    jobs = [(t, p, tuple(grid.deltas), grid.purity) for t, p in grid.points()]
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            chunks = list(pool.map(_reports_star, jobs))
    else:
        chunks = [_reports_at(*j) for j in jobs]
    return [r for chunk in chunks for r in chunk]


def failures(reports: Iterable[OracleReport], tolerance: float = 1e-10) -> list[OracleReport]:
    return [r for r in reports if r.deviation is not None and r.deviation > tolerance]
