import math

import numpy as np
import pytest

from timebin import analytic
from timebin.correlator import (
    CorrelationHistogram,
    DegenerateNormalizationError,
    FitError,
    fit_fringes,
    fringe_scan,
    g2_histogram,
    g3_histogram,
    hom_visibility,
    normalize_side_peaks,
    normalized_from_counts,
)
from timebin.interferometer import MziConfig
from timebin.sampler import DetectorModel, RunConfig, SplitterTree, sample_stream
from timebin.seed import SeedSpec
from timebin.tagio import FormatError, TagStream, TimeTagRecord

PI = math.pi
PNR = DetectorModel(photon_number_resolving=True)


def _flat(order=2, value=100, max_delta=20):
    rng = range(-max_delta, max_delta + 1)
    keys = list(rng) if order == 2 else [(a, b) for a in rng for b in rng]
    return CorrelationHistogram(order, {k: value for k in keys}, (0,) * order, 1000, max_delta)


def test_empty_stream_histograms():
    h = g2_histogram(TagStream([], [], 10), 0, 1, 5)
    assert set(h.counts) == set(range(-5, 6)) and not any(h.counts.values())
    h3 = g3_histogram(TagStream([], [], 10), 0, 1, 2, 3)
    assert len(h3.counts) == 49 and not any(h3.counts.values())


def test_hand_enumerated_pairs():
    tags = [TimeTagRecord(0, 0), TimeTagRecord(0, 1), TimeTagRecord(1, 1)]
    h = g2_histogram(tags, 0, 1, 2)
    assert (h[0], h[1], h[-1]) == (1, 1, 0)


def test_same_detector_pairs_are_distinct_tags():
    s = TagStream([0, 0, 0, 0], [3, 3, 3, 4], 6)
    h = g2_histogram(s, 0, 0, 2)
    assert h[0] == 6  # 3 * 2 ordered pairs
    assert h[1] == 3 and h[-1] == 3


def test_triples_with_repeated_keys():
    s = TagStream([0, 0, 0], [2, 2, 2], 5)
    h = g3_histogram(s, 0, 0, 0, 2)
    assert h[(0, 0)] == 6


def test_unsorted_input_rejected():
    with pytest.raises(FormatError):
        g2_histogram([TimeTagRecord(0, 5), TimeTagRecord(1, 2)], 0, 1)


def test_max_delta_floor():
    with pytest.raises(ValueError):
        g2_histogram(TagStream([], []), 0, 1, 1)


def test_flat_normalization():
    norm = normalize_side_peaks(_flat())
    assert all(v == pytest.approx(1.0) for v in norm.g.values())
    norm3 = normalize_side_peaks(_flat(order=3, max_delta=6), (2, 6))
    assert norm3[(0, 0)] == pytest.approx(1.0)


def test_side_peak_examples():
    h = _flat(value=79_000)
    h.counts[0] = 389
    assert normalize_side_peaks(h)[0] == pytest.approx(0.0049, abs=5e-5)
    h.counts[0] = 79_000 * 19.1
    assert normalize_side_peaks(h)[0] == pytest.approx(19.1)


def test_window_excludes_correlated_cells():
    h = _flat()
    h.counts[1] = h.counts[-1] = 10_000
    assert normalize_side_peaks(h).baseline == pytest.approx(100.0)
    h3 = _flat(order=3, max_delta=5)
    h3.counts[(3, 4)] = 10_000  # delta1 - delta2 = -1: correlated pair inside the triple
    assert normalize_side_peaks(h3, (2, 5)).baseline == pytest.approx(100.0)


def test_normalization_errors():
    with pytest.raises(DegenerateNormalizationError):
        normalize_side_peaks(_flat(value=0))
    with pytest.raises(ValueError):
        normalize_side_peaks(_flat(), (1, 5))
    with pytest.raises(ValueError):
        normalize_side_peaks(_flat(max_delta=3), (4, 8))


def test_merge():
    a, b = _flat(value=1), _flat(value=2)
    m = a + b
    assert m[3] == 3 and m.n_bins == 2000
    with pytest.raises(ValueError):
        a.merge(_flat(max_delta=5))


def test_hom_visibility_examples():
    assert hom_visibility(normalized_from_counts({0: 5205}, 1.78e5)) == pytest.approx(0.9415, abs=1e-4)
    assert hom_visibility(normalized_from_counts({0: 0}, 10.0)) == 1.0
    assert hom_visibility(normalized_from_counts({0: 5}, 10.0)) == 0.0


def _eq6_series(theta, scale=1.0, n=64):
    phis = np.linspace(0, 2 * PI, n, endpoint=False)
    s2, c2 = math.sin(theta / 2) ** 2, math.cos(theta / 2) ** 2
    e = 0.5 * s2 * (1 - scale * c2 * np.cos(phis))
    f = 0.5 * s2 * (1 + scale * c2 * np.cos(phis))
    return phis, e, f


def test_fringe_scan_examples():
    assert fringe_scan(*_eq6_series(0.25 * PI)) == pytest.approx(math.cos(PI / 8) ** 2, abs=1e-12)
    assert fringe_scan(*_eq6_series(PI)) == pytest.approx(0.0, abs=1e-12)
    assert fringe_scan(*_eq6_series(0.25 * PI, 0.93)) == pytest.approx(0.794, abs=1e-3)


def test_fringe_scan_with_shifted_phase_and_counts():
    phis, e, f = _eq6_series(0.4 * PI, n=40)
    fit = fit_fringes(phis + 0.7, 1e5 * np.roll(e, 3), 1e5 * np.roll(f, 3))
    assert fit.visibility == pytest.approx(math.cos(0.2 * PI) ** 2, abs=1e-12)
    assert fit.residual < 1e-12


def test_fringe_scan_errors():
    phis, e, f = _eq6_series(1.0)
    with pytest.raises(FitError):
        fringe_scan(phis[:20], e[:20], f[:20])
    with pytest.raises(ValueError):
        fringe_scan(phis, e[:-1], f)
    with pytest.raises(FitError):
        fringe_scan(phis, 0 * e, 0 * f)


# pipeline closure ---------------------------------------------------------------

CLOSURE_POINTS = [(t, p) for t in (0.25, 0.5) for p in (0.12, 0.5, 0.87)]


@pytest.mark.slow
@pytest.mark.parametrize("theta_pi,phi_pi", CLOSURE_POINTS)
def test_pipeline_recovers_closed_forms(theta_pi, phi_pi):
    theta, phi = theta_pi * PI, phi_pi * PI
    run = RunConfig(1_000_000, rng_seed=int(1000 * theta_pi + phi_pi * 100))
    # number-resolving leaves of an HBT on e, plus one detector on f
    s = sample_stream(run, SeedSpec(theta), MziConfig(phase=phi), PNR, SplitterTree("hbt"))
    auto = normalize_side_peaks(g2_histogram(s, 0, 1))
    cross = normalize_side_peaks(g2_histogram(s, 0, 2))
    for d in (0, 1, -1):
        expected = analytic.g2_auto(theta, phi, d, "e")
        assert abs(auto[d] - expected) < 3 * auto.stderr[d], ("auto", d)
    for d in (1, -1):
        expected = analytic.g2_cross(theta, phi, d)
        assert abs(cross[d] - expected) < 3 * cross.stderr[d], ("cross", d)
    assert cross[0] == 0.0


@pytest.mark.slow
def test_baseline_invariance_in_efficiency():
    seed, cfg = SeedSpec(PI), MziConfig(phase=0.5)
    values = []
    for eta in (1.0, 0.1, 0.01):
        s = sample_stream(RunConfig(1_000_000, rng_seed=77), seed, cfg,
                          DetectorModel(eta, photon_number_resolving=True), SplitterTree("hbt"))
        norm = normalize_side_peaks(g2_histogram(s, 0, 1))
        values.append((norm[0], norm.stderr[0]))
    for g, se in values:
        assert abs(g - 1.0) < 3 * se


def test_hbt_histogram_symmetry():
    s = sample_stream(RunConfig(500_000, rng_seed=13), SeedSpec(0.5 * PI), MziConfig(phase=0.12 * PI),
                      DetectorModel(0.5), SplitterTree("hbt"))
    h = g2_histogram(s, 0, 1)
    for d in range(1, 6):
        a, b = h[d], h[-d]
        assert abs(a - b) < 4 * math.sqrt(a + b)


def test_g3_central_cell_empty_and_far_cells_linear():
    seed, cfg, tree = SeedSpec(PI), MziConfig(phase=0.3), SplitterTree("extended_hbt")
    totals = []
    for n in (200_000, 400_000):
        s = sample_stream(RunConfig(n, rng_seed=21), seed, cfg, DetectorModel(), tree)
        h = g3_histogram(s, 0, 1, 2, 6)
        assert h[(0, 0)] == 0
        totals.append(normalize_side_peaks(h, (2, 6)).baseline)
    assert totals[0] > 0
    ratio = totals[1] / totals[0]
    assert ratio == pytest.approx(2.0, rel=0.1)
