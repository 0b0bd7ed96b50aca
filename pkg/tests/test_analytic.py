import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from timebin import analytic
from timebin.analytic import (
    UndefinedCorrelationError,
    accessible_ranges,
    correlation,
    fringe_visibility,
    g2_auto,
    g2_cross,
    landscape,
    population,
    probs,
    probs_hom,
    probs_single,
)

PI = math.pi
thetas = st.floats(0.0, PI)
driven = st.floats(0.01, PI)
phis = st.floats(-4 * PI, 4 * PI)

# values produced by the brute-force oracle (agreement < 1e-12)
G2_EE0_QUARTER_087 = 0.3144311577804855
G2_EE1_QUARTER_012 = 6.27987983083053
G2_EE1_QUARTER_087 = 0.573994494875485
N_E_QUARTER_0 = 0.01072330470336312
N_F_QUARTER_0 = 0.1357233047033631
G2_EF1_QUARTER_HALF = 1.176776695296637


def test_population_examples():
    for phi in (0.0, 1.0, 2.5):
        assert population(PI, phi, "e") == pytest.approx(0.5)
        assert population(PI, phi, "f") == pytest.approx(0.5)
    assert population(0.25 * PI, 0.0, "e") == pytest.approx(N_E_QUARTER_0, abs=1e-15)
    assert population(0.25 * PI, 0.0, "f") == pytest.approx(N_F_QUARTER_0, abs=1e-15)
    assert population(1.2, PI / 2, "e") == pytest.approx(math.sin(0.6) ** 2 / 2, abs=1e-15)
    with pytest.raises(ValueError):
        population(1.0, 0.0, "g")


def test_g2_auto_examples():
    assert g2_auto(PI, 0.3, 0) == pytest.approx(1.0)
    assert g2_auto(0.25 * PI, 0.87 * PI, 0) == pytest.approx(G2_EE0_QUARTER_087, abs=1e-13)
    assert g2_auto(0.25 * PI, 0.12 * PI, 1) == pytest.approx(G2_EE1_QUARTER_012, abs=1e-12)
    assert g2_auto(0.25 * PI, 0.12 * PI, -1) == pytest.approx(G2_EE1_QUARTER_012, abs=1e-12)
    assert g2_auto(0.25 * PI, 0.87 * PI, 1) == pytest.approx(G2_EE1_QUARTER_087, abs=1e-13)
    assert g2_auto(1.0, 1.0, 5) == 1.0


def test_g2_cross_examples():
    assert g2_cross(0.7, 1.3, 0) == 0.0
    assert g2_cross(PI, 0.4, 1) == pytest.approx(0.75)
    assert g2_cross(0.25 * PI, 0.5 * PI, 1) == pytest.approx(G2_EF1_QUARTER_HALF, abs=1e-13)
    assert g2_cross(1.0, 1.0, -3) == 1.0


def test_zero_area_correlations_raise():
    for fn in (lambda: g2_auto(0.0, 1.0, 0), lambda: g2_cross(0.0, 1.0, 1)):
        with pytest.raises(UndefinedCorrelationError):
            fn()


def test_correlation_kinds():
    assert correlation(1.0, 0.5, 0, "auto_f").value == g2_auto(1.0, 0.5, 0, "f")
    assert correlation(1.0, 0.5, 1, "cross").kind == "cross"
    with pytest.raises(ValueError):
        correlation(1.0, 0.5, 1, "triple")


def test_probs_single_examples():
    for phi in (0.0, 0.7, PI):
        assert probs_single(PI, phi) == pytest.approx((0.625, 0.25, 0.125), abs=1e-15)
    assert probs_single(0.0, 0.3) == pytest.approx((1.0, 0.0, 0.0))
    assert probs_single(2 * math.asin(math.sqrt(0.8)), PI)[0] == pytest.approx(0.6, abs=1e-12)


def test_probs_hom_examples():
    assert probs_hom(PI, 0.4) == pytest.approx((0.5, 0.0, 0.5), abs=1e-15)
    assert probs_hom(1.3, 0.0)[1] == pytest.approx(0.0, abs=1e-15)
    assert probs_hom(PI / 2, PI) == pytest.approx((0.375, 0.5, 0.125), abs=1e-12)
    with pytest.raises(ValueError):
        probs(1.0, 1.0, "triple_mzi")


def test_fringe_visibility_examples():
    assert fringe_visibility(PI) == pytest.approx(0.0, abs=1e-15)
    assert fringe_visibility(0.0) == 1.0
    assert fringe_visibility(0.25 * PI, 0.98, 0.9416) == pytest.approx(0.795, abs=0.005)


def test_landscape_examples():
    (pt,) = landscape([PI], [0.0], "single_mzi")
    assert (pt.P0, pt.P1, pt.P2) == pytest.approx((0.625, 0.25, 0.125))
    (pt,) = landscape([PI], [0.3 * PI], "dual_hom")
    assert (pt.P0, pt.P1, pt.P2) == pytest.approx((0.5, 0.0, 0.5))
    grid = landscape([0.1, 1.0, 2.0], [0.0, 1.0], "single_mzi")
    assert [(p.theta, p.phi) for p in grid][:2] == [(0.1, 0.0), (0.1, 1.0)]
    with pytest.raises(ValueError):
        landscape([], [0.0], "single_mzi")


@pytest.mark.parametrize("model,expected", [
    ("single_mzi", {"P0": (0.6, 1.0), "P1": (0.0, 1 / 3), "P2": (0.0, 0.125)}),
    ("dual_hom", {"P0": (1 / 3, 1.0), "P1": (0.0, 0.5), "P2": (0.0, 0.5)}),
])
def test_accessible_ranges(model, expected):
    got = accessible_ranges(model)
    for k, (lo, hi) in expected.items():
        assert got[k][0] == pytest.approx(lo, abs=1e-4)
        assert got[k][1] == pytest.approx(hi, abs=1e-4)


def test_p1_maximum_location():
    theta = 2 * math.asin(math.sqrt(2 / 3))
    assert probs_single(theta, PI)[1] == pytest.approx(1 / 3, abs=1e-12)


def test_ranges_resolution_floor():
    with pytest.raises(ValueError):
        accessible_ranges("single_mzi", 50)


@given(thetas, phis)
def test_probabilities_sum_to_one(theta, phi):
    for model in analytic.MODELS:
        p = probs(theta, phi, model)
        assert sum(p) == pytest.approx(1.0, abs=1e-12)
        assert all(-1e-15 <= x <= 1 + 1e-15 for x in p)


@given(driven, phis)
def test_g2_population_identity(theta, phi):
    n = population(theta, phi, "e")
    p2 = probs_single(theta, phi)[2]
    assert g2_auto(theta, phi, 0) * n * n == pytest.approx(2 * p2, abs=1e-12)


@given(thetas, phis)
def test_moment_identity(theta, phi):
    _, p1, p2 = probs_single(theta, phi)
    assert p1 == pytest.approx(population(theta, phi, "e") - 2 * p2, abs=1e-12)


@given(driven, phis, st.integers(-3, 3))
def test_periodicity_and_mirror(theta, phi, delta):
    assert g2_auto(theta, phi + 2 * PI, delta) == pytest.approx(g2_auto(theta, phi, delta), rel=1e-9)
    assert g2_auto(theta, phi, delta, "f") == pytest.approx(g2_auto(theta, phi + PI, delta, "e"), rel=1e-9)
    assert population(theta, phi, "f") == pytest.approx(population(theta, phi + PI, "e"), abs=1e-12)


@given(thetas, phis, phis)
def test_p2_is_phase_independent(theta, a, b):
    assert probs_single(theta, a)[2] == probs_single(theta, b)[2]


@given(driven, phis, st.integers(2, 50))
def test_far_delays_uncorrelated(theta, phi, delta):
    assert g2_auto(theta, phi, delta) == 1.0
    assert g2_cross(theta, phi, -delta) == 1.0
