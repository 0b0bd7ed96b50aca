import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from timebin.seed import SEED_MODE, SeedSpec, fit_rabi, rabi_mean_photon, seed_mixed, seed_pure

thetas = st.floats(0.0, math.pi)


def _diag(state):
    probs = dict(zip((b[0] for b in state.basis), state.probabilities()))
    return [probs.get(n, 0.0) for n in range(3)]


def test_pure_endpoints():
    assert _diag(seed_pure(0.0)) == pytest.approx([1, 0, 0])
    assert _diag(seed_pure(math.pi)) == pytest.approx([0, 1, 0], abs=1e-15)


def test_quarter_pi_populations():
    assert _diag(seed_pure(0.25 * math.pi))[:2] == pytest.approx([0.8535533905932737, 0.14644660940672624], abs=1e-12)


@pytest.mark.parametrize("theta", [-0.1, math.pi + 0.01, float("nan")])
def test_theta_out_of_range(theta):
    with pytest.raises(ValueError):
        seed_pure(theta)
    with pytest.raises(ValueError):
        SeedSpec(theta)


def test_seed_field_ranges():
    with pytest.raises(ValueError):
        SeedSpec(1.0, purity=1.2)
    with pytest.raises(ValueError):
        SeedSpec(1.0, damping=-1)
    assert SeedSpec.from_pi_units(0.5).theta == pytest.approx(math.pi / 2)


def test_mixed_pure_limit():
    a = seed_mixed(SeedSpec(0.7))
    b = seed_pure(0.7)
    np.testing.assert_allclose(a.dense()[1], b.dense()[1], atol=1e-14)


def test_fully_dephased():
    rho = seed_mixed(SeedSpec(math.pi / 2, purity=0.0))
    assert _diag(rho)[:2] == pytest.approx([0.5, 0.5])
    assert abs(rho.element((0,), (1,))) < 1e-15


def test_partial_coherence_value():
    rho = seed_mixed(SeedSpec(0.25 * math.pi, purity=0.98))
    # 0.98 * cos(pi/8) * sin(pi/8)
    assert rho.element((0,), (1,)).real == pytest.approx(0.3464823227814083, abs=1e-12)


@given(thetas, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_purity_monotone_in_lambda(theta, l1, l2):
    lo, hi = sorted((l1, l2))

    def purity(lam):
        m = seed_mixed(SeedSpec(theta, purity=lam)).matrix
        return float(np.real(np.trace(m @ m)))

    assert purity(lo) <= purity(hi) + 1e-12
    assert purity(1.0) == pytest.approx(1.0, abs=1e-12)


@given(thetas, st.floats(0.0, 1.0))
def test_no_two_photon_weight(theta, lam):
    rho = seed_mixed(SeedSpec(theta, purity=lam))
    assert all(b[0] <= 1 for b in rho.basis)
    assert rho.modes == (SEED_MODE,)


def test_rabi_examples():
    assert rabi_mean_photon(0.0) == 0.0
    assert rabi_mean_photon(1.0, 0.94, 0.0) == pytest.approx(0.94)
    assert rabi_mean_photon(1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rabi_mean_photon(-1.0)


@given(thetas)
def test_rabi_matches_seed_population(theta):
    p = (theta / math.pi) ** 2
    assert rabi_mean_photon(p) == pytest.approx(math.sin(theta / 2) ** 2, abs=1e-12)


def test_fit_rabi_recovers_parameters():
    x = np.linspace(0.05, 4.0, 40)
    y = [rabi_mean_photon(v, 0.94, 0.12) for v in x]
    beta, gamma = fit_rabi(x, y)
    assert beta == pytest.approx(0.94, abs=1e-6)
    assert gamma == pytest.approx(0.12, abs=1e-6)
