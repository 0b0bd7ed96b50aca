"""Per-bin input states prepared by resonant driving, and the power calibration curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import DEFAULT_CUTOFF, MixedState, ModeLabel, PureState

SEED_MODE = ModeLabel("a", 0)
_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class SeedSpec:
    """Excitation parameters of the emitter.

    theta is the pulse area in radians. purity scales the vacuum/one-photon
    coherence, indistinguishability only enters the analytic fringe
    visibility, inversion_ceiling and damping only enter the Rabi curve.
    """

    theta: float
    purity: float = 1.0
    indistinguishability: float = 1.0
    inversion_ceiling: float = 1.0
    damping: float = 0.0

    def __post_init__(self):
        _check_theta(self.theta)
        for name in ("purity", "indistinguishability", "inversion_ceiling"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")

    @classmethod
    def from_pi_units(cls, theta_pi: float, **kw) -> "SeedSpec":
        return cls(theta=math.pi * theta_pi, **kw)


def _check_theta(theta: float) -> float:
    if not (-_ANGLE_TOL <= theta <= math.pi + _ANGLE_TOL) or math.isnan(theta):
        raise ValueError(f"pulse area must lie in [0, pi], got {theta}")
    return min(max(theta, 0.0), math.pi)


def seed_amplitudes(theta: float) -> tuple[float, float]:
    """(c0, c1) = (cos(theta/2), sin(theta/2))."""
    theta = _check_theta(theta)
    return math.cos(theta / 2), math.sin(theta / 2)


def seed_pure(theta: float, cutoff: int = DEFAULT_CUTOFF) -> MixedState:
    c0, c1 = seed_amplitudes(theta)
    return PureState((SEED_MODE,), {(0,): c0, (1,): c1}, cutoff).to_mixed()


def seed_mixed(seed: SeedSpec, cutoff: int = DEFAULT_CUTOFF) -> MixedState:
    """Seed with vacuum/one-photon coherence scaled by the purity factor."""
    if seed.purity == 1.0:
        return seed_pure(seed.theta, cutoff)
    c0, c1 = seed_amplitudes(seed.theta)
    coh = seed.purity * c0 * c1
    rho = np.array([[c0 * c0, coh], [coh, c1 * c1]], dtype=complex)
    return MixedState.from_matrix((SEED_MODE,), ((0,), (1,)), rho, cutoff)


def rabi_mean_photon(power_norm: float, inversion_ceiling: float = 1.0, damping: float = 0.0) -> float:
    """Mean photon number per pulse versus normalized excitation power.

    The pulse area grows as the square root of power, with power_norm = 1
    at a pi pulse. The damped curve is beta * (1 - cos(T) * exp(-gamma*T)) / 2.
    """
    if power_norm < 0 or not math.isfinite(power_norm):
        raise ValueError("power_norm must be finite and >= 0")
    theta = math.pi * math.sqrt(power_norm)
    return inversion_ceiling * (1.0 - math.cos(theta) * math.exp(-damping * theta)) / 2.0


def fit_rabi(power_norm, mean_photon, damping_guess: float = 0.05) -> tuple[float, float]:
    """Least-squares (inversion_ceiling, damping) for measured Rabi data."""
    from scipy.optimize import curve_fit

    p = np.asarray(power_norm, dtype=float)
    n = np.asarray(mean_photon, dtype=float)

    def model(x, beta, gamma):
        th = np.pi * np.sqrt(x)
        return beta * (1.0 - np.cos(th) * np.exp(-gamma * th)) / 2.0

    (beta, gamma), _ = curve_fit(model, p, n, p0=(float(n.max()), damping_guess),
                                 bounds=([0.0, 0.0], [1.0, np.inf]))
    return float(beta), float(gamma)
