"""Closed-form populations, correlations and photon-number landscapes.

All formulas assume pure seeds and balanced splitters. Output ``f`` is
output ``e`` with the phase shifted by pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import minimize_scalar

from .seed import seed_amplitudes

MODELS = ("single_mzi", "dual_hom")


class UndefinedCorrelationError(ValueError):
    """Normalized correlation requested where every population vanishes."""


@dataclass(frozen=True)
class LandscapePoint:
    theta: float
    phi: float
    P0: float
    P1: float
    P2: float
    model: str


@dataclass(frozen=True)
class CorrelationPoint:
    theta: float
    phi: float
    delta: int
    value: float
    kind: str


def _c0sq(theta: float) -> float:
    c0, _ = seed_amplitudes(theta)
    return c0 * c0


def _s2(theta: float) -> float:
    _, c1 = seed_amplitudes(theta)
    return c1 * c1


def _output_phase(phi: float, output: str) -> float:
    if output == "e":
        return phi
    if output == "f":
        return phi + math.pi
    raise ValueError(f"output must be 'e' or 'f', got {output!r}")


def _require_driving(theta: float):
    if seed_amplitudes(theta)[1] == 0.0:
        raise UndefinedCorrelationError("correlations are 0/0 at zero pulse area")


def population(theta: float, phi: float, output: str = "e") -> float:
    phi = _output_phase(phi, output)
    return 0.5 * _s2(theta) * (1.0 - _c0sq(theta) * math.cos(phi))


def g2_auto(theta: float, phi: float, delta: int, output: str = "e") -> float:
    _require_driving(theta)
    phi = _output_phase(phi, output)
    c2 = _c0sq(theta)
    den = 1.0 - c2 * math.cos(phi)
    if delta == 0:
        return 1.0 / den ** 2
    if abs(delta) == 1:
        return (3.0 - 4.0 * c2 * math.cos(phi) + 2.0 * c2 * math.cos(2 * phi)) / (4.0 * den ** 2)
    return 1.0


def g2_cross(theta: float, phi: float, delta: int) -> float:
    _require_driving(theta)
    if delta == 0:
        return 0.0
    if abs(delta) == 1:
        c2 = _c0sq(theta)
        return (3.0 - 2.0 * c2 * math.cos(2 * phi)) / (4.0 * (1.0 - c2 * c2 * math.cos(phi) ** 2))
    return 1.0


def correlation(theta: float, phi: float, delta: int, kind: str) -> CorrelationPoint:
    if kind == "auto_e":
        v = g2_auto(theta, phi, delta, "e")
    elif kind == "auto_f":
        v = g2_auto(theta, phi, delta, "f")
    elif kind == "cross":
        v = g2_cross(theta, phi, delta)
    else:
        raise ValueError(f"unknown correlation kind {kind!r}")
    return CorrelationPoint(theta, phi, delta, v, kind)


def probs_single(theta: float, phi: float) -> tuple[float, float, float]:
    s2, c2 = _s2(theta), _c0sq(theta)
    p1 = 0.25 * s2 * s2 + 0.5 * s2 * c2 * (1.0 - math.cos(phi))
    p2 = 0.125 * s2 * s2
    return 1.0 - p1 - p2, p1, p2


def probs_hom(theta: float, phi: float) -> tuple[float, float, float]:
    s2, c2 = _s2(theta), _c0sq(theta)
    p1 = s2 * c2 * (1.0 - math.cos(phi))
    p2 = 0.5 * s2 * s2
    return 1.0 - p1 - p2, p1, p2


def probs(theta: float, phi: float, model: str) -> tuple[float, float, float]:
    if model == "single_mzi":
        return probs_single(theta, phi)
    if model == "dual_hom":
        return probs_hom(theta, phi)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def fringe_visibility(theta: float, purity: float = 1.0, indistinguishability: float = 1.0) -> float:
    c2 = _c0sq(theta)
    return purity ** 2 * math.sqrt(indistinguishability) * c2


def landscape(theta_grid: Iterable[float], phi_grid: Iterable[float], model: str) -> list[LandscapePoint]:
    thetas, phis = list(theta_grid), list(phi_grid)
    if not thetas or not phis:
        raise ValueError("landscape grids must be non-empty")
    out = []
    for th in thetas:
        for ph in phis:
            p0, p1, p2 = probs(th, ph, model)
            out.append(LandscapePoint(th, ph, p0, p1, p2, model))
    return out


def _refine(f, x0: float, y0: float, hx: float, hy: float, sweeps: int = 6) -> tuple[float, float, float]:
    """Alternate bounded 1-D minimizations inside the cell around (x0, y0)."""
    x, y = x0, y0
    xlo, xhi = max(0.0, x0 - hx), min(math.pi, x0 + hx)
    ylo, yhi = max(0.0, y0 - hy), min(2 * math.pi, y0 + hy)
    best = f(x, y)
    for _ in range(sweeps):
        rx = minimize_scalar(lambda t: f(t, y), bounds=(xlo, xhi), method="bounded",
                             options={"xatol": 1e-10})
        if rx.fun <= best:
            x, best = rx.x, rx.fun
        ry = minimize_scalar(lambda p: f(x, p), bounds=(ylo, yhi), method="bounded",
                             options={"xatol": 1e-10})
        if ry.fun <= best:
            y, best = ry.x, ry.fun
    return x, y, best


def accessible_ranges(model: str, resolution: int = 201) -> dict[str, tuple[float, float]]:
    """Extrema of P0, P1, P2 over theta in [0, pi], phi in [0, 2 pi]."""
    if resolution < 100:
        raise ValueError("resolution must be >= 100 points per axis")
    thetas = np.linspace(0.0, math.pi, resolution)
    phis = np.linspace(0.0, 2 * math.pi, resolution)
    grid = np.array([[probs(t, p, model) for p in phis] for t in thetas])
    hx, hy = thetas[1] - thetas[0], phis[1] - phis[0]
    out = {}
    for k, name in enumerate(("P0", "P1", "P2")):
        ext = []
        for sign in (1.0, -1.0):
            vals = sign * grid[:, :, k]
            i, j = np.unravel_index(np.argmin(vals), vals.shape)
            _, _, v = _refine(lambda t, p: sign * probs(t, p, model)[k], thetas[i], phis[j], hx, hy)
            ext.append(float(sign * v))
        out[name] = (ext[0], ext[1])
    return out
