"""Operator-level MZI with a one-bin delay arm, and the dual-source HOM splitter.

Port naming: the final splitter receives the undelayed arm on its first
input and the delayed arm on its second. Output ``e`` is the port where the
two arms enter with opposite signs, so ``n_e`` carries the ``-cos(phi)``
fringe and ``n_f`` the ``+cos(phi)`` one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    DEFAULT_CUTOFF,
    MixedState,
    ModeLabel,
    PureState,
    State,
    _index_of,
    as_mixed,
    linear_transform,
    partial_trace,
    relabel,
    reorder,
    tensor,
)
from .seed import SEED_MODE

MAX_EXACT_BINS = 12
TWO_PI = 2.0 * math.pi


class CapacityError(ValueError):
    """Requested pulse train is too long for exact enumeration."""


def _norm_phase(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return phi


def _check_r(r: float, name: str):
    if not 0.0 < r < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {r}")


@dataclass(frozen=True)
class MziConfig:
    phase: float = 0.0
    delay_bins: int = 1
    r1: float = 0.5
    r2: float = 0.5
    repetition_period: float = 13e-9

    def __post_init__(self):
        object.__setattr__(self, "phase", _norm_phase(float(self.phase)))
        if self.delay_bins != 1:
            raise ValueError("only a one-bin delay is supported")
        _check_r(self.r1, "r1")
        _check_r(self.r2, "r2")
        if self.repetition_period <= 0:
            raise ValueError("repetition_period must be positive")

    @classmethod
    def from_delay(cls, omega: float, delta_tau: float, **kw) -> "MziConfig":
        """Phase from carrier angular frequency and fine delay, phi = omega * delta_tau."""
        return cls(phase=omega * delta_tau, **kw)


@dataclass(frozen=True)
class HomConfig:
    phase: float = 0.0
    r: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "phase", _norm_phase(float(self.phase)))
        _check_r(self.r, "r")


def bs_matrix(r: float) -> np.ndarray:
    """x^dag -> sqrt(1-r) u^dag + sqrt(r) v^dag ; y^dag -> sqrt(r) u^dag - sqrt(1-r) v^dag."""
    t, s = math.sqrt(1.0 - r), math.sqrt(r)
    return np.array([[t, s], [s, -t]])


def bs_transform(state: State, in_modes, out_modes, r: float = 0.5) -> State:
    """Beam splitter acting on creation operators of ``in_modes = (x, y)``."""
    _check_r(r, "r")
    return linear_transform(state, tuple(in_modes), tuple(out_modes), bs_matrix(r))


def delay_transform(state: State, d: ModeLabel, phase: float) -> State:
    """Move ``d`` at bin i into the delay output ``d'`` at bin i+1 with phase e^{i phase} per photon."""
    return linear_transform(state, (d,), (ModeLabel("d'", d.bin + 1),), np.array([[np.exp(1j * phase)]]))


def _vacuum(*modes: ModeLabel, cutoff: int) -> MixedState:
    return MixedState.vacuum(modes, cutoff)


def _seed_at(seed: State, m: ModeLabel) -> MixedState:
    seed = as_mixed(seed)
    if len(seed.modes) != 1:
        raise ValueError("seed must be a one-mode state")
    return relabel(seed, {seed.modes[0]: m})


def _bin_step(state: MixedState, seed: State, cfg: MziConfig, i: int) -> MixedState:
    """One bin: inject seed at a[i], split, combine with d'[i], push d[i] into the delay."""
    cutoff = state.cutoff
    a, b = ModeLabel("a", i), ModeLabel("b", i)
    c, d = ModeLabel("c", i), ModeLabel("d", i)
    cp, dp = ModeLabel("c'", i), ModeLabel("d'", i)
    state = tensor(state, tensor(_seed_at(seed, a), _vacuum(b, cutoff=cutoff)))
    state = bs_transform(state, (a, b), (c, d), cfg.r1)
    state = relabel(state, {c: cp})
    state = bs_transform(state, (cp, dp), (ModeLabel("f", i), ModeLabel("e", i)), cfg.r2)
    return delay_transform(state, d, cfg.phase)


def output_modes(n_bins: int) -> tuple[ModeLabel, ...]:
    """Output modes (e[0], f[0], ..., e[N], f[N]) of an N-pulse train incl. the flush bin."""
    return tuple(ModeLabel(x, i) for i in range(n_bins + 1) for x in ("e", "f"))


def build_pulse_train_state(n_bins: int, seed: State, cfg: MziConfig,
                            cutoff: int = DEFAULT_CUTOFF) -> MixedState:
    """Exact joint output state of ``n_bins`` seeded bins.

    Vacuum enters the delay arm before bin 0, and the last delay content
    leaves in an extra flush bin ``n_bins``. Bins ``1 .. n_bins-1`` are
    interior: each sees two seeds.
    """
    if n_bins < 3:
        raise ValueError("need at least 3 bins to have interior bins")
    if n_bins > MAX_EXACT_BINS:
        raise CapacityError(f"exact enumeration limited to {MAX_EXACT_BINS} bins, got {n_bins}")
    state = _vacuum(ModeLabel("d'", 0), cutoff=cutoff)
    for i in range(n_bins):
        state = _bin_step(state, seed, cfg, i)
    cp, dp = ModeLabel("c'", n_bins), ModeLabel("d'", n_bins)
    state = tensor(state, _vacuum(cp, cutoff=cutoff))
    state = bs_transform(state, (cp, dp), (ModeLabel("f", n_bins), ModeLabel("e", n_bins)), cfg.r2)
    return reorder(state, output_modes(n_bins))


def _find_memory_mode(memory: MixedState) -> ModeLabel:
    ds = [m for m in memory.modes if m.name == "d'"]
    if len(ds) != 1:
        raise ValueError("channel memory must carry exactly one d' mode")
    return ds[0]


def vacuum_memory(bin_index: int = 0, cutoff: int = DEFAULT_CUTOFF) -> MixedState:
    return _vacuum(ModeLabel("d'", bin_index), cutoff=cutoff)


def mzi_channel_step(memory: State, seed: State, cfg: MziConfig) -> MixedState:
    """Advance the delay-arm memory by one bin.

    ``memory`` holds the delay-arm mode ``d'[i]`` (plus any spectator modes
    the caller wants to keep correlated). Returns the state over the spectators,
    ``e[i]``, ``f[i]`` and the next memory ``d'[i+1]``, in that order.
    """
    memory = as_mixed(memory)
    dp = _find_memory_mode(memory)
    i = dp.bin
    state = _bin_step(memory, seed, cfg, i)
    fresh = [ModeLabel("e", i), ModeLabel("f", i), ModeLabel("d'", i + 1)]
    return reorder(state, [m for m in state.modes if m not in fresh] + fresh)


def channel_output_state(n_bins: int, seed: State, cfg: MziConfig, keep_bins,
                         cutoff: int = DEFAULT_CUTOFF) -> MixedState:
    """Joint (e, f) state of ``keep_bins`` obtained by chaining ``mzi_channel_step``.

    Outputs of bins not in ``keep_bins`` are traced out as soon as they are
    produced, so only the kept modes and the one-mode memory are carried.
    """
    keep_bins = set(keep_bins)
    if not keep_bins or min(keep_bins) < 0 or max(keep_bins) >= n_bins:
        raise ValueError("keep_bins must be non-empty and inside [0, n_bins)")
    state = vacuum_memory(0, cutoff)
    for i in range(n_bins):
        state = mzi_channel_step(state, seed, cfg)
        if i not in keep_bins:
            keep = [m for m in state.modes if m.bin != i or m.name == "d'"]
            state = partial_trace(state, keep)
    kept = [m for m in state.modes if m.name != "d'"]
    return partial_trace(state, kept)


def hom_output_state(seed_a: State, seed_b: State, cfg: HomConfig) -> MixedState:
    """Two independent seeds on one splitter, seed B delayed in phase by ``cfg.phase``.

    Returns the state over (e[0], f[0]).
    """
    x, y = ModeLabel("c", 0), ModeLabel("d", 0)
    cutoff = max(as_mixed(seed_a).cutoff, as_mixed(seed_b).cutoff)
    state = tensor(_seed_at(seed_a, x), _seed_at(seed_b, ModeLabel("b", 0)))
    state = linear_transform(state, (ModeLabel("b", 0),), (y,), np.array([[np.exp(1j * cfg.phase)]]))
    e, f = ModeLabel("e", 0), ModeLabel("f", 0)
    state = bs_transform(state, (x, y), (f, e), cfg.r)
    out = reorder(state, (e, f))
    return MixedState(out.modes, out.basis, out.factor, cutoff, out.dropped)
