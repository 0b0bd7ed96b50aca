"""Monte Carlo detector streams from bin-by-bin measurement of the MZI output.

The delay arm is the only memory between bins. For each bin the joint
(memory, fresh seed) state is propagated through one channel step, the
photon numbers at e and f are sampled from their Born probabilities, and
the projected delay-arm state becomes the next memory. The channel step is
compiled once into an instrument (one superoperator per outcome) so the
sequential loop only touches small matrices.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numba
import numpy as np

from .fock import DEFAULT_CUTOFF, MixedState, ModeLabel, PureState, occupation_distribution
from .interferometer import HomConfig, MziConfig, hom_output_state, mzi_channel_step
from .seed import SeedSpec, seed_mixed
from .tagio import TagStream

TOPOLOGIES = {"none": 1, "hbt": 2, "extended_hbt": 3}
SOURCES = ("single_mzi", "dual_hom")
MAX_PHOTONS_PER_OUTPUT = 2


class ModelBoundError(RuntimeError):
    """A sampled outcome violates the at-most-two-photons-per-output bound."""


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_count_prob: float = 0.0
    photon_number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark_count_prob must lie in [0, 1)")


@dataclass(frozen=True)
class SplitterTree:
    """Splitters in front of the detectors on one output port.

    ``hbt`` is one 50:50 splitter onto two detectors; ``extended_hbt`` sends
    the second arm of that splitter into another 50:50 splitter, giving
    three detectors with branch probabilities 1/2, 1/4, 1/4. The other
    output port goes straight to a single detector ``other_id``.
    """

    topology: str = "none"
    port: str = "e"
    leaf_ids: Optional[tuple[int, ...]] = None
    other_id: Optional[int] = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}; expected one of {tuple(TOPOLOGIES)}")
        if self.port not in ("e", "f"):
            raise ValueError("port must be 'e' or 'f'")
        n = TOPOLOGIES[self.topology]
        leaves = tuple(range(n)) if self.leaf_ids is None else tuple(int(x) for x in self.leaf_ids)
        if len(leaves) != n:
            raise ValueError(f"topology {self.topology!r} has {n} leaves, got {len(leaves)} detector ids")
        other = max(leaves) + 1 if self.other_id is None else int(self.other_id)
        ids = leaves + (other,)
        if len(set(ids)) != len(ids) or min(ids) < 0:
            raise ValueError("detector ids must be distinct and non-negative")
        object.__setattr__(self, "leaf_ids", leaves)
        object.__setattr__(self, "other_id", other)

    @property
    def branch_probs(self) -> np.ndarray:
        return {"none": np.array([1.0]), "hbt": np.array([0.5, 0.5]),
                "extended_hbt": np.array([0.5, 0.25, 0.25])}[self.topology]

    @property
    def detector_ids(self) -> tuple[int, ...]:
        return self.leaf_ids + (self.other_id,)

    @property
    def other_port(self) -> str:
        return "f" if self.port == "e" else "e"


@dataclass(frozen=True)
class RunConfig:
    n_bins: int
    warmup_bins: int = 2
    rng_seed: int = 0
    source: str = "single_mzi"

    def __post_init__(self):
        if self.n_bins <= self.warmup_bins or self.warmup_bins < 0:
            raise ValueError("need n_bins > warmup_bins >= 0")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def recorded_bins(self) -> int:
        return self.n_bins - self.warmup_bins


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed)))


# instrument ------------------------------------------------------------------

@dataclass(frozen=True)
class Instrument:
    """Outcome list and per-outcome superoperators on the row-major vec of the memory."""

    outcomes: tuple[tuple[int, int], ...]
    superops: np.ndarray = field(repr=False)
    dim: int = 2


def _seed_columns(seed: MixedState) -> list[MixedState]:
    return [MixedState(seed.modes, seed.basis, seed.factor[:, k:k + 1], seed.cutoff)
            for k in range(seed.factor.shape[1])]


def build_instrument(seed: MixedState, cfg: MziConfig) -> Instrument:
    """Kraus decomposition of one channel step, measured on (n_e, n_f)."""
    cutoff = seed.cutoff
    seed_max = max((b[0] for b, p in zip(seed.basis, seed.probabilities()) if p > 0), default=0)
    dim = min(seed_max, cutoff) + 1
    kraus: dict = {}
    for k, col in enumerate(_seed_columns(seed)):
        for m in range(dim):
            mem = PureState.fock((ModeLabel("d'", 0),), (m,), cutoff).to_mixed()
            out = mzi_channel_step(mem, col, cfg)
            for (ne, nf, mp), amp in zip(out.basis, out.factor[:, 0]):
                if mp >= dim or amp == 0:
                    continue
                K = kraus.setdefault(((ne, nf), k), np.zeros((dim, dim), dtype=complex))
                K[mp, m] += amp
    by_outcome: dict = {}
    for (o, _), K in kraus.items():
        S = np.kron(K, K.conj())
        by_outcome[o] = by_outcome.get(o, 0) + S
    outcomes = tuple(sorted(o for o, S in by_outcome.items() if np.max(np.abs(S)) > 1e-15))
    superops = np.array([by_outcome[o] for o in outcomes], dtype=np.complex128)
    return Instrument(outcomes, superops, dim)


@numba.njit(cache=True)
def _run_chain(superops, uniforms, dim):
    n_out = superops.shape[0]
    d2 = dim * dim
    rho = np.zeros(d2, dtype=np.complex128)
    rho[0] = 1.0
    picks = np.empty(uniforms.shape[0], dtype=np.int32)
    cand = np.empty((n_out, d2), dtype=np.complex128)
    probs = np.empty(n_out)
    for t in range(uniforms.shape[0]):
        total = 0.0
        for o in range(n_out):
            S = superops[o]
            p = 0.0
            for i in range(d2):
                acc = 0j
                for j in range(d2):
                    acc += S[i, j] * rho[j]
                cand[o, i] = acc
            for i in range(dim):
                p += cand[o, i * dim + i].real
            if p < 0.0:
                p = 0.0
            probs[o] = p
            total += p
        target = uniforms[t] * total
        o = 0
        run = probs[0]
        while run < target and o < n_out - 1:
            o += 1
            run += probs[o]
        while probs[o] <= 0.0 and o > 0:
            o -= 1
        picks[t] = o
        for i in range(d2):
            rho[i] = cand[o, i] / probs[o]
    return picks


def sample_outcomes(instrument: Instrument, n_bins: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sequentially measured (n_e, n_f) per bin, starting from a vacuum delay arm."""
    picks = _run_chain(instrument.superops, rng.random(n_bins), instrument.dim)
    table = np.array(instrument.outcomes, dtype=np.int64).reshape(-1, 2)
    return table[picks, 0], table[picks, 1]


def _hom_outcomes(seed: MixedState, cfg: HomConfig, n_bins: int, rng: np.random.Generator):
    state = hom_output_state(seed, seed, cfg)
    dist = occupation_distribution(state, state.modes)
    keys = sorted(dist)
    p = np.array([dist[k] for k in keys])
    p = p / p.sum()
    picks = rng.choice(len(keys), size=n_bins, p=p)
    table = np.array(keys, dtype=np.int64)
    return table[picks, 0], table[picks, 1]


# detection -------------------------------------------------------------------

def route_splitter_tree(n_photons, tree: SplitterTree, rng: np.random.Generator,
                        detector: DetectorModel = DetectorModel(),
                        cutoff: int = DEFAULT_CUTOFF) -> dict[int, int]:
    """Detections per leaf detector for ``n_photons`` entering the tree.

    Each photon picks a branch uniformly at every 50:50 node, then survives
    with the detector efficiency. Click detectors report 0 or 1.
    """
    if not 0 <= n_photons <= cutoff:
        raise ValueError(f"n_photons must lie in [0, {cutoff}]")
    counts = _detect(np.array([n_photons]), tree.branch_probs, rng, detector)[0]
    return {d: int(c) for d, c in zip(tree.leaf_ids, counts)}


def _detect(photons: np.ndarray, probs: np.ndarray, rng: np.random.Generator,
            detector: DetectorModel) -> np.ndarray:
    if probs.size == 1:
        counts = photons[:, None].astype(np.int64)
    else:
        counts = rng.multinomial(photons, probs)
    if detector.efficiency < 1.0:
        counts = rng.binomial(counts, detector.efficiency)
    if detector.dark_count_prob > 0.0:
        dark = rng.random(counts.shape) < detector.dark_count_prob
        counts = counts + dark
    if not detector.photon_number_resolving:
        counts = (counts > 0).astype(np.int64)
    return counts


def sample_stream(run: RunConfig, seed: Union[SeedSpec, MixedState], cfg: Union[MziConfig, HomConfig],
                  det: DetectorModel = DetectorModel(), tree: SplitterTree = SplitterTree()) -> TagStream:
    """Simulated tag stream; warmup bins are dropped and bins re-indexed from 0."""
    state = seed_mixed(seed) if isinstance(seed, SeedSpec) else seed
    rng = make_rng(run.rng_seed)
    if run.source == "single_mzi":
        if not isinstance(cfg, MziConfig):
            raise TypeError("single_mzi runs need an MziConfig")
        ne, nf = sample_outcomes(build_instrument(state, cfg), run.n_bins, rng)
    else:
        if not isinstance(cfg, HomConfig):
            raise TypeError("dual_hom runs need a HomConfig")
        ne, nf = _hom_outcomes(state, cfg, run.n_bins, rng)
    if max(int(ne.max(initial=0)), int(nf.max(initial=0))) > MAX_PHOTONS_PER_OUTPUT:
        raise ModelBoundError("more than two photons in one output bin")
    ne, nf = ne[run.warmup_bins:], nf[run.warmup_bins:]
    tree_in, direct = (ne, nf) if tree.port == "e" else (nf, ne)
    leaf_counts = _detect(tree_in, tree.branch_probs, rng, det)
    other_counts = _detect(direct, np.array([1.0]), rng, det)
    counts = np.hstack([leaf_counts, other_counts])
    ids = np.array(tree.detector_ids, dtype=np.int64)
    order = np.argsort(ids, kind="stable")
    counts, ids = counts[:, order], ids[order]
    n = run.recorded_bins
    flat = counts.ravel()
    bins = np.repeat(np.repeat(np.arange(n, dtype=np.int64), ids.size), flat)
    dets = np.repeat(np.tile(ids, n), flat)
    return TagStream(dets, bins, n)


def _chain_job(args):
    run, seed, cfg, det, tree = args
    return sample_stream(run, seed, cfg, det, tree)


def sample_chains(run: RunConfig, seed, cfg, det: DetectorModel = DetectorModel(),
                  tree: SplitterTree = SplitterTree(), chains: int = 1, threads: int = 1) -> list[TagStream]:
    """Independent streams with seeds ``run.rng_seed + k``."""
    runs = [RunConfig(run.n_bins, run.warmup_bins, (run.rng_seed + k) % 2 ** 64, run.source)
            for k in range(chains)]
    jobs = [(r, seed, cfg, det, tree) for r in runs]
    if threads > 1 and chains > 1:
        with ProcessPoolExecutor(min(threads, chains)) as pool:
            return list(pool.map(_chain_job, jobs))
    return [_chain_job(j) for j in jobs]


def outcome_frequencies(run: RunConfig, seed, cfg: MziConfig) -> dict[tuple[int, int], float]:
    """Empirical joint (n_e, n_f) frequencies of the recorded bins, before detection."""
    state = seed_mixed(seed) if isinstance(seed, SeedSpec) else seed
    ne, nf = sample_outcomes(build_instrument(state, cfg), run.n_bins, make_rng(run.rng_seed))
    ne, nf = ne[run.warmup_bins:], nf[run.warmup_bins:]
    keys, counts = np.unique(np.column_stack([ne, nf]), axis=0, return_counts=True)
    return {(int(a), int(b)): c / ne.size for (a, b), c in zip(keys, counts)}
