import math

import numpy as np
import pytest

from timebin.fock import mode, occupation_distribution, partial_trace
from timebin.interferometer import HomConfig, MziConfig
from timebin.oracle import PulseTrain
from timebin.sampler import (
    DetectorModel,
    RunConfig,
    SplitterTree,
    build_instrument,
    make_rng,
    outcome_frequencies,
    route_splitter_tree,
    sample_chains,
    sample_stream,
)
from timebin.seed import SeedSpec, seed_mixed

PI = math.pi
PNR = DetectorModel(photon_number_resolving=True)


def test_detector_model_ranges():
    with pytest.raises(ValueError):
        DetectorModel(efficiency=1.1)
    with pytest.raises(ValueError):
        DetectorModel(dark_count_prob=1.0)


def test_splitter_tree_ids():
    assert SplitterTree().detector_ids == (0, 1)
    assert SplitterTree("hbt").detector_ids == (0, 1, 2)
    assert SplitterTree("extended_hbt", port="f").other_port == "e"
    assert SplitterTree("hbt", leaf_ids=(4, 7), other_id=1).detector_ids == (4, 7, 1)
    with pytest.raises(ValueError):
        SplitterTree("hbt", leaf_ids=(0,))
    with pytest.raises(ValueError):
        SplitterTree("hbt", leaf_ids=(0, 1), other_id=1)
    with pytest.raises(ValueError):
        SplitterTree("star")
    with pytest.raises(ValueError):
        SplitterTree(port="g")


def test_run_config_checks():
    with pytest.raises(ValueError):
        RunConfig(2, warmup_bins=2)
    with pytest.raises(ValueError):
        RunConfig(10, source="triple")
    with pytest.raises(ValueError):
        RunConfig(10, rng_seed=-1)
    assert RunConfig(10).recorded_bins == 8


def test_zero_area_stream():
    run = RunConfig(20_000, rng_seed=4)
    assert len(sample_stream(run, SeedSpec(0.0), MziConfig())) == 0
    dark = sample_stream(run, SeedSpec(0.0), MziConfig(), DetectorModel(dark_count_prob=0.01))
    n = run.recorded_bins * 2
    assert abs(len(dark) - 0.01 * n) < 4 * math.sqrt(0.01 * n)


@pytest.mark.slow
def test_pi_pulse_mean_photon():
    run = RunConfig(1_000_000, rng_seed=11)
    stream = sample_stream(run, SeedSpec(PI), MziConfig(phase=0.4), PNR)
    counts = stream.counts_per_bin(0)
    sigma = counts.std() / math.sqrt(counts.size)
    assert abs(counts.mean() - 0.5) < 3 * sigma


def test_deterministic_streams():
    run = RunConfig(50_000, rng_seed=2024)
    args = (SeedSpec(0.4 * PI), MziConfig(phase=1.0), DetectorModel(0.5, 1e-3), SplitterTree("hbt"))
    assert sample_stream(run, *args) == sample_stream(run, *args)
    other = RunConfig(50_000, rng_seed=2025)
    assert sample_stream(other, *args) != sample_stream(run, *args)


def test_stream_layout():
    run = RunConfig(5_000, warmup_bins=3, rng_seed=1)
    s = sample_stream(run, SeedSpec(PI), MziConfig(), PNR, SplitterTree("hbt", leaf_ids=(5, 2), other_id=9))
    assert s.n_bins == 4_997
    assert set(s.detectors()) <= {2, 5, 9}
    assert np.all(np.diff(s.bin) >= 0)


def test_route_zero_photons():
    assert route_splitter_tree(0, SplitterTree("hbt"), make_rng(0)) == {0: 0, 1: 0}


def test_route_two_photons_hbt():
    rng, tree, trials = make_rng(3), SplitterTree("hbt"), 20_000
    both = sum(all(route_splitter_tree(2, tree, rng).values()) for _ in range(trials))
    assert abs(both / trials - 0.5) < 3 * math.sqrt(0.25 / trials)


def test_route_limits():
    with pytest.raises(ValueError):
        route_splitter_tree(4, SplitterTree(), make_rng(0))
    out = route_splitter_tree(3, SplitterTree("extended_hbt"), make_rng(0), DetectorModel(photon_number_resolving=True))
    assert sum(out.values()) == 3


@pytest.mark.parametrize("theta", [0.3, PI / 2, PI])
def test_instrument_respects_two_photon_bound(theta):
    inst = build_instrument(seed_mixed(SeedSpec(theta)), MziConfig(phase=0.2))
    assert max(max(o) for o in inst.outcomes) <= 2
    assert inst.dim <= 2


def test_instrument_is_trace_preserving():
    inst = build_instrument(seed_mixed(SeedSpec(1.9, purity=0.7)), MziConfig(phase=2.2))
    d = inst.dim
    total = inst.superops.sum(axis=0)
    # trace of the output for every input operator |i><j| equals delta_ij
    trace_rows = total.reshape(d, d, d * d)[np.arange(d), np.arange(d)].sum(axis=0)
    np.testing.assert_allclose(trace_rows, np.eye(d).ravel(), atol=1e-12)


@pytest.mark.slow
def test_joint_frequencies_match_oracle():
    seed, cfg = SeedSpec(0.5 * PI), MziConfig(phase=0.3 * PI)
    train = PulseTrain(seed_mixed(seed), cfg, 4)
    modes = [mode("e", 2), mode("f", 2)]
    exact = occupation_distribution(partial_trace(train.state, modes), modes)
    run = RunConfig(1_000_000, rng_seed=99)
    freq = outcome_frequencies(run, seed, cfg)
    n = run.recorded_bins
    for cell, p in exact.items():
        se = math.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(freq.get(cell, 0.0) - p) < 5 * se, cell
    assert set(freq) <= {c for c, p in exact.items() if p > 1e-15}


@pytest.mark.parametrize("eta", [1.0, 0.3, 0.05])
def test_efficiency_linearity(eta):
    seed, cfg = SeedSpec(0.6 * PI), MziConfig(phase=1.2)
    run = RunConfig(400_000, rng_seed=5)
    s = sample_stream(run, seed, cfg, DetectorModel(eta, photon_number_resolving=True))
    from timebin.analytic import population

    rate = s.counts_per_bin(0).mean()
    expected = eta * population(seed.theta, cfg.phase, "e")
    sigma = s.counts_per_bin(0).std() / math.sqrt(run.recorded_bins)
    assert abs(rate - expected) < 4 * sigma


def test_no_simultaneous_e_f_at_pi():
    s = sample_stream(RunConfig(200_000, rng_seed=8), SeedSpec(PI), MziConfig(phase=0.9), PNR)
    e, f = s.counts_per_bin(0), s.counts_per_bin(1)
    assert not np.any((e > 0) & (f > 0))


def test_dual_hom_source():
    from timebin.analytic import probs_hom

    run = RunConfig(300_000, rng_seed=6, source="dual_hom")
    s = sample_stream(run, SeedSpec(PI / 2), HomConfig(phase=PI), PNR)
    counts = np.bincount(s.counts_per_bin(0), minlength=3)[:3] / run.recorded_bins
    for got, p in zip(counts, probs_hom(PI / 2, PI)):
        assert abs(got - p) < 5 * math.sqrt(p * (1 - p) / run.recorded_bins)
    with pytest.raises(TypeError):
        sample_stream(run, SeedSpec(1.0), MziConfig())


def test_chains_use_offset_seeds():
    run = RunConfig(20_000, rng_seed=10)
    chains = sample_chains(run, SeedSpec(1.0), MziConfig(), chains=3)
    assert chains[1] == sample_stream(RunConfig(20_000, rng_seed=11), SeedSpec(1.0), MziConfig())
    assert chains[0] != chains[1]
    assert sample_chains(run, SeedSpec(1.0), MziConfig(), chains=3, threads=2) == chains
