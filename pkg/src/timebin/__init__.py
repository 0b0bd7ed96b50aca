"""Photon-number superpositions in time bins: exact states, closed forms, sampling and analysis."""

from .analytic import (
    UndefinedCorrelationError,
    accessible_ranges,
    fringe_visibility,
    g2_auto,
    g2_cross,
    landscape,
    population,
    probs,
    probs_hom,
    probs_single,
)
from .correlator import (
    CorrelationHistogram,
    DegenerateNormalizationError,
    FitError,
    NormalizedCorrelations,
    fringe_scan,
    g2_histogram,
    g3_histogram,
    hom_visibility,
    normalize_side_peaks,
)
from .extraction import ExtractedProbs, ExtractionInput, InconsistentInputError, mean_photon, p3_bound, probs_from_g2
from .fock import MixedState, ModeLabel, PureState, TruncationPolicy, partial_trace
from .interferometer import HomConfig, MziConfig, build_pulse_train_state
from .oracle import exact_g2, exact_g3, exact_photon_dist, exact_population, verify_analytic
from .sampler import DetectorModel, RunConfig, SplitterTree, route_splitter_tree, sample_stream
from .seed import SeedSpec, seed_mixed
from .tagio import FormatError, TagStream, TimeTagRecord

__version__ = "0.1.0"
