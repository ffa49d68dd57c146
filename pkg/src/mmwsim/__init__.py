"""System-level mmWave downlink simulator with realistic antenna patterns."""
from .antenna import (
    AmplitudeProfile,
    ArrayConfig,
    BeamWeights,
    Direction,
    Isotropic,
    ParametricPatch,
    Tabulated,
    array_factor_db,
    array_gain_db,
    element_gain_db,
    export_pattern_cut,
    field_amplitude,
    make_weights,
)
from .channel import ChannelRealization, LinkState, PathLossParams, aligned_gain, channel_matrix, sample_clusters
from .network import RadioConstants
from .sim import EcdfSeries, Scenario, noise_limited_probability, quantile, run_drops, sweep_bits, sweep_density

__version__ = "0.1.0"
