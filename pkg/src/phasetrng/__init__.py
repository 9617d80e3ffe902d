"""Laser phase-noise random number generation: simulation, conditioning and validation."""

from .conditioning import condition, lsb_extract, repack, xor_pairs
from .entropy import (
    EntropyReport,
    Histogram256,
    block_entropy,
    fit_gaussian_sigma,
    gaussian_entropy,
    histogram,
    min_entropy,
    shannon_entropy,
)
from .errors import (
    ConfigError,
    EmptyInputError,
    InsufficientDataError,
    InvalidParameterError,
    TrngError,
    ZeroVarianceError,
)
from .ingest import BitStream, read_bits, read_samples, write_bits, write_samples
from .phase_sim import (
    AnalogTrace,
    SampleBlock,
    SimConfig,
    add_detection_noise,
    beat_signal,
    coherence_time,
    quantize,
    simulate,
    simulate_phase,
)

__version__ = "0.1.0"
