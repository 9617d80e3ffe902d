"""Synthetic delayed self-homodyne phase-noise source.

The laser phase performs a Wiener walk whose per-step variance reproduces a
Lorentzian line of full width ``linewidth_hz``.  Interfering the field with a
copy delayed by ``delay_s`` gives the beat ``cos(phi(t + delay) - phi(t))``,
which is optionally band-limited, mixed with Gaussian detector noise and
digitized by a mid-tread 8-bit ADC.

All randomness comes from a PCG64 generator seeded through ``SeedSequence``;
the phase walk and the detector noise use independent spawned streams so the
two can be drawn in chunks without interfering.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np
from scipy import signal

from .errors import InsufficientDataError, InvalidParameterError, ZeroVarianceError

# Relative tolerance when mapping delay_s onto the internal time grid.
DELAY_GRID_RTOL = 1e-3

# Samples per chunk when streaming long simulations.
DEFAULT_CHUNK_SAMPLES = 1 << 22

ADC_MIN = -128
ADC_MAX = 127


class Provenance(str, enum.Enum):
    SIMULATED = "simulated"
    INGESTED = "ingested"


def coherence_time(linewidth_hz: float) -> float:
    """Coherence time ``1 / (pi * linewidth)`` of a Lorentzian line, in seconds."""
    if not linewidth_hz > 0 or not math.isfinite(linewidth_hz):
        raise InvalidParameterError(f"linewidth must be positive, got {linewidth_hz!r}")
    return 1.0 / (math.pi * linewidth_hz)


@dataclass(frozen=True)
class SimConfig:
    """Physical and digitizer parameters of the simulated source.

    Defaults describe the reference setup: a 120 MHz linewidth VCSEL, a 5 ns
    interferometer delay and an 8-bit ADC clocked at 100 MHz.  The internal
    time step is ``1 / (sample_rate_hz * oversample_factor)``; the delay must
    be a whole number of internal steps.
    """

    linewidth_hz: float = 120e6
    delay_s: float = 5e-9
    sample_rate_hz: float = 100e6
    n_samples: int = 1_000_000
    detection_noise_rel: float = 1.5
    adc_fullscale_sigma: float = 3.4
    oversample_factor: int = 2
    seed: int = 20100101
    highpass_hz: float = 0.0
    lowpass_hz: float = 0.0

    def __post_init__(self) -> None:
        if not self.linewidth_hz > 0:
            raise InvalidParameterError(f"linewidth_hz must be > 0, got {self.linewidth_hz}")
        if not self.sample_rate_hz > 0:
            raise InvalidParameterError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if not self.delay_s >= 0:
            raise InvalidParameterError(f"delay_s must be >= 0, got {self.delay_s}")
        if int(self.n_samples) != self.n_samples or self.n_samples <= 0:
            raise InvalidParameterError(f"n_samples must be a positive integer, got {self.n_samples}")
        if int(self.oversample_factor) != self.oversample_factor or self.oversample_factor < 1:
            raise InvalidParameterError(
                f"oversample_factor must be an integer >= 1, got {self.oversample_factor}"
            )
        if not self.adc_fullscale_sigma > 0:
            raise InvalidParameterError(
                f"adc_fullscale_sigma must be > 0, got {self.adc_fullscale_sigma}"
            )
        if not self.detection_noise_rel >= 0:
            raise InvalidParameterError(
                f"detection_noise_rel must be >= 0, got {self.detection_noise_rel}"
            )
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must fit in 64 bits, got {self.seed}")
        for name in ("highpass_hz", "lowpass_hz"):
            cutoff = getattr(self, name)
            if cutoff < 0:
                raise InvalidParameterError(f"{name} must be >= 0 (0 disables), got {cutoff}")
            if cutoff > 0 and cutoff >= 0.5 / self.step_s:
                raise InvalidParameterError(
                    f"{name}={cutoff:g} Hz is not below the internal Nyquist frequency "
                    f"{0.5 / self.step_s:g} Hz; raise oversample_factor"
                )
        steps = self.delay_s / self.step_s
        d = round(steps)
        if self.delay_s > 0 and (d == 0 or abs(steps - d) > DELAY_GRID_RTOL * steps):
            raise InvalidParameterError(
                f"delay {self.delay_s:g} s is not an integer number of internal steps "
                f"of {self.step_s:g} s (ratio {steps:.6g})"
            )

    @property
    def step_s(self) -> float:
        return 1.0 / (self.sample_rate_hz * self.oversample_factor)

    @property
    def delay_steps(self) -> int:
        return int(round(self.delay_s / self.step_s))

    @property
    def coherence_time_s(self) -> float:
        return coherence_time(self.linewidth_hz)

    @property
    def phase_step_variance(self) -> float:
        """Variance (rad^2) of one internal-step phase increment, ``2 * step / tau_coh``."""
        return 2.0 * self.step_s / self.coherence_time_s

    @property
    def n_phase(self) -> int:
        """Phase values needed to produce ``n_samples`` ADC samples."""
        return self.n_samples * self.oversample_factor + self.delay_steps

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class AnalogTrace:
    """Pre-quantization detector signal on the internal time grid."""

    values: np.ndarray
    step_s: float

    def __post_init__(self) -> None:
        if not self.step_s > 0:
            raise InvalidParameterError(f"step_s must be > 0, got {self.step_s}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("analog trace contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class SampleBlock:
    """Signed 8-bit ADC samples plus where they came from."""

    samples: np.ndarray
    sample_rate_hz: float
    provenance: Provenance = Provenance.SIMULATED

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.dtype != np.int8:
            if samples.size and (samples.min() < ADC_MIN or samples.max() > ADC_MAX):
                raise InvalidParameterError("samples must lie in [-128, 127]")
            samples = samples.astype(np.int8)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def as_bytes(self) -> np.ndarray:
        """Raw two's-complement bit patterns as ``uint8`` (a view, no copy)."""
        return self.samples.view(np.uint8)


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    phase_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(phase_seq)), np.random.Generator(
        np.random.PCG64(noise_seq)
    )


def _integrate(increments: np.ndarray, start: float) -> np.ndarray:
    # Prepending the carry keeps chunked and single-shot summation bit-identical.
    return np.cumsum(np.concatenate(([start], increments)))[1:]


def simulate_phase(config: SimConfig) -> np.ndarray:
    """Wiener phase walk (rad) of length ``config.n_phase`` on the internal grid."""
    rng, _ = _streams(config.seed)
    sigma = math.sqrt(config.phase_step_variance)
    return _integrate(rng.normal(0.0, sigma, config.n_phase), 0.0)


def _filter_coefficients(config: SimConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    fs = 1.0 / config.step_s
    stages = []
    if config.highpass_hz > 0:
        stages.append(signal.butter(1, config.highpass_hz, btype="highpass", fs=fs))
    if config.lowpass_hz > 0:
        stages.append(signal.butter(1, config.lowpass_hz, btype="lowpass", fs=fs))
    return stages


def _raw_beat(phase: np.ndarray, d: int) -> np.ndarray:
    if d == 0:
        return np.ones(len(phase))
    return np.cos(phase[d:] - phase[:-d])


def beat_signal(phase: np.ndarray, config: SimConfig) -> AnalogTrace:
    """Delayed self-homodyne beat ``cos(phi[k + d] - phi[k])``, filtered and mean-free.

    ``d`` is the delay in internal steps, so the trace is ``d`` values shorter
    than ``phase``.  Optional first-order high- and low-pass stages run before
    the mean is removed.
    """
    phase = np.asarray(phase, dtype=np.float64)
    d = config.delay_steps
    if len(phase) < d + 1:
        raise InsufficientDataError(
            f"need at least {d + 1} phase values for a {d}-step delay, got {len(phase)}"
        )
    values = _raw_beat(phase, d)
    for b, a in _filter_coefficients(config):
        values = signal.lfilter(b, a, values)
    return AnalogTrace(values - values.mean(), config.step_s)


def add_detection_noise(
    trace: AnalogTrace, config: SimConfig, rng: Optional[np.random.Generator] = None
) -> AnalogTrace:
    """Add white Gaussian noise with std ``detection_noise_rel * std(trace)``.

    Without an explicit ``rng`` the noise stream derived from ``config.seed``
    is used.
    """
    if config.detection_noise_rel < 0:
        raise InvalidParameterError("detection_noise_rel must be >= 0")
    sigma = config.detection_noise_rel * float(np.std(trace.values))
    if sigma == 0:
        return trace
    if rng is None:
        _, rng = _streams(config.seed)
    noisy = trace.values + rng.normal(0.0, sigma, len(trace.values))
    return AnalogTrace(noisy, trace.step_s)


def _adc(values: np.ndarray, scale: float) -> np.ndarray:
    codes = np.rint(values * scale)
    return np.clip(codes, ADC_MIN, ADC_MAX).astype(np.int8)


def adc_scale(values: np.ndarray, config: SimConfig) -> float:
    """Codes per analog unit placing ``adc_fullscale_sigma`` standard deviations at +127."""
    std = float(np.std(values))
    if std == 0:
        raise ZeroVarianceError("cannot set the ADC scale of a zero-variance trace")
    return ADC_MAX / (config.adc_fullscale_sigma * std)


def quantize(trace: AnalogTrace, config: SimConfig) -> SampleBlock:
    """Decimate to the ADC rate and digitize with a mid-tread 8-bit quantizer."""
    if len(trace) == 0:
        raise InsufficientDataError("cannot quantize an empty trace")
    kept = trace.values[:: config.oversample_factor]
    return SampleBlock(_adc(kept, adc_scale(kept, config)), config.sample_rate_hz)


@dataclass
class _StreamState:
    """Running state carried between simulation chunks."""

    phase_rng: np.random.Generator
    noise_rng: np.random.Generator
    phase_tail: np.ndarray
    filter_state: list = field(default_factory=list)
    last_phase: float = 0.0
    offset: float = 0.0
    noise_sigma: float = 0.0
    scale: float = 0.0


def iter_sample_blocks(
    config: SimConfig, chunk_samples: int = DEFAULT_CHUNK_SAMPLES
) -> Iterator[SampleBlock]:
    """Stream ``config.n_samples`` ADC samples in blocks of ``chunk_samples``.

    The first block calibrates the mean offset, the detector-noise level and
    the ADC gain exactly as :func:`beat_signal`, :func:`add_detection_noise`
    and :func:`quantize` would on that block alone; later blocks reuse those
    settings, like a digitizer whose gain is set once per acquisition.  The
    phase walk and filter states are carried across block boundaries.  Output
    depends only on ``config`` and ``chunk_samples``.
    """
    if chunk_samples < 1:
        raise InvalidParameterError("chunk_samples must be >= 1")
    phase_rng, noise_rng = _streams(config.seed)
    os_, d = config.oversample_factor, config.delay_steps
    sigma = math.sqrt(config.phase_step_variance)
    stages = _filter_coefficients(config)
    state = _StreamState(phase_rng, noise_rng, np.empty(0))
    state.filter_state = [signal.lfilter_zi(b, a) * 0.0 for b, a in stages]

    remaining = config.n_samples
    first = True
    while remaining > 0:
        n = min(chunk_samples, remaining)
        steps = n * os_
        if first:
            phase = _integrate(phase_rng.normal(0.0, sigma, steps + d), 0.0)
        else:
            fresh = _integrate(phase_rng.normal(0.0, sigma, steps), state.last_phase)
            phase = np.concatenate((state.phase_tail, fresh))
        state.last_phase = phase[-1]
        state.phase_tail = phase[len(phase) - d :] if d else np.empty(0)

        values = _raw_beat(phase, d)
        for i, (b, a) in enumerate(stages):
            values, state.filter_state[i] = signal.lfilter(b, a, values, zi=state.filter_state[i])

        if first:
            state.offset = float(values.mean())
            values = values - state.offset
            state.noise_sigma = config.detection_noise_rel * float(np.std(values))
        else:
            values = values - state.offset
        if state.noise_sigma > 0:
            values = values + noise_rng.normal(0.0, state.noise_sigma, len(values))

        kept = values[::os_]
        if first:
            state.scale = adc_scale(kept, config)
        yield SampleBlock(_adc(kept, state.scale), config.sample_rate_hz)

        remaining -= n
        first = False


def simulate(config: SimConfig, chunk_samples: int = DEFAULT_CHUNK_SAMPLES) -> SampleBlock:
    """Full source simulation: phase walk, beat, detector noise, ADC.

    For ``n_samples <= chunk_samples`` this is exactly
    ``quantize(add_detection_noise(beat_signal(simulate_phase(c), c), c), c)``.
    """
    blocks = [b.samples for b in iter_sample_blocks(config, chunk_samples)]
    samples = blocks[0] if len(blocks) == 1 else np.concatenate(blocks)
    return SampleBlock(samples, config.sample_rate_hz)
