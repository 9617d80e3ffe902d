"""Spectral diagnostics: Welch PSD, autocorrelation and serial correlation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, InvalidParameterError, ZeroVarianceError

WINDOWS = ("rect", "hann")


@dataclass(frozen=True, eq=False)
class Psd:
    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    window: str
    n_segments: int

    def total_power(self) -> float:
        """Power integrated over the one-sided grid (rectangle rule)."""
        df = self.frequencies[1] - self.frequencies[0] if len(self.frequencies) > 1 else 0.0
        return float(self.power.sum() * df)


@dataclass(frozen=True, eq=False)
class AutocorrResult:
    lags: np.ndarray
    values: np.ndarray


def _as_float(samples) -> np.ndarray:
    x = np.asarray(getattr(samples, "samples", samples))
    if x.dtype == np.uint8 or x.dtype == np.int8:
        x = x.astype(np.int16)
    return x.astype(np.float64).reshape(-1)


def _window(name: str, n: int) -> np.ndarray:
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        # Periodic Hann, the usual choice for spectral averaging.
        return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    raise InvalidParameterError(f"unknown window {name!r}; expected one of {WINDOWS}")


def psd_welch(samples, segment_length: int, window: str = "hann", sample_rate_hz: float = 1.0) -> Psd:
    """One-sided Welch estimate from non-overlapping segments.

    Units are signal^2 / Hz; integrating over ``[0, fs/2]`` recovers the mean
    square of the analyzed samples (exactly, for the rectangular window).
    """
    x = _as_float(samples)
    L = int(segment_length)
    if L < 2 or L & (L - 1):
        raise InvalidParameterError(f"segment_length must be a power of two >= 2, got {segment_length}")
    k = len(x) // L
    if k == 0:
        raise InsufficientDataError(f"{len(x)} samples do not fill one segment of {L}")
    w = _window(window, L)
    segs = x[: k * L].reshape(k, L) * w
    spec = np.abs(np.fft.rfft(segs, axis=1)) ** 2
    power = spec.mean(axis=0) / (sample_rate_hz * np.dot(w, w))
    power[1:-1] *= 2.0
    freqs = np.fft.rfftfreq(L, d=1.0 / sample_rate_hz)
    return Psd(freqs, power, L, window, k)


def _centered(samples, max_lag: int) -> np.ndarray:
    x = _as_float(samples)
    if max_lag < 0 or not max_lag < len(x) / 2:
        raise InsufficientDataError(
            f"max_lag must satisfy 0 <= max_lag < n/2 (n={len(x)}, max_lag={max_lag})"
        )
    x = x - x.mean()
    if not np.any(x):
        raise ZeroVarianceError("autocorrelation of a constant sequence is undefined")
    return x


def autocorr_wk(samples, max_lag: int) -> AutocorrResult:
    """Linear autocorrelation via the power spectrum (Wiener-Khintchine).

    The mean-removed sequence is zero-padded to at least twice its length so
    the inverse transform of ``|X(f)|^2`` carries no circular wrap.  Each lag
    is divided by its number of overlapping pairs, then scaled so lag 0 is 1.
    """
    x = _centered(samples, max_lag)
    n = len(x)
    nfft = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, nfft)
    r = np.fft.irfft(spectrum.real**2 + spectrum.imag**2, nfft)[: max_lag + 1]
    r = r / (n - np.arange(max_lag + 1))
    return AutocorrResult(np.arange(max_lag + 1), r / r[0])


def autocorr_direct(samples, max_lag: int) -> AutocorrResult:
    """Time-domain autocorrelation with the same normalization as :func:`autocorr_wk`."""
    x = _centered(samples, max_lag)
    n = len(x)
    r = np.array([np.dot(x[: n - k], x[k:]) / (n - k) for k in range(max_lag + 1)])
    return AutocorrResult(np.arange(max_lag + 1), r / r[0])


def serial_correlation(data, chunk: int = 1 << 24) -> float:
    """Lag-one correlation with wrap-around (last value pairs with the first)."""
    x = np.asarray(getattr(data, "samples", data)).reshape(-1)
    n = len(x)
    if n < 2:
        raise InsufficientDataError("serial correlation needs at least 2 values")
    # Integer input accumulates exactly in int64.
    dtype = np.int64 if x.dtype.kind in "biu" else np.float64
    s1 = s2 = cross = 0
    for start in range(0, n, chunk):
        a = x[start : start + chunk].astype(dtype)
        nxt = x[start + 1 : start + chunk + 1].astype(dtype)
        if len(nxt) < len(a):
            nxt = np.append(nxt, dtype(x[0]))
        s1 += a.sum().item()
        s2 += np.dot(a, a).item()
        cross += np.dot(a, nxt).item()
    den = n * s2 - s1 * s1
    if den == 0:
        raise ZeroVarianceError("serial correlation of a constant sequence is undefined")
    return (n * cross - s1 * s1) / den


def write_columns(path, first, second) -> None:
    """Two whitespace-separated columns, one pair per line, for external plotting."""
    Path(path).write_text(
        "".join(f"{a:.10g} {b:.10g}\n" for a, b in zip(np.asarray(first), np.asarray(second)))
    )
