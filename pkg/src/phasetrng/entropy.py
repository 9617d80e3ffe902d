"""Byte histograms and the entropy measures used to size the bit extractor.

Shannon entropy gives the optimistic (upper) estimate of extractable bits per
byte, min-entropy the worst-case (lower) one.  A Gaussian fit of the
histogram gives the analytic source entropy ``0.5 * log2(2 pi e sigma^2)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from .errors import EmptyInputError, InsufficientDataError, InvalidParameterError, ZeroVarianceError
from .ingest import BitStream
from .phase_sim import SampleBlock

MAX_BLOCK_BITS = 20


@dataclass(frozen=True, eq=False)
class Histogram256:
    """Occurrence counts of the 256 byte values.

    With ``signed=True`` bin ``i`` holds value ``i - 128``; otherwise bin ``i``
    holds value ``i``.
    """

    counts: np.ndarray
    signed: bool = False

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if counts.shape != (256,):
            raise InvalidParameterError(f"expected 256 bins, got {counts.size}")
        if (counts < 0).any():
            raise InvalidParameterError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def values(self) -> np.ndarray:
        """Byte value represented by each bin."""
        return np.arange(256) - (128 if self.signed else 0)

    def probabilities(self) -> np.ndarray:
        total = self.total
        if total == 0:
            raise EmptyInputError("histogram is empty")
        return self.counts / total

    def merge(self, other: "Histogram256") -> "Histogram256":
        if self.signed != other.signed:
            raise InvalidParameterError("cannot merge signed and unsigned histograms")
        return Histogram256(self.counts + other.counts, self.signed)

    __add__ = merge

    def to_dict(self) -> dict:
        return {"signed": self.signed, "total": self.total, "counts": self.counts.tolist()}


def histogram(data: Union[SampleBlock, np.ndarray, bytes], signed: bool | None = None) -> Histogram256:
    """Exact byte counts.  ``signed`` defaults to True for ADC samples / ``int8`` input."""
    if isinstance(data, SampleBlock):
        raw, is_signed = data.as_bytes(), True
    elif isinstance(data, (bytes, bytearray, memoryview)):
        raw, is_signed = np.frombuffer(data, dtype=np.uint8), False
    else:
        arr = np.asarray(data)
        is_signed = arr.dtype == np.int8
        if arr.dtype not in (np.int8, np.uint8):
            if arr.size and (arr.min() < -128 or arr.max() > 255):
                raise InvalidParameterError("byte values must lie in [-128, 255]")
            is_signed = bool(arr.size and arr.min() < 0)
            arr = arr.astype(np.int16).astype(np.uint8)
        raw = arr.reshape(-1).view(np.uint8)
    if raw.size == 0:
        raise EmptyInputError("cannot build a histogram of empty input")
    if signed is None:
        signed = is_signed
    counts = np.bincount(raw, minlength=256)
    if signed:
        counts = np.roll(counts, 128)
    return Histogram256(counts, signed)


def _probabilities(h) -> np.ndarray:
    if isinstance(h, Histogram256):
        return h.probabilities()
    w = np.asarray(h, dtype=np.float64).reshape(-1)
    if (w < 0).any():
        raise InvalidParameterError("weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise EmptyInputError("distribution has zero total mass")
    return w / total


def shannon_entropy(h) -> float:
    """``-sum p log2 p`` over occupied bins; ``h`` is a histogram or weight vector."""
    p = _probabilities(h)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def min_entropy(h) -> float:
    """``-log2(max p)``: worst-case guessing entropy."""
    return float(-math.log2(_probabilities(h).max()))


def fit_gaussian_sigma(h: Histogram256) -> float:
    """Moment estimate (population convention) of the histogram's standard deviation."""
    total = h.total
    if total < 2:
        raise InsufficientDataError("need at least two observations to fit sigma")
    if np.count_nonzero(h.counts) < 2:
        raise ZeroVarianceError("all observations share one value")
    p = h.counts / total
    x = h.values().astype(np.float64)
    mean = float(np.dot(p, x))
    return math.sqrt(float(np.dot(p, (x - mean) ** 2)))


def gaussian_entropy(sigma: float) -> float:
    """Entropy in bits of a Gaussian with standard deviation ``sigma`` in code units."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    return 0.5 * math.log2(2 * math.pi * math.e * sigma * sigma)


def block_counts(bits: BitStream, m: int, chunk_blocks: int = 1 << 20) -> np.ndarray:
    """Counts of the ``2**m`` values of non-overlapping m-bit blocks (MSB-first)."""
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= MAX_BLOCK_BITS:
        raise InvalidParameterError(f"block length must be in 1..{MAX_BLOCK_BITS}, got {m}")
    nblocks = bits.length_bits // m
    if nblocks == 0:
        raise InsufficientDataError(f"{bits.length_bits} bits hold no {m}-bit block")
    counts = np.zeros(1 << m, dtype=np.int64)
    if m == 8:
        return counts + np.bincount(bits.packed[:nblocks], minlength=256)
    # A chunk of 8*k blocks spans exactly m*k whole bytes.
    k = max(chunk_blocks // 8, 1)
    for start in range(0, nblocks, 8 * k):
        nb = min(8 * k, nblocks - start)
        first_byte = start * m // 8
        chunk = np.unpackbits(
            bits.packed[first_byte : first_byte + -(-nb * m // 8)], count=nb * m
        ).reshape(nb, m)
        value = np.zeros(nb, dtype=np.int64)
        for j in range(m):
            value <<= 1
            value |= chunk[:, j]
        counts += np.bincount(value, minlength=1 << m)
    return counts


def block_entropy(bits: BitStream, m: int) -> tuple[float, float]:
    """Shannon entropy ``H(m)`` of m-bit blocks and the normalized ``H(m) / m``."""
    h = shannon_entropy(block_counts(bits, m))
    return h, h / m


@dataclass(frozen=True)
class EntropyReport:
    shannon_bits_per_byte: float
    min_entropy_bits_per_byte: float
    gaussian_fit_sigma: float
    gaussian_fit_entropy: float
    sample_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def entropy_report(h: Histogram256) -> EntropyReport:
    try:
        sigma = fit_gaussian_sigma(h)
        fitted = gaussian_entropy(sigma)
    except (ZeroVarianceError, InsufficientDataError):
        sigma, fitted = 0.0, float("nan")
    return EntropyReport(
        shannon_bits_per_byte=shannon_entropy(h),
        min_entropy_bits_per_byte=min_entropy(h),
        gaussian_fit_sigma=sigma,
        gaussian_fit_entropy=fitted,
        sample_count=h.total,
    )
