"""ENT-style byte-stream metrics: entropy, chi-square, mean, Monte-Carlo pi, serial correlation.

P-values attached to each metric:

* entropy: likelihood-ratio (G) test against uniformity, since
  ``G = 2 N ln2 (log2 K - H)`` for ``K`` equiprobable bins;
* chi-square: chi-square survival function, 255 dof for bytes and 1 for bits;
* mean: two-sided normal test on the count of one bits;
* Monte-Carlo pi: two-sided normal test on the hit count, hit rate pi/4;
* serial correlation: two-sided normal test, coefficient ~ N(0, 1/n).
"""

from __future__ import annotations

import math

import numpy as np

from ..conditioning import as_bytes
from ..entropy import shannon_entropy
from ..errors import InsufficientDataError, ZeroVarianceError
from ..spectral import serial_correlation
from .result import TestResult
from .special import chi2_sf, erfc

ALPHA = 0.01
MONTE_CARLO_GROUP = 6

ENT_TESTS = (
    "ent_entropy",
    "ent_chi_square",
    "ent_mean",
    "ent_monte_carlo_pi",
    "ent_serial_correlation",
)

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _two_sided(z: float) -> float:
    return erfc(abs(z) / math.sqrt(2.0))


def _make(name, statistic, p_values, n_bits, **params) -> TestResult:
    p_values = tuple(float(min(max(p, 0.0), 1.0)) for p in p_values)
    return TestResult(name, float(statistic), p_values, all(p >= ALPHA for p in p_values), n_bits, params)


def _missing(name: str, n_bits: int, why: str) -> TestResult:
    return TestResult(name, float("nan"), (), False, n_bits, {}, error=why)


def monte_carlo_pi(b: np.ndarray) -> tuple[float, int, int]:
    """(estimate, hits, groups): 6-byte groups give 24-bit X, Y in [0, 1); hit if X^2+Y^2 < 1."""
    groups = len(b) // MONTE_CARLO_GROUP
    if groups == 0:
        raise InsufficientDataError("Monte-Carlo pi needs at least one 6-byte group")
    g = b[: groups * MONTE_CARLO_GROUP].reshape(groups, MONTE_CARLO_GROUP).astype(np.int64)
    x = (g[:, 0] << 16) | (g[:, 1] << 8) | g[:, 2]
    y = (g[:, 3] << 16) | (g[:, 4] << 8) | g[:, 5]
    hits = int(np.count_nonzero(x * x + y * y < (1 << 48)))
    return 4.0 * hits / groups, hits, groups


def ent_suite(data) -> list[TestResult]:
    """All ENT metrics for a byte sequence, bit-level figures included."""
    b = as_bytes(data)
    n = len(b)
    n_bits = 8 * n
    if n == 0:
        return [_missing(name, 0, "no data") for name in ENT_TESTS]

    counts = np.bincount(b, minlength=256)
    ones = int(np.dot(counts, _POPCOUNT))
    bit_counts = np.array([n_bits - ones, ones])

    h_byte = shannon_entropy(counts)
    h_bit = shannon_entropy(bit_counts)
    g_byte = 2.0 * n * math.log(2) * (8.0 - h_byte)
    g_bit = 2.0 * n_bits * math.log(2) * (1.0 - h_bit)
    results = [
        _make(
            "ent_entropy",
            h_byte,
            [chi2_sf(g_byte, 255), chi2_sf(g_bit, 1)],
            n_bits,
            bits_per_byte=h_byte,
            bits_per_bit=h_bit,
            optimum_compression_pct=100.0 * (8.0 - h_byte) / 8.0,
        )
    ]

    expected = n / 256.0
    chi_byte = float(np.sum((counts - expected) ** 2) / expected)
    chi_bit = float(np.sum((bit_counts - n_bits / 2.0) ** 2) / (n_bits / 2.0))
    results.append(
        _make(
            "ent_chi_square",
            chi_byte,
            [chi2_sf(chi_byte, 255), chi2_sf(chi_bit, 1)],
            n_bits,
            bit_chi_square=chi_bit,
        )
    )

    mean_bit = ones / n_bits
    mean_byte = float(np.dot(counts, np.arange(256))) / n
    z = (ones - n_bits / 2.0) / math.sqrt(n_bits / 4.0)
    results.append(_make("ent_mean", mean_bit, [_two_sided(z)], n_bits, mean_byte=mean_byte))

    try:
        pi_hat, hits, groups = monte_carlo_pi(b)
        p_hit = math.pi / 4
        z = (hits - groups * p_hit) / math.sqrt(groups * p_hit * (1 - p_hit))
        results.append(
            _make(
                "ent_monte_carlo_pi",
                pi_hat,
                [_two_sided(z)],
                n_bits,
                groups=groups,
                error_pct=100.0 * abs(pi_hat - math.pi) / math.pi,
            )
        )
    except InsufficientDataError as exc:
        results.append(_missing("ent_monte_carlo_pi", n_bits, str(exc)))

    try:
        scc = serial_correlation(b)
        results.append(_make("ent_serial_correlation", scc, [_two_sided(scc * math.sqrt(n))], n_bits))
    except (InsufficientDataError, ZeroVarianceError) as exc:
        results.append(_missing("ent_serial_correlation", n_bits, str(exc)))
    return results
