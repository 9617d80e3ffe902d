"""Eight tests from the NIST SP 800-22 statistical test suite.

Each test takes a bit sequence (``BitStream`` or an array of 0/1 values) and
returns a :class:`TestResult`.  Statistic and P-value definitions follow
SP 800-22 Rev. 1a; the default ``passed`` flag uses the suite's alpha = 0.01.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InsufficientDataError, InvalidParameterError
from ..ingest import BitStream
from .result import TestResult
from .special import erfc, igamc, normal_cdf

ALPHA = 0.01

# Minimum sequence lengths recommended for each test.
MIN_BITS = {
    "sts_monobit": 100,
    "sts_block_frequency": 100,
    "sts_runs": 100,
    "sts_longest_run": 128,
    "sts_cusum": 100,
    "sts_approx_entropy": 100,
    "sts_serial": 100,
    "sts_dft": 1000,
}

# (block length M, class upper edges, class probabilities), from the suite.
LONGEST_RUN_TABLES = {
    8: ((1, 2, 3, 4), (0.21484375, 0.3671875, 0.23046875, 0.1875)),
    128: (
        (4, 5, 6, 7, 8, 9),
        (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847),
    ),
    10000: (
        (10, 11, 12, 13, 14, 15, 16),
        (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727),
    ),
}


def as_bits(bits) -> np.ndarray:
    """Flat ``uint8`` 0/1 array from a BitStream, array, or '0101' string."""
    if isinstance(bits, BitStream):
        return bits.bits()
    if isinstance(bits, str):
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits).reshape(-1)
    if arr.dtype == np.bool_:
        return arr.astype(np.uint8)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise InvalidParameterError("bit sequence must contain only 0 and 1")
    return arr.astype(np.uint8, copy=False)


def _require(name: str, eps: np.ndarray, minimum: int | None = None) -> int:
    n = len(eps)
    need = MIN_BITS[name] if minimum is None else minimum
    if n < need:
        raise InsufficientDataError(f"{name} needs at least {need} bits, got {n}")
    return n


def _result(name, statistic, p_values, n, **params) -> TestResult:
    p_values = tuple(float(min(max(p, 0.0), 1.0)) for p in p_values)
    return TestResult(
        name=name,
        statistic=float(statistic),
        p_values=p_values,
        passed=all(p >= ALPHA for p in p_values),
        n_bits=n,
        params=params,
    )


def sts_monobit(bits) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_monobit", eps)
    s = 2 * int(np.count_nonzero(eps)) - n
    s_obs = abs(s) / math.sqrt(n)
    return _result("sts_monobit", s_obs, [erfc(s_obs / math.sqrt(2))], n, s_n=s)


def sts_block_frequency(bits, M: int = 128) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_block_frequency", eps)
    if M < 1 or M > n:
        raise InvalidParameterError(f"block length M must be in 1..{n}, got {M}")
    N = n // M
    pi = eps[: N * M].reshape(N, M).sum(axis=1) / M
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    return _result("sts_block_frequency", chi2, [igamc(N / 2.0, chi2 / 2.0)], n, M=M, N=N)


def sts_runs(bits) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_runs", eps)
    pi = np.count_nonzero(eps) / n
    v_obs = 1 + int(np.count_nonzero(eps[1:] != eps[:-1]))
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # Frequency prerequisite failed; the suite reports P = 0.
        return _result("sts_runs", v_obs, [0.0], n, pi=pi, prerequisite_failed=True)
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return _result("sts_runs", v_obs, [erfc(num / den)], n, pi=pi)


def longest_runs_per_block(eps: np.ndarray, M: int) -> np.ndarray:
    """Longest run of ones inside each complete M-bit block."""
    N = len(eps) // M
    blocks = np.zeros((N, M + 2), dtype=np.int8)
    blocks[:, 1:-1] = eps[: N * M].reshape(N, M)
    edges = np.diff(blocks, axis=1).reshape(-1)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    longest = np.zeros(N, dtype=np.int64)
    np.maximum.at(longest, starts // (M + 1), ends - starts)
    return longest


def sts_longest_run(bits, M: int | None = None) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_longest_run", eps)
    if M is None:
        M = 8 if n < 6272 else 128 if n < 750_000 else 10_000
    if M not in LONGEST_RUN_TABLES:
        raise InvalidParameterError(f"M must be one of {sorted(LONGEST_RUN_TABLES)}, got {M}")
    edges, probs = LONGEST_RUN_TABLES[M]
    N = n // M
    if N == 0:
        raise InsufficientDataError(f"sts_longest_run needs at least {M} bits for M={M}")
    longest = longest_runs_per_block(eps, M)
    classes = np.clip(longest, edges[0], edges[-1]) - edges[0]
    v = np.bincount(classes, minlength=len(edges))
    expected = N * np.asarray(probs)
    chi2 = float(np.sum((v - expected) ** 2 / expected))
    K = len(edges) - 1
    return _result(
        "sts_longest_run", chi2, [igamc(K / 2.0, chi2 / 2.0)], n, M=M, N=N, counts=v.tolist()
    )


def _cusum_p(n: int, z: int) -> float:
    sq = math.sqrt(n)
    total = 1.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        total -= normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        total += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return total


def sts_cusum(bits) -> TestResult:
    """Cumulative sums, forward then reverse; two P-values."""
    eps = as_bits(bits)
    n = _require("sts_cusum", eps)
    steps = 2 * eps.astype(np.int64) - 1
    walk = np.cumsum(steps)
    z_fwd = int(np.max(np.abs(walk)))
    # Reverse walk partial sums are total - forward prefix sums.
    z_rev = int(max(abs(walk[-1]), np.max(np.abs(walk[-1] - walk[:-1]))))
    return _result(
        "sts_cusum",
        z_fwd,
        [_cusum_p(n, z_fwd), _cusum_p(n, z_rev)],
        n,
        z_forward=z_fwd,
        z_reverse=z_rev,
    )


def _pattern_counts(eps: np.ndarray, m: int) -> np.ndarray:
    """Counts of all overlapping m-bit patterns with wrap-around."""
    if m == 0:
        return np.array([len(eps)], dtype=np.int64)
    n = len(eps)
    ext = np.concatenate((eps, eps[: m - 1])).astype(np.int64)
    value = np.zeros(n, dtype=np.int64)
    for j in range(m):
        value <<= 1
        value |= ext[j : j + n]
    return np.bincount(value, minlength=1 << m)


def _default_apen_m(n: int) -> int:
    # at least 256 expected counts per (m+1)-bit pattern; m = 10 at 1e6 bits
    return max(1, min(10, int(math.floor(math.log2(n))) - 9))


def sts_approx_entropy(bits, m: int | None = None) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_approx_entropy", eps)
    if m is None:
        m = _default_apen_m(n)
    if not 1 <= m <= 24:
        raise InvalidParameterError(f"block length m must be in 1..24, got {m}")

    def phi(k: int) -> float:
        c = _pattern_counts(eps, k)
        c = c[c > 0] / n
        return float(np.sum(c * np.log(c)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2) - apen)
    p = igamc(2.0 ** (m - 1), chi2 / 2.0)
    return _result("sts_approx_entropy", chi2, [p], n, m=m, apen=apen)


def _default_serial_m(n: int) -> int:
    return max(2, min(16, int(math.floor(math.log2(n))) - 3))


def sts_serial(bits, m: int | None = None) -> TestResult:
    """Serial test; P-values for the first and second differences of psi^2."""
    eps = as_bits(bits)
    n = _require("sts_serial", eps)
    if m is None:
        m = _default_serial_m(n)
    if not 2 <= m <= 24:
        raise InvalidParameterError(f"block length m must be in 2..24, got {m}")

    def psi2(k: int) -> float:
        if k <= 0:
            return 0.0
        c = _pattern_counts(eps, k).astype(np.float64)
        return float((2.0**k) / n * np.dot(c, c) - n)

    p0, p1, p2 = psi2(m), psi2(m - 1), psi2(m - 2)
    d1 = p0 - p1
    d2 = p0 - 2.0 * p1 + p2
    pv1 = igamc(2.0 ** (m - 2), d1 / 2.0) if d1 > 0 else 1.0
    pv2 = igamc(2.0 ** (m - 3), d2 / 2.0) if d2 > 0 else 1.0
    return _result("sts_serial", d1, [pv1, pv2], n, m=m, del1=d1, del2=d2)


def sts_dft(bits) -> TestResult:
    eps = as_bits(bits)
    n = _require("sts_dft", eps)
    return _dft(eps)


def _dft(eps: np.ndarray) -> TestResult:
    n = len(eps)
    x = 2.0 * eps - 1.0
    modulus = np.abs(np.fft.fft(x)[: n // 2])
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(modulus < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return _result("sts_dft", d, [erfc(abs(d) / math.sqrt(2))], n, n0=n0, n1=n1)


STS_TESTS = {
    "sts_monobit": sts_monobit,
    "sts_block_frequency": sts_block_frequency,
    "sts_runs": sts_runs,
    "sts_longest_run": sts_longest_run,
    "sts_cusum": sts_cusum,
    "sts_approx_entropy": sts_approx_entropy,
    "sts_serial": sts_serial,
    "sts_dft": sts_dft,
}
