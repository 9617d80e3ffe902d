import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasetrng.entropy import (
    Histogram256,
    block_counts,
    block_entropy,
    entropy_report,
    fit_gaussian_sigma,
    gaussian_entropy,
    histogram,
    min_entropy,
    shannon_entropy,
)
from phasetrng.errors import EmptyInputError, InsufficientDataError, InvalidParameterError, ZeroVarianceError
from phasetrng.ingest import BitStream


def gaussian_bins(sigma):
    """Bin masses of codes -128..127 from mpmath CDF differences, tails in the end bins."""
    mpmath.mp.dps = 40
    cdf = lambda x: mpmath.ncdf(x, 0, sigma)
    masses = [cdf(-127.5)]
    masses += [cdf(k + 0.5) - cdf(k - 0.5) for k in range(-127, 127)]
    masses.append(1 - cdf(126.5))
    return masses


def test_histogram_examples():
    h = histogram(np.arange(256, dtype=np.uint8))
    assert np.all(h.counts == 1) and h.total == 256
    assert histogram(bytes([0, 0, 0])).counts[0] == 3
    with pytest.raises(EmptyInputError):
        histogram(b"")


def test_signed_histogram_orders_by_value():
    h = histogram(np.array([-128, -1, 0, 127], dtype=np.int8))
    assert h.signed
    assert h.values()[0] == -128 and h.values()[-1] == 127
    assert h.counts[[0, 127, 128, 255]].tolist() == [1, 1, 1, 1]


def test_entropy_examples():
    uniform = np.ones(256)
    assert shannon_entropy(uniform) == 8.0
    assert min_entropy(uniform) == 8.0
    assert shannon_entropy(np.eye(256)[3]) == 0.0
    half = np.full(256, 0.5 / 255)
    half[0] = 0.5
    assert min_entropy(half) == pytest.approx(1.0)
    with pytest.raises(EmptyInputError):
        shannon_entropy(np.zeros(256))
    with pytest.raises(EmptyInputError):
        min_entropy(np.zeros(256))


def test_discretized_gaussian_against_mpmath():
    masses = gaussian_bins(37.3)
    oracle_h = float(-mpmath.fsum(p * mpmath.log(p, 2) for p in masses))
    oracle_min = float(-mpmath.log(max(masses), 2))
    w = np.array([float(p) for p in masses])
    assert shannon_entropy(w) == pytest.approx(oracle_h, abs=1e-9)
    assert min_entropy(w) == pytest.approx(oracle_min, abs=1e-9)
    # Clipping at +-127.5 codes (3.4 sigma) folds the tails into the end bins,
    # which costs about 0.003 bit against the unclipped 7.268.
    assert oracle_h == pytest.approx(7.268, abs=5e-3)
    wide = [mpmath.ncdf(k + 0.5, 0, 37.3) - mpmath.ncdf(k - 0.5, 0, 37.3) for k in range(-600, 601)]
    assert float(-mpmath.fsum(p * mpmath.log(p, 2) for p in wide if p > 0)) == pytest.approx(7.268, abs=1e-3)
    assert oracle_min == pytest.approx(6.55, abs=0.01)


def test_fit_sigma_examples():
    h = histogram(np.array([-1, 1], dtype=np.int8))
    assert fit_gaussian_sigma(h) == pytest.approx(1.0)
    with pytest.raises(ZeroVarianceError):
        fit_gaussian_sigma(histogram(np.array([5, 5, 5], dtype=np.int8)))


def test_fit_sigma_on_quantized_gaussian():
    x = np.random.default_rng(9).normal(0, 37.3, size=10_000_000)
    codes = np.clip(np.rint(x), -128, 127).astype(np.int8)
    # Rounding adds 1/12 code^2 of variance, far inside the 0.5 % tolerance.
    assert fit_gaussian_sigma(histogram(codes)) == pytest.approx(37.3, rel=0.005)


def test_gaussian_entropy_examples():
    assert gaussian_entropy(1 / math.sqrt(2 * math.pi * math.e)) == pytest.approx(0.0, abs=1e-12)
    assert gaussian_entropy(37.3) == pytest.approx(7.268, abs=1e-3)
    for bad in (0.0, -1.0):
        with pytest.raises(InvalidParameterError):
            gaussian_entropy(bad)


@pytest.mark.parametrize("m", [1, 3, 8, 11])
def test_block_entropy_exhaustive_and_zero(m):
    values = np.arange(1 << m)
    bits = ((values[:, None] >> np.arange(m - 1, -1, -1)) & 1).reshape(-1)
    h, ratio = block_entropy(BitStream.from_bits(bits), m)
    assert h == pytest.approx(m) and ratio == pytest.approx(1.0)
    assert block_entropy(BitStream.from_bits(np.zeros(8 * m, dtype=np.uint8)), m)[0] == 0.0


def test_block_entropy_errors():
    with pytest.raises(InsufficientDataError):
        block_entropy(BitStream.from_bits([1, 0]), 3)
    with pytest.raises(InvalidParameterError):
        block_entropy(BitStream.from_bits([1] * 100), 21)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=400), st.integers(1, 12))
def test_block_counts_match_naive(bits, m):
    if len(bits) < m:
        return
    counts = block_counts(BitStream.from_bits(bits), m, chunk_blocks=8)
    naive = np.zeros(1 << m, dtype=np.int64)
    for i in range(len(bits) // m):
        naive[int("".join(map(str, bits[i * m : (i + 1) * m])), 2)] += 1
    assert np.array_equal(counts, naive)
    assert block_entropy(BitStream.from_bits(bits), m)[1] <= 1.0 + 1e-12


weights = st.lists(st.integers(0, 1000), min_size=256, max_size=256).filter(lambda w: sum(w) > 0)


@settings(max_examples=100, deadline=None)
@given(weights, st.randoms(use_true_random=False))
def test_entropy_ordering_and_permutation(w, rnd):
    support = sum(1 for v in w if v)
    hs, hm = shannon_entropy(w), min_entropy(w)
    assert hm <= hs + 1e-12
    assert hs <= math.log2(support) + 1e-12
    shuffled = list(w)
    rnd.shuffle(shuffled)
    assert shannon_entropy(shuffled) == pytest.approx(hs, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=1, max_size=300), st.binary(min_size=1, max_size=300))
def test_merge_equals_concatenation(a, b):
    merged = histogram(a) + histogram(b)
    assert np.array_equal(merged.counts, histogram(a + b).counts)
    assert shannon_entropy(merged) == shannon_entropy(histogram(a + b))


def test_merge_rejects_mixed_signedness():
    with pytest.raises(InvalidParameterError):
        histogram(np.array([1], dtype=np.int8)).merge(histogram(b"\x01"))


def test_entropy_report_degenerate():
    r = entropy_report(histogram(bytes([7] * 10)))
    assert r.shannon_bits_per_byte == 0.0 and math.isnan(r.gaussian_fit_entropy)
    assert isinstance(Histogram256(np.ones(256, dtype=np.int64), False).to_dict(), dict)
