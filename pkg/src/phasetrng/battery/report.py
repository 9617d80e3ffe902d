"""Pass/fail criteria and report assembly for single- and multi-sequence runs.

Single mode tests one long sequence and requires every P-value to fall
strictly inside a band (default ``(0.01, 0.99)``, the Diehard-style rule).
Multi mode splits the input into ``k`` sequences of ``L`` bits, counts the
fraction of sequences with P >= alpha for every test and P-value, and checks
that fraction against a proportion band; with enough sequences it also checks
that the P-values are uniformly spread over [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..errors import ConfigError, InsufficientDataError, InvalidParameterError
from ..ingest import BitStream
from .ent import ENT_TESTS, ent_suite
from .result import TestResult
from .special import igamc
from .sts import STS_TESTS, as_bits

SCHEMA_VERSION = 1
UNIFORMITY_BINS = 10


@dataclass(frozen=True)
class Criteria:
    band: tuple[float, float] = (0.01, 0.99)
    alpha: float = 0.01
    proportion_band: Optional[tuple[float, float]] = None
    uniformity_min: float = 1e-4
    uniformity_min_sequences: int = 55

    def __post_init__(self) -> None:
        lo, hi = self.band
        if not 0 <= lo < hi <= 1:
            raise InvalidParameterError(f"band must satisfy 0 <= lo < hi <= 1, got {self.band}")
        if not 0 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.proportion_band is not None and not self.proportion_band[0] <= self.proportion_band[1]:
            raise InvalidParameterError(f"empty proportion band {self.proportion_band}")

    def proportion_band_for(self, k: int) -> tuple[float, float]:
        """Configured band, or the 3-sigma binomial band around ``1 - alpha``.

        The computed lower edge is rounded down to the 1/k grid that
        proportions live on (0.9602 -> 0.96 for k = 100).
        """
        if self.proportion_band is not None:
            return self.proportion_band
        p = 1.0 - self.alpha
        half = 3.0 * math.sqrt(p * self.alpha / k)
        lo = math.floor((p - half) * k + 1e-9) / k
        return max(lo, 0.0), min(p + half, 1.0)

    def single_pass(self, p_values: Iterable[float]) -> bool:
        lo, hi = self.band
        p_values = list(p_values)
        return bool(p_values) and all(lo < p < hi for p in p_values)

    def to_dict(self) -> dict:
        return {
            "band": list(self.band),
            "alpha": self.alpha,
            "proportion_band": list(self.proportion_band) if self.proportion_band else None,
            "uniformity_min": self.uniformity_min,
            "uniformity_min_sequences": self.uniformity_min_sequences,
        }


# Fixed 0.99 +- 0.095 proportion band, wider than the binomial default.
WIDE_PROPORTION_CRITERIA = Criteria(proportion_band=(0.99 - 0.095, 1.0))


def uniformity_p_value(p_values: Sequence[float]) -> float:
    """Chi-square test (9 dof) that P-values are spread evenly over ten bins."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        raise InsufficientDataError("no P-values to test for uniformity")
    bins = np.minimum((p * UNIFORMITY_BINS).astype(np.int64), UNIFORMITY_BINS - 1)
    counts = np.bincount(bins, minlength=UNIFORMITY_BINS)
    expected = p.size / UNIFORMITY_BINS
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return igamc((UNIFORMITY_BINS - 1) / 2.0, chi2 / 2.0)


@dataclass(frozen=True)
class TestSummary:
    """Multi-sequence outcome for one test: one entry per P-value index."""

    __test__ = False

    name: str
    proportions: tuple[float, ...]
    band: tuple[float, float]
    uniformity: tuple[Optional[float], ...]
    passed: bool
    sequences: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "proportions": list(self.proportions),
            "band": list(self.band),
            "uniformity_p": list(self.uniformity),
            "pass": self.passed,
            "sequences": self.sequences,
        }


@dataclass
class BatteryReport:
    mode: str
    criteria: Criteria
    results: list[TestResult] = field(default_factory=list)
    summaries: list[TestSummary] = field(default_factory=list)
    sequences: int = 1
    sequence_bits: int = 0
    per_sequence: dict[str, list[TestResult]] = field(default_factory=dict)

    @property
    def failing(self) -> list[str]:
        if self.mode == "multi":
            return [s.name for s in self.summaries if not s.passed]
        return [r.name for r in self.results if r.error is None and not r.passed]

    @property
    def skipped(self) -> list[str]:
        return [r.name for r in self.results if r.error is not None]

    @property
    def passed(self) -> bool:
        evaluated = self.summaries if self.mode == "multi" else [r for r in self.results if r.error is None]
        return bool(evaluated) and not self.failing

    def summary(self, name: str) -> TestSummary:
        for s in self.summaries:
            if s.name == name:
                return s
        raise KeyError(name)

    def result(self, name: str) -> TestResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "criteria": self.criteria.to_dict(),
            "sequences": self.sequences,
            "sequence_bits": self.sequence_bits,
            "pass": self.passed,
            "failing": self.failing,
            "results": [r.to_dict() for r in self.results],
            "summaries": [s.to_dict() for s in self.summaries],
        }

    def to_table(self) -> str:
        lines = []
        if self.mode == "multi":
            lo, hi = self.summaries[0].band if self.summaries else (0.0, 1.0)
            lines.append(
                f"{self.sequences} sequences x {self.sequence_bits} bits, "
                f"alpha={self.criteria.alpha}, proportion band [{lo:.4f}, {hi:.4f}]"
            )
            lines.append(f"{'test':<26}{'proportion':>14}{'uniformity P':>16}  result")
            for s in self.summaries:
                for j, prop in enumerate(s.proportions):
                    label = s.name if len(s.proportions) == 1 else f"{s.name}[{j}]"
                    u = s.uniformity[j]
                    u_txt = "-" if u is None else f"{u:.6f}"
                    lines.append(f"{label:<26}{prop:>14.4f}{u_txt:>16}  {'PASS' if s.passed else 'FAIL'}")
        else:
            lo, hi = self.criteria.band
            lines.append(f"single sequence, {self.sequence_bits} bits, pass band {lo} < P < {hi}")
            lines.append(f"{'test':<26}{'statistic':>16}  {'P-value(s)':<28}result")
            for r in self.results:
                if r.error is not None:
                    lines.append(f"{r.name:<26}{'-':>16}  {'-':<28}SKIP ({r.error})")
                    continue
                ps = ", ".join(f"{p:.6f}" for p in r.p_values)
                lines.append(f"{r.name:<26}{r.statistic:>16.6g}  {ps:<28}{'PASS' if r.passed else 'FAIL'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        if self.failing:
            lines.append("failing: " + ", ".join(self.failing))
        return "\n".join(lines)


def _run_sts(name: str, seq: BitStream, params: Mapping[str, dict]) -> TestResult:
    return STS_TESTS[name](seq, **params.get(name, {}))


def _single_results(bits: BitStream, tests: Sequence[str], params: Mapping[str, dict]) -> list[TestResult]:
    results: list[TestResult] = []
    ent_wanted = [t for t in tests if t in ENT_TESTS]
    if ent_wanted:
        by_name = {r.name: r for r in ent_suite(bits.packed[: bits.length_bits // 8])}
        results.extend(by_name[t] for t in ent_wanted)
    for name in tests:
        if name in STS_TESTS:
            try:
                results.append(_run_sts(name, bits, params))
            except InsufficientDataError as exc:
                results.append(TestResult(name, float("nan"), (), False, bits.length_bits, {}, str(exc)))
    return results


def _rebadge(result: TestResult, passed: bool) -> TestResult:
    return TestResult(
        result.name, result.statistic, result.p_values, passed, result.n_bits, result.params, result.error
    )


def _coerce_bits(bits) -> BitStream:
    if isinstance(bits, BitStream):
        return bits
    return BitStream.from_bits(as_bits(bits))


DEFAULT_SINGLE_TESTS = ENT_TESTS + tuple(STS_TESTS)
DEFAULT_MULTI_TESTS = tuple(STS_TESTS)


def run_battery(
    bits,
    mode: str = "single",
    criteria: Optional[Criteria] = None,
    k: Optional[int] = None,
    L: Optional[int] = None,
    tests: Optional[Sequence[str]] = None,
    params: Optional[Mapping[str, dict]] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> BatteryReport:
    """Run the battery on ``bits`` and judge it against ``criteria``.

    ``params`` maps a test name to keyword arguments, e.g.
    ``{"sts_serial": {"m": 16}}``.  In multi mode the first ``k * L`` bits are
    split into consecutive sequences.
    """
    criteria = criteria or Criteria()
    params = params or {}
    stream = _coerce_bits(bits)
    known = set(ENT_TESTS) | set(STS_TESTS)

    if mode == "single":
        tests = tuple(tests or DEFAULT_SINGLE_TESTS)
        unknown = [t for t in tests if t not in known]
        if unknown:
            raise ConfigError(f"unknown tests: {', '.join(unknown)}")
        raw = _single_results(stream, tests, params)
        results = [r if r.error else _rebadge(r, criteria.single_pass(r.p_values)) for r in raw]
        return BatteryReport("single", criteria, results, sequence_bits=stream.length_bits)

    if mode != "multi":
        raise ConfigError(f"mode must be 'single' or 'multi', got {mode!r}")
    if not k or not L or k < 1 or L < 1:
        raise ConfigError("multi mode needs positive k and L")
    if k * L > stream.length_bits:
        raise ConfigError(
            f"{k} sequences x {L} bits need {k * L} bits, only {stream.length_bits} available"
        )
    tests = tuple(tests or DEFAULT_MULTI_TESTS)
    unknown = [t for t in tests if t not in known]
    if unknown:
        raise ConfigError(f"unknown tests: {', '.join(unknown)}")

    per_sequence: dict[str, list[TestResult]] = {t: [] for t in tests}
    for i in range(k):
        seq = stream[i * L : (i + 1) * L]
        try:
            for r in _single_results(seq, tests, params):
                if r.error is not None:
                    raise ConfigError(f"sequence length {L} too short for {r.name}: {r.error}")
                per_sequence[r.name].append(r)
        except InsufficientDataError as exc:
            raise ConfigError(f"sequence length {L}: {exc}") from exc
        if progress is not None:
            progress(i + 1, k)

    band = criteria.proportion_band_for(k)
    summaries = []
    for name in tests:
        matrix = np.array([r.p_values for r in per_sequence[name]], dtype=np.float64)
        proportions = tuple(float(np.mean(matrix[:, j] >= criteria.alpha)) for j in range(matrix.shape[1]))
        if k >= criteria.uniformity_min_sequences:
            uniformity = tuple(uniformity_p_value(matrix[:, j]) for j in range(matrix.shape[1]))
        else:
            uniformity = tuple(None for _ in range(matrix.shape[1]))
        ok = all(band[0] <= p <= band[1] for p in proportions) and all(
            u is None or u >= criteria.uniformity_min for u in uniformity
        )
        summaries.append(TestSummary(name, proportions, band, uniformity, ok, k))

    return BatteryReport(
        "multi", criteria, summaries=summaries, sequences=k, sequence_bits=L, per_sequence=per_sequence
    )


def evaluate_pvalues(named: Mapping[str, Sequence[float]], criteria: Optional[Criteria] = None) -> BatteryReport:
    """Judge externally computed P-values (e.g. from a Diehard run) with the single-mode band."""
    criteria = criteria or Criteria()
    results = []
    for name, ps in named.items():
        ps = tuple(float(p) for p in ps)
        if any(not 0 <= p <= 1 for p in ps):
            raise InvalidParameterError(f"{name}: P-values must lie in [0, 1]")
        results.append(TestResult(name, float("nan"), ps, criteria.single_pass(ps), 0, {"external": True}))
    return BatteryReport("single", criteria, results)
