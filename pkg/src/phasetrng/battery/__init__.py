"""Embedded randomness battery: ENT metrics plus an eight-test SP 800-22 subset."""

from .ent import ENT_TESTS, ent_suite, monte_carlo_pi
from .report import (
    WIDE_PROPORTION_CRITERIA,
    BatteryReport,
    Criteria,
    TestSummary,
    evaluate_pvalues,
    run_battery,
    uniformity_p_value,
)
from .reference import ideal_bits
from .result import TestResult
from .special import chi2_sf, erfc, igam, igamc, normal_cdf
from .sts import (
    STS_TESTS,
    sts_approx_entropy,
    sts_block_frequency,
    sts_cusum,
    sts_dft,
    sts_longest_run,
    sts_monobit,
    sts_runs,
    sts_serial,
)

__all__ = [
    "BatteryReport",
    "Criteria",
    "ENT_TESTS",
    "WIDE_PROPORTION_CRITERIA",
    "STS_TESTS",
    "TestResult",
    "TestSummary",
    "chi2_sf",
    "ent_suite",
    "erfc",
    "evaluate_pvalues",
    "igam",
    "ideal_bits",
    "igamc",
    "monte_carlo_pi",
    "normal_cdf",
    "run_battery",
    "sts_approx_entropy",
    "sts_block_frequency",
    "sts_cusum",
    "sts_dft",
    "sts_longest_run",
    "sts_monobit",
    "sts_runs",
    "sts_serial",
    "uniformity_p_value",
]
