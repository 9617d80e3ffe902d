from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class TestResult:
    """Outcome of one statistical test on one sequence.

    ``error`` is set (and ``p_values`` empty) when the input was too short for
    this particular metric; other metrics of the same run are unaffected.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_values: tuple[float, ...]
    passed: bool
    n_bits: int
    params: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def p_value(self) -> float:
        return min(self.p_values) if self.p_values else float("nan")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p_values": list(self.p_values),
            "pass": self.passed,
            "n_bits": self.n_bits,
            "params": self.params,
            "error": self.error,
        }
