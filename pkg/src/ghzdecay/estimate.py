"""Point estimates with one-standard-deviation errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float = 0.0
    n_samples: int = 0

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n_samples": self.n_samples}

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        return cls(float(d["value"]), float(d["std_error"]), int(d["n_samples"]))


def merge_estimates(parts: Iterable[Estimate]) -> Estimate:
    """Combine sample-mean estimates of the same quantity from disjoint samples.

    Each part is treated as the mean of ``n_samples`` draws with standard error
    ``std_error``; the pooled mean and its standard error are returned exactly
    as if all draws had been averaged together (parallel variance update).
    """
    n_tot = 0
    mean = 0.0
    m2 = 0.0
    for p in parts:
        n = p.n_samples
        if n <= 0:
            continue
        # sample variance recovered from the standard error of the mean
        m2_p = (p.std_error**2 * n) * (n - 1)
        if n_tot == 0:
            n_tot, mean, m2 = n, p.value, m2_p
            continue
        delta = p.value - mean
        n_new = n_tot + n
        mean = (n_tot * mean + n * p.value) / n_new
        m2 = m2 + m2_p + delta**2 * n_tot * n / n_new
        n_tot = n_new
    if n_tot == 0:
        raise ValueError("no samples to merge")
    se = math.sqrt(m2 / (n_tot - 1) / n_tot) if n_tot > 1 else 0.0
    return Estimate(mean, se, n_tot)
