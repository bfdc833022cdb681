from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class RateReport:
    """Per-user rates (bits/s/Hz) with the metadata needed to reproduce them."""

    per_user_rates: np.ndarray
    std_errors: np.ndarray
    method: str
    seed: int | None = None
    group_sizes: list[int] | None = None
    config: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.per_user_rates = np.asarray(self.per_user_rates, dtype=float)
        self.std_errors = np.asarray(self.std_errors, dtype=float)
        if self.per_user_rates.shape != self.std_errors.shape:
            raise ValueError("one standard error per user is required")

    @property
    def average_rate(self) -> float:
        return float(np.mean(self.per_user_rates))

    @property
    def average_std_error(self) -> float:
        """Standard error of the average, treating users as independent."""
        n = self.std_errors.size
        return float(np.sqrt(np.sum(self.std_errors ** 2)) / n)

    @property
    def n_groups(self) -> int | None:
        return None if self.group_sizes is None else len(self.group_sizes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "seed": self.seed,
            "average_rate": self.average_rate,
            "per_user_rates": self.per_user_rates.tolist(),
            "std_errors": self.std_errors.tolist(),
            "n_groups": self.n_groups,
            "group_sizes": self.group_sizes,
            "config": self.config,
            "diagnostics": self.diagnostics,
        }
