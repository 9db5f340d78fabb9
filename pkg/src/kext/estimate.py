"""Container for entropy values produced by the different routes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

Method = Literal["closed-form", "quadrature", "spacing-MC"]


@dataclass(frozen=True)
class EntropyEstimate:
    """An entropy value with the route that produced it.

    ``error`` is a quadrature error bound (or standard error for Monte
    Carlo); ``ci`` is a confidence interval when the route provides one.
    """

    value: float
    method: Method
    error: float | None = None
    ci: tuple[float, float] | None = None
    details: dict = field(default_factory=dict, compare=False)

    def __float__(self) -> float:
        return self.value
