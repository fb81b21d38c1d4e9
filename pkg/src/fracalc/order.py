from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, IntegerOrderError


@dataclass(frozen=True)
class FracOrder:
    """A fractional order alpha > 0 split as alpha = (m - 1) + sigma.

    ``m = ceil(alpha)`` and ``0 < sigma <= 1``; ``sigma == 1`` exactly when
    alpha is an integer.
    """

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0:
            raise DomainError(f"fractional order must be a positive finite number: {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def m(self) -> int:
        return math.ceil(self.alpha)

    @property
    def sigma(self) -> float:
        return self.alpha - (self.m - 1)

    @property
    def is_integer(self) -> bool:
        return self.sigma == 1.0

    def require_fractional(self) -> FracOrder:
        if self.is_integer:
            raise IntegerOrderError(f"order {self.alpha} is an integer; a non-integer order is required")
        return self

    def __float__(self) -> float:
        return self.alpha


def as_order(alpha: FracOrder | float) -> FracOrder:
    return alpha if isinstance(alpha, FracOrder) else FracOrder(alpha)
