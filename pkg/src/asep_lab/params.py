"""Model parameters for the asymmetric exclusion process."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Jump rates of ASEP with the drift convention q > p.

    Particles jump left at rate ``q`` and right at rate ``p``, normalized so
    that p + q = 1.  Only ``p`` is stored; ``q``, the drift ``gamma = q - p``
    and the asymmetry ``tau = p / q`` are derived, so the four numbers can
    never get out of sync.
    """

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"need 0 < p < 1/2 (drift toward -inf), got p={self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def gamma(self) -> float:
        return self.q - self.p

    @property
    def tau(self) -> float:
        return self.p / self.q
