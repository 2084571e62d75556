"""Result tables with provenance, shared by the exact and stochastic routes."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InversionError

MASS_CLIP = -1e-8
SUM_TOL = 1e-6


@dataclass
class MomentTable:
    """k -> E[tau^{k N_0(t)}] with an error figure and a method tag."""

    ks: list[int]
    values: list[float]
    errors: list[float]
    method: str

    def __post_init__(self):
        if self.ks and self.ks[0] == 0 and abs(self.values[0] - 1.0) > 1e-12:
            raise ValueError("entry k=0 must equal 1")

    def value(self, k: int) -> float:
        return self.values[self.ks.index(k)]

    def rows(self):
        return [(k, v, e, self.method)
                for k, v, e in zip(self.ks, self.values, self.errors)]


@dataclass
class DistributionTable:
    """P(N_0(t) = m) on m = 0..M with a tail bound and a method tag."""

    masses: np.ndarray
    tail: float
    method: str
    errors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.min() < MASS_CLIP:
            raise InversionError(
                f"negative mass {self.masses.min():.3e} below clip tolerance")
        if np.any(self.masses < 0.0):
            warnings.warn("clipping negative mass dust to 0", stacklevel=2)
            self.masses = np.clip(self.masses, 0.0, None)
        total = self.masses.sum() + self.tail
        if not (1.0 - SUM_TOL <= total <= 1.0 + SUM_TOL):
            raise InversionError(f"masses + tail = {total} not within {SUM_TOL} of 1")

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.masses))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.masses)

    def rows(self):
        errs = self.errors if self.errors is not None else np.zeros_like(self.masses)
        return [(int(m), float(v), float(e), self.method)
                for m, v, e in zip(self.support, self.masses, errs)]
