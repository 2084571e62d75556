"""q-deformed special functions (Pochhammer symbols and factorials)."""
from __future__ import annotations

import math

# Infinite products are truncated once the running factor differs from 1 by
# less than this; at binary64 the remaining tail multiplies to 1.
_INF_CUTOFF = 1e-16


def q_pochhammer(a, tau: float, n=None) -> complex:
    """(a; tau)_n = (1 - a)(1 - tau a) ... (1 - tau^(n-1) a).

    ``n=None`` (or ``math.inf``) gives the infinite product, truncated when
    |tau^j a| < 1e-16.  Requires 0 < tau < 1.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"need 0 < tau < 1, got {tau}")
    if n is None or n == math.inf:
        prod = 1.0 + 0j if isinstance(a, complex) else 1.0
        term = a
        while abs(term) >= _INF_CUTOFF:
            prod *= 1.0 - term
            term *= tau
        return prod
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a nonnegative integer or None, got {n}")
    prod = 1.0 + 0j if isinstance(a, complex) else 1.0
    term = a
    for _ in range(int(n)):
        prod *= 1.0 - term
        term *= tau
    return prod


def tau_factorial(k: int, tau: float) -> float:
    """tau-deformed factorial k_tau! = (tau; tau)_k (1 - tau)^(-k)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    # (tau;tau)_k / (1-tau)^k = prod_{j=1..k} (1 - tau^j)/(1 - tau)
    out = 1.0
    for j in range(1, k + 1):
        out *= (1.0 - tau ** j) / (1.0 - tau)
    return out
