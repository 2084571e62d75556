"""Coordinate (Bethe-ansatz) route: k-particle Green's function, boundary
condition residuals, and the distribution formula through the kernel K1.

Conventions pinned against the exact uniformization oracle:

  * the Green's function propagates the original dynamics (right rate p,
    left rate q); as a function of the target it solves the master equation
    d/dt u = (L^k)* u.
  * the amplitude for an inversion pair takes its indices from the permuted
    values: for positions i < j with sigma(i) > sigma(j) the factor is
    S_{sigma(i) sigma(j)}.  The opposite pairing fails the t = 0 initial
    data at targets far left of the sources.
  * the kernel K1 needs its circle C_R large enough that p + q xi xi' - xi
    cannot vanish for xi, xi' on C_R, i.e. q R^2 > p + R; the default is
    1.35 x that threshold.  Smaller radii put denominator zeros on the
    contour and the determinant degenerates.
"""
from __future__ import annotations

import math
from itertools import permutations as _perms

import numpy as np
from scipy.special import ive

from .contours import circle
from .errors import (ConvergenceError, DomainError, GeometryError, SizeError)
from .linalg import nystrom_matrix
from .params import ModelParams
from .qseries import q_pochhammer

IMAG_TOL = 1e-9


def epsilon(xi, params: ModelParams):
    """eps(xi) = p/xi + q xi - 1 (zero at xi = 1 since p + q = 1)."""
    if np.any(xi == 0):
        raise DomainError("epsilon has a pole at xi = 0")
    return params.p / xi + params.q * xi - 1.0


def s_factor(alpha_xi, beta_xi, params: ModelParams):
    """S_{ab} = -(p + q xi_a xi_b - xi_a) / (p + q xi_a xi_b - xi_b)."""
    p, q = params.p, params.q
    num = p + q * alpha_xi * beta_xi - alpha_xi
    den = p + q * alpha_xi * beta_xi - beta_xi
    if np.any(np.abs(den) < 1e-14):
        raise DomainError("vanishing S denominator (pole on contour)")
    return -num / den


def inversions(sigma: tuple[int, ...]) -> list[tuple[int, int]]:
    """Value pairs (sigma(i), sigma(j)), i < j, appearing out of order."""
    return [(sigma[i], sigma[j])
            for i in range(len(sigma)) for j in range(i + 1, len(sigma))
            if sigma[i] > sigma[j]]


def amplitude(sigma: tuple[int, ...], xi, params: ModelParams):
    """A_sigma = prod of S_{alpha beta} over the inversions of sigma.

    ``sigma`` is 1-based (a tuple of the values sigma(1..k)); ``xi`` is the
    tuple/array of integration variables xi_1..xi_k.
    """
    out = None
    for a, b in inversions(sigma):
        s = s_factor(xi[a - 1], xi[b - 1], params)
        out = s if out is None else out * s
    if out is None:
        return np.ones_like(np.asarray(xi[0], dtype=complex)) if np.ndim(xi[0]) \
            else 1.0
    return out


def default_radius(params: ModelParams) -> float:
    """Largest circle keeping every S pole outside: q r^2 + r < p."""
    p, q = params.p, params.q
    rmax = (-1.0 + math.sqrt(1.0 + 4.0 * p * q)) / (2.0 * q)
    return 0.85 * rmax


# ------------------------------------------------------------- free walk
def free_propagator_table(t: float, params: ModelParams, amax: int = 80):
    """g(a) = [xi^a] e^{eps(xi) t}: the displacement law of one free particle
    (right rate p, left rate q), via scaled Bessel functions."""
    a = np.arange(-amax, amax + 1)
    z = 2.0 * t * math.sqrt(params.p * params.q)
    # ive = e^{-|z|} I_a(z); total prefactor e^{z - t} stays modest
    vals = (params.q / params.p) ** (a / 2.0) * ive(np.abs(a), z) * math.exp(z - t)
    table = dict(zip(a.tolist(), vals.tolist()))
    return lambda m: table.get(m, 0.0)


# ---------------------------------------------------------- green's function
def _green_quadrature(ys, xs, t, params, radius, nodes):
    k = len(ys)
    r = radius or default_radius(params)
    p, q = params.p, params.q
    if q * r * r + r >= p:
        raise GeometryError(f"radius {r} violates q r^2 + r < p")
    cont = circle(0.0, r, nodes)
    z, w = cont.nodes, cont.weights
    E = np.exp(epsilon(z, params) * t)
    shape = [1] * k

    def axis(vec, j):
        sh = shape.copy()
        sh[j] = len(vec)
        return vec.reshape(sh)

    total = 0.0 + 0j
    for sigma in _perms(range(1, k + 1)):
        term = np.ones((1,) * k, dtype=complex)
        for j in range(k):
            a = xs[j] - ys[sigma[j] - 1] - 1
            term = term * axis(z ** a, sigma[j] - 1)
        for j in range(k):
            term = term * axis(E * w, j)
        for a, b in inversions(sigma):
            za = axis(z, a - 1)
            zb = axis(z, b - 1)
            term = term * s_factor(za, zb, params)
        total += term.sum()
    return total


def _green_series_k2(ys, xs, t, params, nmax=90):
    """Exchange term of the k=2 Green's function resummed through the free
    propagator: expanding 1/(p + q xi1 xi2 - xi1) in powers of
    xi1 (1 - q xi2)/p turns the double contour integral into a factorially
    convergent double series of Bessel coefficients, with none of the
    r^{-|offset|} roundoff amplification of the direct quadrature."""
    p, q = params.p, params.q
    G = free_propagator_table(t, params)
    A = xs[0] - ys[1] - 1
    B = xs[1] - ys[0] - 1
    ident = G(ys[0] - xs[0]) * G(ys[1] - xs[1])
    tot = 0.0
    for m in range(nmax):
        binom = 1.0
        inner = 0.0
        gm1 = G(-(m + B) - 1)
        gm2 = G(-(m + B) - 2)
        for j in range(m + 1):
            c = binom * (-q) ** j
            inner += c * (p * gm1 * G(-(j + A) - 1)
                          + q * gm2 * G(-(j + A) - 2)
                          - gm1 * G(-(j + A) - 2))
            binom = binom * (m - j) / (j + 1)
        tot += inner / p ** (m + 1)
    return ident - tot


def green_function(ys: tuple[int, ...], xs: tuple[int, ...], t: float,
                   params: ModelParams, radius: float | None = None,
                   nodes: int = 128, method: str = "auto") -> float:
    """Transition probability P(x(t) = xs | x(0) = ys) for k-particle ASEP.

    ``method="series"`` (default for k <= 2) evaluates the contour formula
    exactly by residues; ``method="quadrature"`` is the literal k-fold
    product quadrature (k <= 5), accurate near the diagonal but roundoff
    limited at offsets beyond ~12 sites.
    """
    if len(ys) != len(xs):
        raise ValueError("source and target must have equal particle count")
    k = len(ys)
    if k > 5:
        raise SizeError("green_function supports k <= 5")
    if params.p == 0:
        raise DomainError("formula requires p != 0")
    if method == "auto":
        method = "series" if k <= 2 else "quadrature"
    if method == "series":
        if k == 1:
            return free_propagator_table(t, params)(ys[0] - xs[0])
        if k == 2:
            return _green_series_k2(ys, xs, t, params)
        raise SizeError("series evaluation implemented for k <= 2")
    val = _green_quadrature(ys, xs, t, params, radius, nodes)
    if abs(val.imag) > IMAG_TOL:
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


# ------------------------------------------------------ boundary conditions
def check_free_evolution(v, xs: tuple[int, ...], t: float, params: ModelParams,
                         h: float = 1e-4) -> tuple[float, float]:
    """Residuals of the free evolution equation and its boundary condition.

    ``v(xs, t)`` must be evaluable off the Weyl chamber.  Returns (relative
    free-evolution residual with d/dt by centered difference of step h,
    relative boundary residual maximized over adjacent coordinate pairs;
    nan if xs has no adjacent pair).
    """
    p, q = params.p, params.q
    base = v(xs, t)
    scale = max(abs(base), 1e-300)
    ddt = (v(xs, t + h) - v(xs, t - h)) / (2.0 * h)
    gen = 0.0
    for j in range(len(xs)):
        left = tuple(x - 1 if i == j else x for i, x in enumerate(xs))
        right = tuple(x + 1 if i == j else x for i, x in enumerate(xs))
        # adjoint one-particle generator: left rate p, right rate q
        gen += p * v(left, t) + q * v(right, t) - base
    free_res = abs(ddt - gen) / scale
    bres = math.nan
    for j in range(len(xs) - 1):
        if xs[j + 1] != xs[j] + 1:
            continue
        lower = tuple(x - 1 if i == j + 1 else x for i, x in enumerate(xs))
        upper = tuple(x + 1 if i == j else x for i, x in enumerate(xs))
        r = abs(p * v(lower, t) + q * v(upper, t) - base) / scale
        bres = r if math.isnan(bres) else max(bres, r)
    return free_res, bres


# ---------------------------------------------------------- TW distribution
def k1_kernel(t: float, params: ModelParams):
    """K1(xi, xi') = q e^{eps(xi) t} / (p + q xi xi' - xi)."""
    p, q = params.p, params.q

    def kernel(xi, xip):
        return q * np.exp(epsilon(xi, params) * t) / (p + q * xi * xip - xi)

    return kernel


def k1_radius(params: ModelParams) -> float:
    """1.35 x the smallest radius with q R^2 > p + R (nonvanishing kernel
    denominator on C_R x C_R)."""
    p, q = params.p, params.q
    return 1.35 * (1.0 + math.sqrt(1.0 + 4.0 * p * q)) / (2.0 * q)


def tw_distribution(m: int, t: float, params: ModelParams,
                    radii: tuple[float, float] | None = None,
                    nodes: int = 256, conv_tol: float = 1e-6) -> float:
    """P(N_0(t) = m) by the zeta-contour integral of det(I - zeta K1) over
    (zeta; tau)_{m+1}, scaled by -tau^m / (2 pi i).

    The integrand's only poles are at zeta = tau^{-i}, i = 0..m, so the
    enclosing contour is taken as the homologous union of one small circle
    per pole; a single large circle is exact in principle but the
    determinant grows to ~1e10 on it and roundoff swamps the tiny masses.
    """
    if m > 6:
        raise SizeError("tw_distribution supports m <= 6")
    if t > 1.0:
        raise DomainError("tw_distribution gated to t <= 1 (kernel scaling)")
    tau = params.tau
    R, zrad = radii if radii else (k1_radius(params), None)
    if params.q * R * R <= params.p + R:
        raise GeometryError(f"C_R radius {R} admits kernel denominator zeros")
    K = nystrom_matrix(k1_kernel(t, params), circle(0.0, R, nodes))
    eigs = np.linalg.eigvals(K)
    K_h = nystrom_matrix(k1_kernel(t, params), circle(0.0, R, nodes // 2))
    eigs_h = np.linalg.eigvals(K_h)

    def quadrature(eigvals, n_z):
        total = 0.0 + 0j
        for i in range(m + 1):
            pole = tau ** -i
            rad = zrad or 0.4 * pole * (1.0 - tau)
            cont = circle(pole, rad, n_z)
            vals = np.array([np.prod(1.0 - z * eigvals)
                             / q_pochhammer(z, tau, m + 1)
                             for z in cont.nodes])
            total += np.sum(cont.weights * vals)
        return -tau ** m * total

    val = quadrature(eigs, 64)
    val_h = quadrature(eigs_h, 32)
    if abs(val - val_h) > conv_tol:
        raise ConvergenceError(f"determinant doubling gap {abs(val - val_h):.2e}")
    if abs(val.imag) > IMAG_TOL:
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


def tw_distribution_residues(m: int, t: float, params: ModelParams,
                             nodes: int = 256) -> float:
    """Same mass by explicit residues at zeta = tau^{-i} (cross-check)."""
    tau = params.tau
    K = nystrom_matrix(k1_kernel(t, params), circle(0.0, k1_radius(params), nodes))
    eigs = np.linalg.eigvals(K)
    total = 0.0
    for i in range(m + 1):
        det = float(np.prod(1.0 - tau ** (-i) * eigs).real)
        denom = tau ** i
        for j in range(m + 1):
            if j != i:
                denom *= 1.0 - tau ** (j - i)
        total += det / denom
    return tau ** m * total
