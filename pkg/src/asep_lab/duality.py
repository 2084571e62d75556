"""The duality route to the current distribution of step-initial ASEP.

Pipeline: the k-fold contour solution ``u_step`` of the duality ODEs, two
independent evaluations of the moments E[tau^{k N_0(t)}] (partition/string
expansion and contour-collapse onto the Cauchy kernel), the tau-deformed
Laplace transform by series and by two Fredholm determinants, and inversion
of the transform back to the probability masses of N_0(t).

Contour conventions established numerically against the exact finite-window
oracle (see tests):
  * u_step and the Cauchy kernel K2 live on a small circle around -tau of
    radius min(1-tau, tau)/4 (contains -tau, excludes -1 and 0).
  * the partition expansion uses the common circle |w| = (1+tau)/2
    (contains 0 and -tau, excludes -1).
  * the Mellin-Barnes kernel lives on the circle |w| = tau^0.85.  The radius
    must stay below sqrt(tau): the factor g(w)/g(tau^s w) has essential
    singularities at Re s = 1 - ln|w|/ln tau, and pushing the s-line past
    them is what turns the line integral into the residue series; radius
    below sqrt(tau) parks them left of Re s = 1/2.
"""
from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from .contours import Contour, build_contour, circle
from .errors import (ConvergenceError, DomainError, GeometryError, SizeError,
                     TruncationError)
from .linalg import (fredholm_det, moments_from_eigs, nystrom_eigenvalues,
                     nystrom_matrix, vandermonde_solve)
from .params import ModelParams
from .partitions import enumerate_partitions
from .qseries import q_pochhammer, tau_factorial
from .tables import DistributionTable, MomentTable

IMAG_TOL = 1e-9
DET_T_CAP = 5.0   # essential singularity at -tau makes larger t ill-scaled


# ------------------------------------------------------------------ integrand
def eps_prime(z, params: ModelParams):
    """Drift function on the duality side; poles at z = -1 and z = -tau."""
    p, q = params.p, params.q
    return -z * (p - q) ** 2 / ((1.0 + z) * (p + q * z))


def h_factor(x: int, t: float, z, params: ModelParams):
    """h_{x,t}(z) = e^{eps'(z) t} ((1+z)/(1+z/tau))^{x-1} / (tau + z)."""
    tau = params.tau
    return (np.exp(eps_prime(z, params) * t)
            * ((1.0 + z) / (1.0 + z / tau)) ** (x - 1) / (tau + z))


def cauchy_contour(params: ModelParams, nodes: int = 256) -> Contour:
    """Small circle around -tau that excludes -1 and 0."""
    tau = params.tau
    return circle(-tau, min(1.0 - tau, tau) / 4.0, nodes)


_USTEP_NODES = {1: 256, 2: 256, 3: 128, 4: 48, 5: 24}


def u_step(xs: tuple[int, ...], t: float, params: ModelParams,
           nodes: int | None = None) -> float:
    """Duality observable u_step(x; t) = E^step[prod tau^{N_{x_j-1}} eta_{x_j}].

    k-fold product quadrature on the common small circle around -tau; the
    cross factors (z_A - z_B)/(z_A - tau z_B) have their poles near -tau^2,
    safely outside.  Accepts any integer tuple (also off the Weyl chamber,
    as needed by the boundary-condition checks).
    """
    k = len(xs)
    if k > 5:
        raise SizeError("u_step supports k <= 5")
    if t < 0:
        raise DomainError("t must be nonnegative")
    n = nodes or _USTEP_NODES[k]
    cont = cauchy_contour(params, n)
    z, w = cont.nodes, cont.weights * (2j * np.pi)  # keep dz; prefactor below
    tau = params.tau
    hs = [h_factor(x, t, z, params) for x in xs]
    # accumulate over the k-dim product grid by broadcasting
    shape = [1] * k
    total = np.ones((1,) * k, dtype=complex)
    for j in range(k):
        sh = shape.copy()
        sh[j] = n
        total = total * (hs[j] * w / (2j * np.pi)).reshape(sh)
    for a in range(k):
        for b in range(a + 1, k):
            sa, sb = shape.copy(), shape.copy()
            sa[a] = n
            sb[b] = n
            za = z.reshape(sa)
            zb = z.reshape(sb)
            total = total * (za - zb) / (za - tau * zb)
    val = tau ** (k * (k - 1) // 2) * total.sum()
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


# --------------------------------------------------- moments: partition route
def _string_weight(a: int, z, t: float, params: ModelParams):
    """exp(t * sum_{i=0}^{a-1} eps'(tau^i z)) for a length-a string."""
    tau = params.tau
    acc = np.zeros_like(z)
    for i in range(a):
        acc = acc + eps_prime(tau ** i * z, params)
    return np.exp(t * acc)


def _pair_matrix(a: int, b: int, cont: Contour, t: float, params: ModelParams):
    """Weighted kernel block M[n, m] = -g_b(z_m) w_m / (tau^a z_n - z_m)."""
    z, w = cont.nodes, cont.weights
    tau = params.tau
    gb = _string_weight(b, z, t, params)
    denom = tau ** a * z[:, None] - z[None, :]
    if np.min(np.abs(denom)) < 1e-10:
        raise GeometryError("string determinant singular at a node pair")
    return -(gb * w)[None, :] / denom


def _perm_cycle_sum(lam: tuple[int, ...], blocks: dict) -> complex:
    """sum over sigma in S_ell of sgn(sigma) * prod over cycles of
    tr[M^{(a_{i1}, a_{i2})} M^{(a_{i2}, a_{i3})} ...]."""
    ell = len(lam)
    cache: dict[tuple[int, ...], complex] = {}

    def word_trace(word: tuple[int, ...]) -> complex:
        # canonical rotation so equal words share a cache slot
        best = min(word[i:] + word[:i] for i in range(len(word)))
        if best not in cache:
            M = None
            for i in range(len(best)):
                B = blocks[(best[i], best[(i + 1) % len(best)])]
                M = B if M is None else M @ B
            cache[best] = complex(np.trace(M))
        return cache[best]

    total = 0.0 + 0j
    for sigma in permutations(range(ell)):
        visited = [False] * ell
        sgn = 1
        val = 1.0 + 0j
        for start in range(ell):
            if visited[start]:
                continue
            cyc = []
            i = start
            while not visited[i]:
                visited[i] = True
                cyc.append(lam[i])
                i = sigma[i]
            if len(cyc) % 2 == 0:
                sgn = -sgn
            val *= word_trace(tuple(cyc))
        total += sgn * val
    return total


def _elementary_symmetric(eigs: np.ndarray, m: int) -> complex:
    e = np.zeros(m + 1, dtype=complex)
    e[0] = 1.0
    for mu in eigs:
        e[1:] += mu * e[:-1].copy()
    return complex(e[m])


def moment_partition(k: int, t: float, params: ModelParams,
                     nodes: int = 128) -> float:
    """E[tau^{k N_0(t)}] by the partition-indexed residue expansion.

    Each partition lambda |- k contributes an ell(lambda)-fold integral of a
    string determinant over the common circle |w| = (1+tau)/2; the quadrature
    of the determinant is carried out exactly by the permutation/cycle trace
    identity, so no ell-dimensional product grid is ever materialized.
    """
    if k == 0:
        return 1.0
    if k > 8:
        raise SizeError("moment_partition supports k <= 8")
    tau = params.tau
    cont = circle(0.0, (1.0 + tau) / 2.0, nodes)
    parts = set()
    lams = enumerate_partitions(k)
    for lam in lams:
        parts.update(lam.parts)
    blocks = {(a, b): _pair_matrix(a, b, cont, t, params)
              for a in parts for b in parts}
    eig_cache: dict[int, np.ndarray] = {}
    total = 0.0 + 0j
    for lam in lams:
        ell = lam.length
        if set(lam.parts) == {1}:
            # all-ones partition: the permutation sum collapses to
            # ell! * e_ell(spectrum of the single block)
            if 1 not in eig_cache:
                eig_cache[1] = np.linalg.eigvals(blocks[(1, 1)])
            term = math.factorial(ell) * _elementary_symmetric(eig_cache[1], ell)
        else:
            term = _perm_cycle_sum(lam.parts, blocks)
        mfact = 1.0
        for m in lam.multiplicities().values():
            mfact *= math.factorial(m)
        total += term * (1.0 - tau) ** k / mfact
    val = tau_factorial(k, tau) * total
    if abs(val.imag) > IMAG_TOL:
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


# ----------------------------------------------- moments: collapsed contours
def cauchy_kernel(t: float, params: ModelParams):
    """K2(w, w') = e^{eps'(w) t} / (tau w - w')."""
    tau = params.tau

    def kernel(w, wp):
        return np.exp(eps_prime(w, params) * t) / (tau * w - wp)

    return kernel


def moment_nested(k: int, t: float, params: ModelParams,
                  nodes: int = 256) -> float:
    """E[tau^{k N_0(t)}] via the second collapse of the nested contours.

    The nested-contour moment formula cannot be realized as a product of
    fixed closed curves (any family containing {0, -tau} and excluding -1
    either swallows the cross-factor poles or crosses its own tau-scalings),
    so it is evaluated by the deformation the nesting encodes: collapse onto
    the small circle around -tau, which turns the k-fold integral into
    Fredholm minors of the Cauchy kernel K2.  Supports k <= 14.
    """
    if k == 0:
        return 1.0
    if k > 14:
        raise SizeError("moment_nested supports k <= 14")
    if t > DET_T_CAP:
        raise DomainError(f"determinant routes capped at t <= {DET_T_CAP}")
    cont = cauchy_contour(params, nodes)
    eigs = nystrom_eigenvalues(cauchy_kernel(t, params), cont)
    val = moments_from_eigs(eigs, k, params.tau)[k]
    if abs(val.imag) > IMAG_TOL:
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


def moment_table(kmax: int, t: float, params: ModelParams,
                 method: str = "partition") -> MomentTable:
    """Moments k = 0..kmax with per-entry doubling error estimates."""
    fn = {"partition": moment_partition, "nested": moment_nested}[method]
    base_nodes = 128 if method == "partition" else 256
    vals, errs = [], []
    for k in range(kmax + 1):
        v = fn(k, t, params, nodes=base_nodes)
        v2 = fn(k, t, params, nodes=base_nodes // 2)
        vals.append(v)
        errs.append(abs(v - v2))
    return MomentTable(list(range(kmax + 1)), vals, errs, method)


# ------------------------------------------------------- tau-Laplace routes
def tau_laplace_series(zeta: float, t: float, params: ModelParams,
                       kmax: int = 14, tail_tol: float = 1e-8) -> float:
    """E[1/(zeta tau^{N_0}; tau)_inf] from the moment series.

    Terms k <= 8 use the partition route; the (tiny) tail beyond comes from
    the collapsed-contour route.  The geometric tail bound extrapolated from
    the last two retained terms must fall below ``tail_tol``.
    """
    tau = params.tau
    terms = []
    for k in range(kmax + 1):
        mk = moment_partition(k, t, params) if k <= 8 else \
            moment_nested(k, t, params)
        terms.append(zeta ** k * mk / q_pochhammer(tau, tau, k).real)
    last, prev = abs(terms[-1]), abs(terms[-2])
    ratio = last / prev if prev > 0 else 0.0
    if ratio >= 1.0:
        raise TruncationError(f"series terms not decaying at kmax={kmax}")
    bound = last * ratio / (1.0 - ratio)
    if bound > tail_tol:
        raise TruncationError(f"tail bound {bound:.2e} above {tail_tol:.0e}")
    return float(sum(terms))


def det_cauchy(zeta: complex, t: float, params: ModelParams,
               nodes: int = 256, conv_tol: float = 1e-8):
    """det(I - zeta K2) / (zeta; tau)_inf on the small circle around -tau.

    Equals the tau-Laplace transform E[1/(zeta tau^{N_0(t)}; tau)_inf].
    """
    tau = params.tau
    if t > DET_T_CAP:
        raise DomainError(f"determinant routes capped at t <= {DET_T_CAP}")
    j = 0
    while tau ** -j <= abs(zeta) + 1e-12:
        if abs(zeta - tau ** -j) < 1e-10:
            raise DomainError(f"zeta = tau^-{j} is a pole of the transform")
        j += 1
    cont = cauchy_contour(params, nodes)
    res = fredholm_det(cauchy_kernel(t, params), cont, scale=-zeta)
    if res.err > conv_tol * max(1.0, abs(res.value)):
        raise ConvergenceError(f"doubling estimate {res.err:.2e} above {conv_tol:.0e}")
    return res.value / q_pochhammer(zeta if isinstance(zeta, complex) else complex(zeta),
                                    tau, None)


# ------------------------------------------------------------- Mellin-Barnes
def mb_contour(params: ModelParams, nodes: int = 128) -> Contour:
    """Origin-centered circle |w| = tau^0.85 for the Mellin-Barnes kernel."""
    return circle(0.0, params.tau ** 0.85, nodes)


def _mb_g(w, t: float, params: ModelParams):
    return np.exp(params.gamma * t * params.tau / (params.tau + w))


def mb_kernel_line(wa, wb, zeta: float, t: float, params: ModelParams,
                   s_truncation: float = 12.0, s_nodes: int = 320):
    """K_zeta(w, w') by Gauss-Legendre on the line Re s = 1/2, |Im s| <= S.

    Integrand pi/sin(-pi s) (-zeta)^s g(w)/g(tau^s w) / (w' - tau^s w) under
    the principal branch of (-zeta)^s; the pi/sin factor decays like
    e^{-pi |Im s|} so S = 12 puts the tail below 1e-15.
    """
    if zeta >= 0:
        raise DomainError("Mellin-Barnes branch requires zeta < 0")
    tau = params.tau
    x, wx = np.polynomial.legendre.leggauss(s_nodes)
    s = 0.5 + 1j * s_truncation * x
    tw = np.power(tau + 0j, s) * wa
    f = (np.pi / np.sin(-np.pi * s) * np.exp(s * math.log(-zeta))
         * _mb_g(wa, t, params) / _mb_g(tw, t, params) / (wb - tw))
    return complex(np.sum(s_truncation * wx * f) / (2.0 * np.pi))


def mb_kernel_residue_series(wa, wb, zeta: float, t: float, params: ModelParams,
                             kmax: int = 400):
    """Same kernel by the residue series over s = 1, 2, 3, ...: the residues
    of pi/sin(-pi s) give sum_k zeta^k g(w)/g(tau^k w) / (w' - tau^k w)."""
    tau = params.tau
    ks = np.arange(1, kmax + 1)
    tw = tau ** ks * wa
    return complex(np.sum(zeta ** ks * _mb_g(wa, t, params)
                          / _mb_g(tw, t, params) / (wb - tw)))


def det_mellin_barnes(zeta: float, t: float, params: ModelParams,
                      s_truncation: float = 12.0, nodes: int = 128,
                      s_nodes: int = 320) -> float:
    """det(I + K_zeta) with the Mellin-Barnes kernel; equals the tau-Laplace
    transform for zeta in (-zeta0, 0), zeta0 = 0.9 (tau; tau)_inf."""
    tau = params.tau
    zeta0 = 0.9 * q_pochhammer(tau, tau, None).real
    if not -zeta0 < zeta < 0.0:
        raise DomainError(f"zeta must lie in (-{zeta0:.3f}, 0), got {zeta}")
    cont = mb_contour(params, nodes)
    radius = abs(cont.nodes[0])
    if not tau < radius < math.sqrt(tau):
        raise GeometryError("w-contour radius must lie in (tau, sqrt(tau))")
    z, w = cont.nodes, cont.weights
    x, wx = np.polynomial.legendre.leggauss(s_nodes)
    s = 0.5 + 1j * s_truncation * x
    pref = np.pi / np.sin(-np.pi * s) * np.exp(s * math.log(-zeta))
    K = np.empty((len(z), len(z)), dtype=complex)
    g_all = _mb_g(z, t, params)
    for a in range(len(z)):
        tw = np.power(tau + 0j, s) * z[a]
        M = (pref * g_all[a] / _mb_g(tw, t, params))[:, None] / (z[None, :] - tw[:, None])
        K[a, :] = (s_truncation * wx) @ M / (2.0 * np.pi)
    A = np.eye(len(z), dtype=complex) + K * w[None, :]
    sign, logdet = np.linalg.slogdet(A)
    val = sign * np.exp(logdet)
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise ConvergenceError(f"imaginary part {val.imag:.2e} above tolerance")
    return float(val.real)


# ------------------------------------------------------------------ inversion
def _mass_by_residues(m: int, t: float, params: ModelParams,
                      nodes: int = 256) -> float:
    """P(N_0(t) = m) from the poles of the tau-Laplace inversion integrand:
    P(m) = tau^m sum_{i<=m} det(I - tau^{-i} K2) / (tau^i prod_{j!=i} (1 - tau^{j-i}))."""
    tau = params.tau
    cont = cauchy_contour(params, nodes)
    mat = nystrom_matrix(cauchy_kernel(t, params), cont)
    eye = np.eye(len(mat))
    total = 0.0
    for i in range(m + 1):
        sign, logdet = np.linalg.slogdet(eye - tau ** (-i) * mat)
        det = float((sign * np.exp(logdet)).real)
        denom = tau ** i
        for j in range(m + 1):
            if j != i:
                denom *= 1.0 - tau ** (j - i)
        total += det / denom
    return tau ** m * total


def _vandermonde_amplification(n: int, tau: float) -> float:
    """||V^{-1}||_inf for V[k, m] = tau^{km}, via columnwise BP solves."""
    nodes = tau ** np.arange(n)
    amp = 0.0
    rows = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(vandermonde_solve(nodes, e))
    return float(np.abs(np.array(rows)).sum(axis=0).max())


def invert_distribution(t: float, params: ModelParams, M: int = 12,
                        tail_tol: float = 1e-4) -> DistributionTable:
    """Masses P(N_0(t) = m), m = 0..M, from the moment route.

    The Vandermonde system in the nodes tau^m is solved only as far as its
    conditioning permits at binary64 moment accuracy (the amplification
    ||V^{-1}|| grows like 1e2 per extra row; rows are added while
    amplification * 1e-13 stays below 1e-9).  Masses beyond the stable core
    come from the residue expansion of the tau-Laplace inversion integral,
    which is uniformly accurate in m.
    """
    if M > 14:
        raise SizeError("support cutoff M <= 14")
    tau = params.tau
    n_core = 2
    while n_core < min(M + 1, 9) and \
            _vandermonde_amplification(n_core + 1, tau) * 1e-13 < 1e-9:
        n_core += 1
    moments = [moment_partition(k, t, params) for k in range(n_core)]
    core = vandermonde_solve(tau ** np.arange(n_core), np.array(moments))
    masses = np.empty(M + 1)
    masses[:n_core] = core
    for m in range(n_core, M + 1):
        masses[m] = _mass_by_residues(m, t, params)
    # overlap diagnostic: the last core mass recomputed by residues
    overlap_gap = abs(core[n_core - 1] - _mass_by_residues(n_core - 1, t, params))
    tail = 1.0 - float(masses.sum())
    if tail > tail_tol:
        raise SizeError(f"tail mass {tail:.2e} above {tail_tol:.0e}: M too small for t={t}")
    return DistributionTable(masses, tail, "duality",
                             meta={"n_core": n_core, "overlap_gap": overlap_gap,
                                   "t": t, "p": params.p, "M": M})
