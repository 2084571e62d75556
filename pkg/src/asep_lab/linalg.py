"""Nystrom Fredholm determinants and structured linear solves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contours import Contour
from .errors import EvaluationError, SizeError
from .qseries import q_pochhammer


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    value_half: complex
    err: float

    def __complex__(self):
        return self.value


def nystrom_matrix(kernel, contour: Contour) -> np.ndarray:
    """Weighted kernel sample K(z_i, z_j) * w_j on the contour nodes."""
    z = contour.nodes
    K = np.asarray(kernel(z[:, None], z[None, :]), dtype=complex)
    if not np.all(np.isfinite(K)):
        i, j = np.argwhere(~np.isfinite(K))[0]
        raise EvaluationError(
            f"kernel non-finite at node pair ({z[i]}, {z[j]})", where=(z[i], z[j]))
    return K * contour.weights[None, :]


def _det(mat: np.ndarray) -> complex:
    sign, logdet = np.linalg.slogdet(np.eye(len(mat)) + mat)
    return complex(sign * np.exp(logdet))


def fredholm_det(kernel, contour: Contour, scale: complex = 1.0) -> FredholmResult:
    """det(I + scale*K) on the contour by dense LU, with a doubling estimate.

    Returns the determinant at the contour's node count together with the
    value at half the nodes; their difference is the convergence estimate.
    """
    full = _det(scale * nystrom_matrix(kernel, contour))
    half = _det(scale * nystrom_matrix(kernel, contour.halved()))
    return FredholmResult(full, half, abs(full - half))


def nystrom_eigenvalues(kernel, contour: Contour) -> np.ndarray:
    """Eigenvalues of the weighted Nystrom matrix (spectrum of K)."""
    return np.linalg.eigvals(nystrom_matrix(kernel, contour))


def fredholm_series_coeffs(eigs: np.ndarray, mmax: int) -> np.ndarray:
    """Coefficients d_m with det(I - zeta K) = sum_m (-zeta)^m d_m.

    d_m is the m-th elementary symmetric polynomial of the Nystrom
    eigenvalues, built by the stable one-eigenvalue-at-a-time recurrence.
    """
    d = np.zeros(mmax + 1, dtype=complex)
    d[0] = 1.0
    for mu in eigs:
        d[1:] += mu * d[:-1].copy()
    return d


def moments_from_eigs(eigs: np.ndarray, kmax: int, tau: float) -> np.ndarray:
    """E[tau^{k N}] for k = 0..kmax from the spectrum of the Cauchy kernel.

    Inverts the tau-Laplace generating identity
    det(I - zeta K) / (zeta; tau)_inf = sum_k zeta^k E[tau^{k N}] / (tau; tau)_k
    coefficient by coefficient.
    """
    d = fredholm_series_coeffs(eigs, kmax)
    out = np.empty(kmax + 1, dtype=complex)
    for k in range(kmax + 1):
        acc = 0.0 + 0j
        for m in range(k + 1):
            acc += (-1) ** m * d[m] * q_pochhammer(tau, tau, k) / q_pochhammer(tau, tau, k - m)
        out[k] = acc
    return out


def vandermonde_solve(nodes, rhs):
    """Solve sum_m x_m * nodes_k^m = rhs_k by the Bjorck-Pereyra recurrence.

    Newton divided differences followed by basis conversion: O(n^2) and far
    better conditioned than LU on the explicit Vandermonde matrix.  The
    recurrences run in 80-bit extended precision; the geometric node
    clustering at tau^m leaves no headroom at plain binary64.
    """
    alpha = np.asarray(nodes, dtype=np.longdouble)
    x = np.array(rhs, dtype=np.longdouble, copy=True)
    n = len(alpha)
    if len(x) != n:
        raise SizeError("nodes and rhs must have equal length")
    if n > 16:
        raise SizeError(f"system size {n} exceeds the supported 16")
    if len(np.unique(alpha)) != n:
        raise SizeError("nodes must be pairwise distinct")
    for k in range(n - 1):
        for i in range(n - 1, k, -1):
            x[i] = (x[i] - x[i - 1]) / (alpha[i] - alpha[i - k - 1])
    for k in range(n - 2, -1, -1):
        for i in range(k, n - 1):
            x[i] -= alpha[k] * x[i + 1]
    return x.astype(float)
