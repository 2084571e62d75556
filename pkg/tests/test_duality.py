import numpy as np
import pytest

from asep_lab.duality import (cauchy_contour, det_cauchy, det_mellin_barnes,
                              eps_prime, h_factor, invert_distribution,
                              mb_contour, mb_kernel_line,
                              mb_kernel_residue_series, moment_nested,
                              moment_partition, moment_table,
                              tau_laplace_series, u_step)
from asep_lab.errors import DomainError, SizeError, TruncationError
from asep_lab.markov import oracle_h_expectation, oracle_n0_distribution, \
    oracle_tau_moment
from asep_lab.params import ModelParams
from asep_lab.qseries import q_pochhammer

P3 = ModelParams(0.3)
P35 = ModelParams(0.35)


# -------------------------------------------------------------- integrand
def test_eps_prime_fixed_points():
    assert eps_prime(0.0, P3) == 0.0
    # poles exactly at -1 and -tau
    assert abs(eps_prime(-1.0 + 1e-8, P3)) > 1e6
    assert abs(eps_prime(-P3.tau + 1e-8, P3)) > 1e5


def test_change_of_variables_identity():
    # xi = (1+z)/(1+z/tau) turns the duality cross factor into the Bethe one
    # and eps'(z) into eps(xi); both checked pointwise at random z
    rng = np.random.default_rng(2)
    tau, p, q = P3.tau, P3.p, P3.q
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    za, zb = z[:10], z[10:]
    xa = (1 + za) / (1 + za / tau)
    xb = (1 + zb) / (1 + zb / tau)
    lhs = (za - zb) / (za - tau * zb)
    rhs = q * (xa - xb) / (p + q * xa * xb - xb)
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    from asep_lab.bethe import epsilon
    assert np.max(np.abs(epsilon(xa, P3) - eps_prime(za, P3))) < 1e-12


def test_measure_factor_identity():
    # h_{x,t}(z) dz = e^{eps(xi) t} xi^{x-1} dxi / (tau - xi):
    # h_{x,t}(z) = e^{eps(xi)t} xi^{x-1} / (tau - xi) * dxi/dz
    rng = np.random.default_rng(3)
    tau = P3.tau
    z = 0.3 * (rng.standard_normal(8) + 1j * rng.standard_normal(8)) - tau
    xi = (1 + z) / (1 + z / tau)
    dxi_dz = tau * (tau - 1.0) / (tau + z) ** 2
    from asep_lab.bethe import epsilon
    for x in (1, 3):
        lhs = h_factor(x, 0.7, z, P3)
        rhs = np.exp(epsilon(xi, P3) * 0.7) * xi ** (x - 1) / (tau - xi) * dxi_dz
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))


# ----------------------------------------------------------------- u_step
def test_u_step_initial_data():
    tau = P3.tau
    assert u_step((1,), 0.0, P3) == pytest.approx(1.0, abs=1e-12)
    assert u_step((2, 3), 0.0, P3) == pytest.approx(tau ** 3, abs=1e-12)
    assert u_step((1, 2, 3), 0.0, P3) == pytest.approx(tau ** 3, abs=1e-12)
    # x_1 <= 0 lies outside the step support
    assert u_step((0,), 0.0, P3) == pytest.approx(0.0, abs=1e-12)


def test_u_step_matches_oracle_k1():
    for x in (1, 2):
        got = u_step((x,), 0.3, P3)
        want = oracle_h_expectation(P3, (x,), 0.3, window=(-8, 9))
        assert got == pytest.approx(want, abs=1e-8)


def test_u_step_matches_oracle_k2():
    got = u_step((1, 3), 0.3, P3)
    want = oracle_h_expectation(P3, (1, 3), 0.3, window=(-8, 9))
    assert got == pytest.approx(want, abs=1e-8)


def test_u_step_rejects_large_k():
    with pytest.raises(SizeError):
        u_step((1, 2, 3, 4, 5, 6), 0.1, P3)


# ---------------------------------------------------------------- moments
def test_moment_k1_t0():
    assert moment_partition(1, 0.0, P3) == pytest.approx(1.0, abs=1e-12)
    assert moment_nested(1, 0.0, P3) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_moments_match_oracle(k):
    t = 0.4
    want = oracle_tau_moment(P3, k, t, window=(-8, 9))
    assert moment_partition(k, t, P3) == pytest.approx(want, abs=1e-8)
    assert moment_nested(k, t, P3) == pytest.approx(want, abs=1e-8)


@pytest.mark.parametrize("t", [0.5, 1.0])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_moment_routes_agree(k, t):
    assert abs(moment_partition(k, t, P3) - moment_nested(k, t, P3)) < 1e-7


def test_moment_routes_agree_k_up_to_8():
    for k in (5, 6, 7, 8):
        assert abs(moment_partition(k, 0.5, P3) - moment_nested(k, 0.5, P3)) < 1e-7


def test_moment_table_monotone():
    tab = moment_table(4, 0.8, P3, "partition")
    assert tab.values[0] == 1.0
    assert all(a > b for a, b in zip(tab.values, tab.values[1:]))
    assert max(tab.errors) < 1e-9


# --------------------------------------------------------------- tau-Laplace
def test_tau_laplace_series_zeta0():
    assert tau_laplace_series(0.0, 0.5, P3) == pytest.approx(1.0)


def test_det_cauchy_trivial_points():
    assert complex(det_cauchy(0.0, 0.5, P3)).real == pytest.approx(1.0, abs=1e-10)
    # t = 0: N_0 = 0 a.s., so the determinant factor is exactly 1 and the
    # transform collapses to 1/(zeta; tau)_inf
    got = complex(det_cauchy(-0.3, 0.0, P3)).real
    want = 1.0 / q_pochhammer(-0.3, P3.tau, None)
    assert got == pytest.approx(want, abs=1e-10)
    assert got * q_pochhammer(-0.3, P3.tau, None) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("zeta", [-0.05, -0.1, -0.2])
def test_three_laplace_routes_agree(zeta):
    t = 1.0
    series = tau_laplace_series(zeta, t, P3)
    cauchy = complex(det_cauchy(zeta, t, P3)).real
    mb = det_mellin_barnes(zeta, t, P3)
    assert abs(series - cauchy) < 1e-6
    assert abs(cauchy - mb) < 1e-6


def test_det_cauchy_det_mb_other_params():
    # spec example: zeta=-0.15, t=1, p=0.35
    a = complex(det_cauchy(-0.15, 1.0, P35)).real
    b = tau_laplace_series(-0.15, 1.0, P35)
    assert abs(a - b) < 1e-6


def test_mb_kernel_residue_series_check():
    rng = np.random.default_rng(11)
    cont = mb_contour(P3)
    z = cont.nodes
    worst = 0.0
    for a, b in rng.integers(0, len(z), size=(20, 2)):
        line = mb_kernel_line(z[a], z[b], -0.1, 1.0, P3)
        series = mb_kernel_residue_series(z[a], z[b], -0.1, 1.0, P3)
        worst = max(worst, abs(line - series))
    assert worst < 1e-8


def test_mb_rejects_bad_zeta():
    with pytest.raises(DomainError):
        det_mellin_barnes(0.1, 1.0, P3)
    with pytest.raises(DomainError):
        det_mellin_barnes(-0.5, 1.0, P3)  # outside (-zeta0, 0)
    with pytest.raises(DomainError):
        mb_kernel_line(0.5, 0.5, 0.2, 1.0, P3)


def test_series_truncation_error_raised():
    with pytest.raises(TruncationError):
        tau_laplace_series(-0.2, 1.0, P3, kmax=4)


# ----------------------------------------------------------------- inversion
def test_invert_t0_point_mass():
    tab = invert_distribution(0.0, P3, M=6)
    assert tab.masses[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(tab.masses[1:] < 1e-9)


@pytest.mark.parametrize("t", [0.5, 1.0])
def test_invert_matches_oracle(t):
    tab = invert_distribution(t, P3, M=8)
    want = oracle_n0_distribution(P3, t, 8, window=(-9, 10))
    assert np.max(np.abs(tab.masses - want)) < 1e-7
    assert tab.tail < 1e-6


def test_invert_distribution_m12():
    tab = invert_distribution(1.0, P3, M=12)
    assert tab.tail < 1e-8
    assert tab.meta["overlap_gap"] < 1e-7
    assert abs(tab.masses.sum() + tab.tail - 1.0) < 1e-12


def test_invert_rejects_large_m():
    with pytest.raises(SizeError):
        invert_distribution(1.0, P3, M=15)


# --------------------------------------------------------- route invariants
def test_moment_sequence_from_transform_expansion():
    # det_cauchy coefficients reproduce the moment sequence:
    # E-transform(zeta) = sum zeta^k E[tau^{kN}]/(tau;tau)_k
    t, tau = 0.7, P3.tau
    zeta = -0.05
    lhs = complex(det_cauchy(zeta, t, P3)).real
    rhs = sum(zeta ** k * moment_partition(k, t, P3) / q_pochhammer(tau, tau, k)
              for k in range(9))
    assert abs(lhs - rhs) < 1e-8
