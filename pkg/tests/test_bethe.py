import math

import numpy as np
import pytest

from asep_lab.bethe import (amplitude, check_free_evolution, default_radius,
                            epsilon, free_propagator_table, green_function,
                            inversions, k1_radius, s_factor, tw_distribution,
                            tw_distribution_residues)
from asep_lab.duality import invert_distribution, u_step
from asep_lab.errors import DomainError, GeometryError, SizeError
from asep_lab.markov import (colex_rank, coordinate_generator, evolve,
                             oracle_n0_distribution)
from asep_lab.params import ModelParams

P = ModelParams(0.3)


# ------------------------------------------------------------------ epsilon
def test_epsilon_values():
    assert epsilon(1.0, P) == pytest.approx(0.0)
    assert epsilon(2.0, P) == pytest.approx(0.55)
    with pytest.raises(DomainError):
        epsilon(np.array([0.0]), P)


def test_epsilon_regression_pin():
    # frozen numeric pin at a fixed complex point (pure regression guard)
    z = 0.4 + 0.3j
    got = epsilon(z, P)
    want = P.p * (1.0 / z) + P.q * z - 1.0
    assert got == pytest.approx(want, abs=1e-15)


# ---------------------------------------------------------------- amplitude
def test_amplitude_identity_is_one():
    assert amplitude((1, 2, 3), (0.1, 0.2, 0.3), P) == 1.0


def test_s_factor_equal_arguments():
    # S_ab(xi, xi) = -1: numerator equals negated denominator
    assert s_factor(0.17, 0.17, P) == pytest.approx(-1.0)
    assert amplitude((2, 1), (0.2, 0.2), P) == pytest.approx(-1.0)


def test_amplitude_reversal_composes():
    # reversal of (1,2,3) has inversions {(2,1),(3,1),(3,2)}; the product of
    # the three pair factors must match composing adjacent transpositions
    xi = (0.11 + 0.02j, 0.18 - 0.07j, 0.07 + 0.1j)
    direct = amplitude((3, 2, 1), xi, P)
    composed = (s_factor(xi[1], xi[0], P) * s_factor(xi[2], xi[0], P)
                * s_factor(xi[2], xi[1], P))
    assert direct == pytest.approx(composed, rel=1e-12)
    assert inversions((3, 2, 1)) == [(3, 2), (3, 1), (2, 1)]


# ----------------------------------------------------------- green function
def test_green_t0_is_delta():
    for x in ((0,), (1,)):
        got = green_function((0,), x, 0.0, P, method="quadrature", nodes=256)
        assert got == pytest.approx(1.0 if x == (0,) else 0.0, abs=1e-9)
    got = green_function((0, 1), (0, 1), 0.0, P, method="quadrature", nodes=256)
    assert got == pytest.approx(1.0, abs=1e-9)
    got = green_function((0, 1), (-2, 3), 0.0, P, method="quadrature", nodes=256)
    assert got == pytest.approx(0.0, abs=1e-9)


def test_green_k1_matches_free_walk():
    g = free_propagator_table(0.5, P)
    for x in (-2, 0, 1, 3):
        quad = green_function((0,), (x,), 0.5, P, method="quadrature")
        assert quad == pytest.approx(g(-x), abs=1e-12)
        assert green_function((0,), (x,), 0.5, P) == pytest.approx(g(-x))


def _coord_oracle_row(y, t, lo, hi):
    cfgs, Q = coordinate_generator((lo, hi), len(y), right=P.p, left=P.q)
    v = np.zeros(len(cfgs))
    v[colex_rank(np.array([y]), lo, hi - lo + 1)[0]] = 1.0
    dist = evolve(Q, v, t, transpose=True)
    return cfgs, dist


def test_green_k2_matches_uniformization_oracle():
    # acceptance-grade comparison on a 17-site window
    t, y = 0.5, (0, 1)
    cfgs, dist = _coord_oracle_row(list(y), t, -8, 8)
    worst_series = worst_quad_near = 0.0
    total = 0.0
    for c, want in zip(map(tuple, cfgs), dist):
        got = green_function(y, c, t, P)     # series route
        worst_series = max(worst_series, abs(got - want))
        total += got
        if max(abs(c[0]), abs(c[1])) <= 5:
            quad = green_function(y, c, t, P, method="quadrature")
            worst_quad_near = max(worst_quad_near, abs(quad - want))
    assert worst_series < 1e-6
    assert worst_quad_near < 1e-6
    assert total == pytest.approx(1.0, abs=1e-8)


def test_green_k3_near_targets_match_oracle():
    t, y = 0.3, (0, 1, 2)
    cfgs, dist = _coord_oracle_row(list(y), t, -4, 6)
    for c, want in zip(map(tuple, cfgs), dist):
        if min(c) >= -2 and max(c) <= 4:
            got = green_function(y, c, t, P, method="quadrature", nodes=128)
            assert got == pytest.approx(want, abs=2e-6)


def test_green_row_sum_and_positivity():
    t, y = 0.5, (0, 1)
    lo, hi = -12, 13
    total = 0.0
    for a in range(lo, hi):
        for b in range(a + 1, hi + 1):
            v = green_function(y, (a, b), t, P)
            assert v > -1e-9
            total += v
    assert total == pytest.approx(1.0, abs=1e-8)


def test_green_radius_guard():
    with pytest.raises(GeometryError):
        green_function((0,), (1,), 0.5, P, radius=0.5, method="quadrature")


def test_green_relabeling_symmetry():
    # permuting integration-variable labels leaves the sum invariant;
    # numerically: quadrature at two node counts agree
    a = green_function((0, 2), (1, 3), 0.4, P, method="quadrature", nodes=128)
    b = green_function((0, 2), (1, 3), 0.4, P, method="quadrature", nodes=256)
    assert a == pytest.approx(b, abs=1e-9)


# ------------------------------------------------------- boundary condition
def test_u_step_satisfies_free_evolution():
    v = lambda xs, t: u_step(xs, t, P)
    free, bnd = check_free_evolution(v, (1, 2), 0.4, P)
    assert free < 1e-7
    assert bnd < 1e-7
    free3, bnd3 = check_free_evolution(v, (2, 3, 4), 0.3, P)
    assert free3 < 1e-7
    assert bnd3 < 1e-7


def test_green_satisfies_free_evolution():
    v = lambda xs, t: green_function((0, 1), xs, t, P, method="series")
    free, bnd = check_free_evolution(v, (1, 2), 0.5, P)
    assert free < 1e-7
    assert bnd < 1e-7


def test_single_sigma_term_fails_boundary():
    # the identity-permutation term alone (product of free propagators)
    # violates the boundary condition; only the A_sigma-weighted sum passes
    def ident_only(xs, t):
        g = free_propagator_table(t, P)
        return g(0 - xs[0]) * g(1 - xs[1])

    _, bnd = check_free_evolution(ident_only, (1, 2), 0.5, P)
    assert bnd > 1e-3


def test_constant_function_free_residual():
    v = lambda xs, t: 2.5
    free, _ = check_free_evolution(v, (0, 2), 0.5, P)
    # generator of a constant vanishes, d/dt vanishes: residual ~ 0
    assert free < 1e-12


# ----------------------------------------------------------- TW distribution
def test_tw_m0_small_t_near_one():
    assert tw_distribution(0, 0.01, P) == pytest.approx(1.0, abs=1e-2)


def test_tw_matches_oracle():
    t = 0.5
    want = oracle_n0_distribution(P, t, 4, window=(-9, 10))
    for m in range(4):
        got = tw_distribution(m, t, P)
        assert got == pytest.approx(want[m], abs=1e-8)
        res = tw_distribution_residues(m, t, P)
        assert res == pytest.approx(want[m], abs=1e-8)


def test_tw_mass_completeness():
    t = 0.5
    total = sum(tw_distribution(m, t, P) for m in range(7))
    # remaining tail is far below 1e-4 at this horizon
    assert total == pytest.approx(1.0, abs=1e-4)


def test_tw_agrees_with_duality_inversion():
    t = 1.0
    tab = invert_distribution(t, P, M=8)
    for m in range(7):
        assert tw_distribution(m, t, P) == pytest.approx(tab.masses[m], abs=1e-4)


def test_tw_guards():
    with pytest.raises(SizeError):
        tw_distribution(7, 0.5, P)
    with pytest.raises(DomainError):
        tw_distribution(1, 1.5, P)
    with pytest.raises(GeometryError):
        tw_distribution(1, 0.5, P, radii=(1.5, None))


def test_k1_radius_exceeds_denominator_threshold():
    R = k1_radius(P)
    assert P.q * R * R > P.p + R
