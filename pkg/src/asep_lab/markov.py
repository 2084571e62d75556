"""Exact finite-state ASEP machinery: generators, uniformization, duality.

Two state representations are used.  Occupation windows enumerate all 2^L
configurations of an L-site window as little-endian bit integers (bit b is
site xmin + b).  Particle systems enumerate the C(L, n) ordered n-tuples of
positions in colexicographic order, whose rank has the closed combinatorial
form rank(c) = sum_j C(c_j, j); that keeps state lookup O(1) and the
enumeration reproducible.

Windows are truncated with closed (reflecting) walls.  Finite-window duality
is *not* exact at the walls (the generator identity picks up a defect of size
gamma at the boundary sites), so duality checks embed the comparison window
in a lattice with a light-cone margin wide enough that wall effects stay
below the target tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .errors import DomainError, SizeError
from .params import ModelParams

MAX_OCCUPATION_SITES = 24


# --------------------------------------------------------------------- types
@dataclass(frozen=True)
class OccupationState:
    """Occupancies of an integer window [xmin, xmax], eta_x in {0, 1}."""

    xmin: int
    xmax: int
    bits: int

    def __post_init__(self):
        n = self.xmax - self.xmin + 1
        if n < 1 or n > MAX_OCCUPATION_SITES:
            raise SizeError(f"window length {n} outside [1, {MAX_OCCUPATION_SITES}]")
        if self.bits < 0 or self.bits >> n:
            raise ValueError("bits outside window")

    @classmethod
    def step(cls, xmin: int, xmax: int) -> "OccupationState":
        """Step initial data: eta_x = 1 iff x >= 1 (within the window)."""
        bits = 0
        for x in range(max(1, xmin), xmax + 1):
            bits |= 1 << (x - xmin)
        return cls(xmin, xmax, bits)

    def occupied(self, x: int) -> int:
        if not self.xmin <= x <= self.xmax:
            raise DomainError(f"site {x} outside window [{self.xmin}, {self.xmax}]")
        return (self.bits >> (x - self.xmin)) & 1

    def count_upto(self, x: int) -> int:
        """N_x(eta) = number of particles at sites <= x, counted from xmin."""
        if x < self.xmin:
            return 0
        x = min(x, self.xmax)
        mask = (1 << (x - self.xmin + 1)) - 1
        return int(bin(self.bits & mask).count("1"))


@dataclass(frozen=True)
class ParticleConfig:
    """Strictly increasing particle coordinates (a Weyl-chamber point)."""

    coords: tuple[int, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.coords, self.coords[1:])):
            raise ValueError(f"coordinates must be strictly increasing: {self.coords}")

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class GeneratorSpec:
    """What generator to build: an occupation window or a k-particle system.

    ``adjoint=True`` swaps the roles of p and q (left rate p, right rate q),
    which is the generator of the duality partner process.
    """

    params: ModelParams
    window: tuple[int, int] | None = None
    particle_count: int | None = None
    lattice: tuple[int, int] | None = None
    adjoint: bool = False

    def rates(self) -> tuple[float, float]:
        """(right rate, left rate)."""
        p, q = self.params.p, self.params.q
        return (q, p) if self.adjoint else (p, q)


# ----------------------------------------------------------- state enumeration
def particle_configs(lo: int, hi: int, n: int) -> np.ndarray:
    """All n-particle configurations on [lo, hi] in colex order, as an
    (S, n) array of increasing coordinates."""
    nsites = hi - lo + 1
    if n < 0 or n > nsites:
        raise SizeError(f"cannot place {n} particles on {nsites} sites")
    if n == 0:
        return np.empty((1, 0), dtype=np.int64)
    cols = []
    # colex order = ordinary lexicographic order of the reversed tuple;
    # generate by counting through ranks is overkill, build by recursion
    def rec(maxpos, count):
        if count == 0:
            return [()]
        out = []
        for top in range(count - 1, maxpos + 1):
            for rest in rec(top - 1, count - 1):
                out.append(rest + (top,))
        return out

    cfgs = rec(nsites - 1, n)
    return np.asarray(cfgs, dtype=np.int64) + lo


def _binom_table(nmax: int, kmax: int) -> np.ndarray:
    t = np.zeros((nmax + 1, kmax + 1), dtype=np.int64)
    t[:, 0] = 1
    for i in range(1, nmax + 1):
        for j in range(1, kmax + 1):
            t[i, j] = t[i - 1, j - 1] + t[i - 1, j]
    return t


def colex_rank(cfgs: np.ndarray, lo: int, nsites: int) -> np.ndarray:
    """rank(c) = sum_j C(c_j, j) for 0-based positions (combinatorial
    number system); inverse of the colex enumeration above."""
    pos = cfgs - lo
    n = cfgs.shape[1]
    table = _binom_table(nsites, n)
    ranks = np.zeros(len(cfgs), dtype=np.int64)
    for j in range(n):
        ranks += table[pos[:, j], j + 1]
    return ranks


# ----------------------------------------------------------------- generators
def occupation_generator(window: tuple[int, int], right: float, left: float) -> csr_matrix:
    """Rate matrix of the occupation process on a closed window; row-indexed
    by little-endian bit integers.  Exclusion built in: a jump exists only
    onto an empty neighbor."""
    xmin, xmax = window
    nsites = xmax - xmin + 1
    if nsites > MAX_OCCUPATION_SITES:
        raise SizeError(f"occupation window of {nsites} sites exceeds "
                        f"{MAX_OCCUPATION_SITES} (state space 2^L)")
    size = 1 << nsites
    s = np.arange(size, dtype=np.int64)
    rows, cols, vals = [], [], []
    for b in range(nsites - 1):
        a = (s >> b) & 1
        c = (s >> (b + 1)) & 1
        flip = (1 << b) | (1 << (b + 1))
        m = (a == 1) & (c == 0)            # particle hops right
        rows.append(s[m]); cols.append(s[m] ^ flip)
        vals.append(np.full(int(m.sum()), right))
        m = (c == 1) & (a == 0)            # particle hops left
        rows.append(s[m]); cols.append(s[m] ^ flip)
        vals.append(np.full(int(m.sum()), left))
    rows = np.concatenate(rows); cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    diag = np.zeros(size)
    np.add.at(diag, rows, vals)
    rows = np.concatenate([rows, s]); cols = np.concatenate([cols, s])
    vals = np.concatenate([vals, -diag])
    return csr_matrix((vals, (rows, cols)), shape=(size, size))


def coordinate_generator(lattice: tuple[int, int], n: int,
                         right: float, left: float) -> tuple[np.ndarray, csr_matrix]:
    """(configs, rate matrix) for the n-particle coordinate process on a
    closed lattice segment, states in colex order."""
    lo, hi = lattice
    cfgs = particle_configs(lo, hi, n)
    nsites = hi - lo + 1
    S = len(cfgs)
    if n == 0:
        return cfgs, csr_matrix((1, 1))
    rows, cols, vals = [], [], []
    base = np.arange(S, dtype=np.int64)
    for j in range(n):
        for delta, rate in ((1, right), (-1, left)):
            ok = np.ones(S, dtype=bool)
            tgt = cfgs[:, j] + delta
            ok &= (tgt >= lo) & (tgt <= hi)
            if delta == 1 and j + 1 < n:
                ok &= tgt < cfgs[:, j + 1]
            if delta == -1 and j > 0:
                ok &= tgt > cfgs[:, j - 1]
            moved = cfgs[ok].copy()
            moved[:, j] += delta
            rows.append(base[ok])
            cols.append(colex_rank(moved, lo, nsites))
            vals.append(np.full(int(ok.sum()), rate))
    rows = np.concatenate(rows); cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    diag = np.zeros(S)
    np.add.at(diag, rows, vals)
    rows = np.concatenate([rows, base]); cols = np.concatenate([cols, base])
    vals = np.concatenate([vals, -diag])
    return cfgs, csr_matrix((vals, (rows, cols)), shape=(S, S))


def build_generator(spec: GeneratorSpec):
    """Rate matrix for the requested system (sparse CSR; use .toarray() for
    a dense view on small systems)."""
    right, left = spec.rates()
    if spec.window is not None:
        return occupation_generator(spec.window, right, left)
    if spec.particle_count is None or spec.lattice is None:
        raise ValueError("need either window or (particle_count, lattice)")
    return coordinate_generator(spec.lattice, spec.particle_count, right, left)[1]


# ------------------------------------------------------------- uniformization
POISSON_TAIL = 1e-14


def evolve(matrix, v: np.ndarray, t: float, transpose: bool = False) -> np.ndarray:
    """e^{tQ} v (observables) or e^{tQ^T} v (distributions, transpose=True)
    by uniformization: Poisson-weighted powers of I + Q/Lambda, truncated
    when the Poisson tail drops below 1e-14."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    A = matrix.T if transpose else matrix
    diag = matrix.diagonal() if hasattr(matrix, "diagonal") else np.diag(matrix)
    lam = float(np.max(-diag))
    if t == 0 or lam == 0:
        return np.array(v, dtype=float, copy=True)
    if lam * t > 500.0:
        # halve the horizon to keep Poisson weights in range; exact semigroup split
        half = evolve(matrix, v, t / 2.0, transpose)
        return evolve(matrix, half, t / 2.0, transpose)
    mu = lam * t
    w = np.array(v, dtype=float, copy=True)
    out = np.zeros_like(w)
    weight = math.exp(-mu)
    cum = weight
    out += weight * w
    n = 0
    while cum < 1.0 - POISSON_TAIL:
        n += 1
        w = w + (A @ w) / lam
        weight *= mu / n
        cum += weight
        out += weight * w
    return out


# ------------------------------------------------------------------- duality
def duality_functional(eta: OccupationState, x: ParticleConfig, tau: float,
                       variant: str = "schutz") -> float:
    """H(eta, x): prod_j tau^{N_{x_j - 1}} eta_{x_j} (schutz) or
    prod_j tau^{N_{x_j}} (second).  N is counted from the window edge."""
    if variant not in ("schutz", "second"):
        raise ValueError(f"unknown variant {variant!r}")
    out = 1.0
    for xj in x.coords:
        if not eta.xmin <= xj <= eta.xmax:
            raise DomainError(f"coordinate {xj} outside window")
        if variant == "schutz":
            if xj - 1 < eta.xmin - 1:
                raise DomainError(f"schutz functional needs x_j - 1 >= xmin - 1")
            if not eta.occupied(xj):
                return 0.0
            out *= tau ** eta.count_upto(xj - 1)
        else:
            out *= tau ** eta.count_upto(xj)
    return out


def _h_values(cfgs: np.ndarray, xs: tuple[int, ...], tau: float, variant: str) -> np.ndarray:
    """H(config, xs) for every n-particle config row at once."""
    vals = np.ones(len(cfgs))
    for xj in xs:
        if variant == "schutz":
            present = (cfgs == xj).any(axis=1)
            counts = (cfgs <= xj - 1).sum(axis=1)
            vals *= present * tau ** counts
        else:
            counts = (cfgs <= xj).sum(axis=1)
            vals *= tau ** counts.astype(float)
    return vals


def lightcone_margin(t: float, tol: float = 1e-13) -> int:
    """Smallest d with P(Poisson(t) >= d) <= tol: total jump-attempt rate is
    1 per particle, so influence travels at most Poisson(t) sites."""
    term = math.exp(-t)
    cum = term
    d = 0
    while 1.0 - cum > tol:
        d += 1
        term *= t / d
        cum += term
    return d + 1


def check_duality(window_size: int, k: int, t: float, variant: str = "schutz",
                  p: float = 0.3, margin: int | None = None) -> float:
    """Max |E^eta[H(eta(t), x)] - E^x[H(eta, x(t))]| over every eta on the
    comparison window and every ordered x inside it.

    The occupation side runs the original dynamics (right p, left q); the
    coordinate side runs the p<->q switched dynamics (the adjoint generator).
    Both are embedded in a lattice extending ``margin`` sites past the
    comparison window so that wall defects stay below the light-cone tail.
    """
    if window_size > 10:
        raise SizeError("window_size limited to 10 (exhaustive over 2^w states)")
    if k > 3:
        raise SizeError("k limited to 3")
    q = 1.0 - p
    tau = p / q
    d = lightcone_margin(t) if margin is None else margin
    lo, hi = -d, window_size - 1 + d
    nsites = hi - lo + 1

    xtuples = [c for c in map(tuple, particle_configs(0, window_size - 1, k))]

    # coordinate side: switched rates, one tiny semigroup reused for all eta
    kcfgs, kQ = coordinate_generator((lo, hi), k, right=q, left=p)
    kindex = {tuple(c): i for i, c in enumerate(map(tuple, kcfgs))}

    worst = 0.0
    gen_cache: dict[int, tuple[np.ndarray, csr_matrix]] = {}
    for bits in range(1 << window_size):
        occ_sites = tuple(i for i in range(window_size) if bits >> i & 1)
        n = len(occ_sites)
        if n not in gen_cache:
            gen_cache[n] = coordinate_generator((lo, hi), n, right=p, left=q)
        ncfgs, nQ = gen_cache[n]
        # LHS: evolve the point distribution of eta's particle representation
        v0 = np.zeros(len(ncfgs))
        v0[colex_rank(np.array([occ_sites], dtype=np.int64), lo, nsites)[0]] = 1.0
        dist = evolve(nQ, v0, t, transpose=True)
        # RHS: evolve H(eta, .) under the switched coordinate process
        occ = np.asarray(occ_sites, dtype=np.int64)
        h_eta = np.ones(len(kcfgs))
        for j in range(k):
            xs_j = kcfgs[:, j]
            if variant == "schutz":
                present = np.isin(xs_j, occ)
                counts = (occ[None, :] <= xs_j[:, None] - 1).sum(axis=1)
                h_eta *= present * tau ** counts
            else:
                counts = (occ[None, :] <= xs_j[:, None]).sum(axis=1)
                h_eta *= tau ** counts.astype(float)
        rhs_all = evolve(kQ, h_eta, t)
        for xs in xtuples:
            lhs = float(dist @ _h_values(ncfgs, xs, tau, variant))
            rhs = float(rhs_all[kindex[xs]])
            worst = max(worst, abs(lhs - rhs))
    return worst


# ------------------------------------------------------- step-data oracles
def default_step_window(t: float, extra: int = 0) -> tuple[int, int]:
    """Window [-L, L+1] sized so wall influence at the origin is negligible,
    capped by the occupation-space budget."""
    d = lightcone_margin(t) + extra
    L = min(d, MAX_OCCUPATION_SITES // 2 - 1)
    return -L, L + 1


def step_evolved_distribution(params: ModelParams, t: float,
                              window: tuple[int, int]) -> np.ndarray:
    """Distribution over occupation states at time t from step data."""
    Q = occupation_generator(window, params.p, params.q)
    s0 = OccupationState.step(*window)
    v = np.zeros(Q.shape[0])
    v[s0.bits] = 1.0
    return evolve(Q, v, t, transpose=True)


def _n0_by_state(window: tuple[int, int]) -> np.ndarray:
    xmin, xmax = window
    states = np.arange(1 << (xmax - xmin + 1), dtype=np.int64)
    n0 = np.zeros(len(states), dtype=np.int64)
    for x in range(xmin, 1):
        n0 += (states >> (x - xmin)) & 1
    return n0


def oracle_n0_distribution(params: ModelParams, t: float, mmax: int,
                           window: tuple[int, int] | None = None) -> np.ndarray:
    """Exact P(N_0(t) = m), m = 0..mmax, on a truncated window."""
    window = window or default_step_window(t)
    dist = step_evolved_distribution(params, t, window)
    n0 = _n0_by_state(window)
    return np.array([dist[n0 == m].sum() for m in range(mmax + 1)])


def oracle_tau_moment(params: ModelParams, k: int, t: float,
                      window: tuple[int, int] | None = None) -> float:
    """Exact E[tau^{k N_0(t)}] on a truncated window."""
    window = window or default_step_window(t)
    dist = step_evolved_distribution(params, t, window)
    n0 = _n0_by_state(window)
    return float(dist @ params.tau ** (k * n0))


def oracle_h_expectation(params: ModelParams, xs: tuple[int, ...], t: float,
                         variant: str = "schutz",
                         window: tuple[int, int] | None = None) -> float:
    """Exact E^step[H(eta(t), x)] on a truncated window (u_step oracle)."""
    window = window or default_step_window(t)
    dist = step_evolved_distribution(params, t, window)
    xmin, xmax = window
    nsites = xmax - xmin + 1
    states = np.arange(1 << nsites, dtype=np.int64)
    vals = np.ones(len(states))
    tau = params.tau
    for xj in xs:
        upto = np.zeros(len(states), dtype=np.int64)
        for x in range(xmin, xj):
            upto += (states >> (x - xmin)) & 1
        if variant == "schutz":
            present = (states >> (xj - xmin)) & 1
            vals *= present * tau ** upto
        else:
            occ_xj = (states >> (xj - xmin)) & 1
            vals *= tau ** (upto + occ_xj).astype(float)
    return float(dist @ vals)
