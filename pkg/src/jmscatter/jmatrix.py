"""Core algebraic scattering solver for separable potentials.

The potential acts on oscillator states 0..N; outside that block the motion
is free and the analytic sine/cosine-like coefficients take over. Phase
shifts come from the matching condition at the boundary row, S-matrices from
the outgoing/incoming combinations, and everything is cross-linked by the
closed rank-2 forms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PoleProximityError
from .oscbasis import (
    OscillatorBasis,
    _t_diag,
    _t_off,
    c_solution,
    c_solution_log,
    c_solution_seq,
    kinetic_matrix,
    kinetic_matrix_element,
    s_solution,
    s_solution_log,
    s_solution_seq,
)

# Scattering evaluations keep away from the threshold, where the rank-2
# denominators approach a 0/0 limit; threshold_phase extrapolates instead.
_E_FLOOR_HW = 1e-6

# Eigenpairs whose last component is below this are invariant-block levels;
# they drop out of the matching function identically, and removing them
# analytically keeps the curve smooth through those energies.
_SPECTATOR_TOL = 1e-12

# Branch continuation: accept the nearest-2pi candidate only if the step is
# below this, otherwise bisect the interval.
_JUMP_LIMIT = 0.45 * math.pi
_BISECT_DEPTH = 60

# "Infinite" energy for branch anchoring, in units of hbar_omega.
_FAR_HW = 1.0e3


@dataclass(frozen=True)
class SeparablePotential:
    """Finite-rank potential V = sum_{nn'} V_{nn'} |n><n'| on indices 0..N.

    v is the symmetric (N+1)x(N+1) matrix of strengths in MeV.
    """

    basis: OscillatorBasis
    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError("v must be a square matrix of size >= 1")
        if not np.array_equal(v, v.T):
            raise ValueError("v must be symmetric as stored")
        if not np.all(np.isfinite(v)):
            raise ValueError("v entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def rank(self) -> int:
        return self.v.shape[0]

    @property
    def rank_index(self) -> int:
        """The boundary index N; the potential couples states 0..N."""
        return self.v.shape[0] - 1


@dataclass(frozen=True)
class TruncatedHamiltonian:
    """T + V restricted to the interaction block, with its eigensystem."""

    potential: SeparablePotential
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def basis(self) -> OscillatorBasis:
        return self.potential.basis

    @property
    def rank_index(self) -> int:
        return self.potential.rank_index


@dataclass(frozen=True)
class ScatteringSolution:
    """Phase-shift curve on an energy grid.

    deltas is the continuous branch anchored so that delta -> 0 at high
    energy; s_values are the unit-modulus S-matrix entries; coefficients,
    when requested, holds one row of X_n per grid energy.
    """

    energies: np.ndarray
    deltas: np.ndarray
    s_values: np.ndarray
    coefficients: np.ndarray | None = None


def build_truncated_hamiltonian(potential: SeparablePotential) -> TruncatedHamiltonian:
    """Assemble T + V on indices 0..N and diagonalize it."""
    size = potential.rank
    h = kinetic_matrix(potential.basis, size) + potential.v
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("symmetric eigensolver failed: %s" % exc) from exc
    return TruncatedHamiltonian(potential, h, vals, vecs)


def p_matrix(ham: TruncatedHamiltonian, n: int, nprime: int, energy_mev: float) -> float:
    """Resolvent coupling matrix, dimensionless:

        P_{nn'}(E) = -sum_mu U^mu_n U^mu_n' / (eps_mu - E) * T_{n',n'+1}.

    Singular at the eigenvalues; evaluation within 1e-9*hbar_omega of one
    raises PoleProximityError (displace the point, or use the curve-level
    routines which cancel the pole).
    """
    nn = ham.rank_index
    if not (0 <= n <= nn and 0 <= nprime <= nn):
        raise ValueError("indices must lie in 0..N")
    hw = ham.basis.hbar_omega
    d = ham.eigenvalues - energy_mev
    gap = float(np.min(np.abs(d)))
    if gap < 1e-9 * hw:
        raise PoleProximityError(
            "E is within %.3e MeV of an eigenvalue; offset the grid point" % gap
        )
    t = kinetic_matrix_element(ham.basis, nprime, nprime + 1)
    return -float(np.dot(ham.eigenvectors[n] * ham.eigenvectors[nprime], 1.0 / d)) * t


def _check_scattering_energy(hw, energy_mev):
    if not energy_mev > 0.0:
        raise ValueError("scattering energy must be positive")
    if energy_mev < _E_FLOOR_HW * hw:
        raise ValueError(
            "E below %g*hbar_omega; the threshold limit is not resolved there, "
            "use threshold_phase" % _E_FLOOR_HW
        )


def _loo_products(d):
    # prefix/suffix so an exact zero in d stays finite
    m = d.size
    pref = np.empty(m + 1)
    suf = np.empty(m + 1)
    pref[0] = 1.0
    suf[m] = 1.0
    for i in range(m):
        pref[i + 1] = pref[i] * d[i]
    for i in range(m - 1, -1, -1):
        suf[i] = d[i] * suf[i + 1]
    return pref[m], pref[:m] * suf[1:]


def _sc_pair(basis, nn, p):
    z = p * p
    if z <= 200.0:
        s_n = s_solution(basis, nn, p)
        s_n1 = s_solution(basis, nn + 1, p)
        c_n = c_solution(basis, nn, p)
        c_n1 = c_solution(basis, nn + 1, p)
        return (s_n, s_n1, 0.0), (c_n, c_n1, 0.0)
    sg_n, ls_n = s_solution_log(basis, nn, p)
    sg_n1, ls_n1 = s_solution_log(basis, nn + 1, p)
    ref_s = max(ls_n, ls_n1)
    cg_n, lc_n = c_solution_log(basis, nn, p)
    cg_n1, lc_n1 = c_solution_log(basis, nn + 1, p)
    ref_c = max(lc_n, lc_n1)
    s_pair = (sg_n * math.exp(ls_n - ref_s), sg_n1 * math.exp(ls_n1 - ref_s), ref_s)
    c_pair = (cg_n * math.exp(lc_n - ref_c), cg_n1 * math.exp(lc_n1 - ref_c), ref_c)
    return s_pair, c_pair


def _general_parts(ham: TruncatedHamiltonian, energy_mev: float):
    """Matching numerator/denominator as (mantissa, log-scale) pairs.

    The raw Eq. is tan d = -(S_N - P S_{N+1}) / (C_N - P C_{N+1}); both
    sides are multiplied by det(H^N - E), which turns them into functions
    analytic in E (the resolvent poles are removable and drop out). Levels
    whose eigenvector does not reach the boundary row are spectators and
    are cancelled analytically as well.
    """
    basis = ham.basis
    hw = basis.hbar_omega
    nn = ham.rank_index
    _check_scattering_energy(hw, energy_mev)
    e_hat = energy_mev / hw
    p = math.sqrt(2.0 * e_hat)
    u_last = ham.eigenvectors[nn]
    keep = np.abs(u_last) > _SPECTATOR_TOL
    d = ham.eigenvalues[keep] / hw - e_hat
    det, loo = _loo_products(d)
    q = -_t_off(nn, basis.l) * float(np.dot(u_last[keep] ** 2, loo))
    (s_n, s_n1, ls), (c_n, c_n1, lc) = _sc_pair(basis, nn, p)
    num = -(det * s_n - q * s_n1)
    den = det * c_n - q * c_n1
    return num, ls, den, lc


def _principal(parts) -> float:
    num, nl, den, dl = parts
    scale = math.exp(min(nl - dl, 700.0))
    return math.atan2(num * scale, den)


def _smatrix(parts) -> complex:
    num, nl, den, dl = parts
    m = max(nl, dl)
    a = den * math.exp(dl - m)
    b = num * math.exp(nl - m)
    return complex(a, b) / complex(a, -b)


def _continue_branch(parts_fn, e0, d0, e1, depth) -> float:
    raw = _principal(parts_fn(e1))
    two_pi = 2.0 * math.pi
    cand = raw + two_pi * round((d0 - raw) / two_pi)
    if abs(cand - d0) <= _JUMP_LIMIT:
        return cand
    if depth >= _BISECT_DEPTH:
        raise NumericalError(
            "phase jump between %g and %g MeV could not be resolved" % (e0, e1)
        )
    em = 0.5 * (e0 + e1)
    if not (e0 < em < e1):
        raise NumericalError(
            "phase jump at %g MeV persists below grid resolution" % e0
        )
    dm = _continue_branch(parts_fn, e0, d0, em, depth + 1)
    return _continue_branch(parts_fn, em, dm, e1, depth + 1)


def _anchored_curve(parts_fn, energies, hw) -> np.ndarray:
    """Continuous branch over the grid, shifted so delta(infinity) = 0.

    "Infinity" is operationally E = 1e3*hbar_omega; the walk out to it uses
    a log-spaced extension of the grid, and unresolved jumps anywhere
    trigger interval bisection.
    """
    vals = [_principal(parts_fn(energies[0]))]
    for i in range(1, len(energies)):
        vals.append(_continue_branch(parts_fn, energies[i - 1], vals[-1], energies[i], 0))
    e_top = energies[-1]
    d_far = vals[-1]
    e_far = _FAR_HW * hw
    if e_top < e_far:
        npts = max(8, int(math.ceil(8.0 * math.log10(e_far / e_top))) + 1)
        prev = e_top
        for e in np.geomspace(e_top, e_far, npts)[1:]:
            d_far = _continue_branch(parts_fn, prev, d_far, e, 0)
            prev = e
    offset = math.pi * round(d_far / math.pi)
    return np.asarray(vals) - offset


def phase_shift(ham: TruncatedHamiltonian, energy_mev: float) -> float:
    """Phase shift delta_l(E) in radians, E in MeV (cm).

    Returned on the branch that vanishes at infinite energy, so threshold
    values carry the full pi-per-level content.
    """
    parts_fn = lambda e: _general_parts(ham, e)
    return float(_anchored_curve(parts_fn, np.asarray([energy_mev], dtype=float), ham.basis.hbar_omega)[0])


def s_matrix_general(ham: TruncatedHamiltonian, energy_mev: float) -> complex:
    """Unit-modulus S-matrix value, equal to exp(2i delta)."""
    return _smatrix(_general_parts(ham, energy_mev))


def threshold_phase(ham: TruncatedHamiltonian) -> float:
    """delta(0+) on the anchored branch.

    Linear-in-p extrapolation from two energies just above the evaluation
    floor; the effective-range expansion makes the residual O(p^3).
    """
    hw = ham.basis.hbar_omega
    parts_fn = lambda e: _general_parts(ham, e)
    return _threshold_from_parts(parts_fn, hw)


def _threshold_from_parts(parts_fn, hw) -> float:
    e1 = 1.0e-6 * hw
    e2 = 4.0e-6 * hw
    d1, d2 = _anchored_curve(parts_fn, np.asarray([e1, e2]), hw)
    p1 = math.sqrt(e1)
    p2 = math.sqrt(e2)
    return float((d1 * p2 - d2 * p1) / (p2 - p1))


def coefficients(ham: TruncatedHamiltonian, energy_mev: float, n_max: int) -> np.ndarray:
    """Expansion coefficients X_0..X_{n_max} of the standing-wave solution.

    n <= N from the resolvent route X_n = P_{nN} X_{N+1}; n >= N from
    S_n cos(delta) + C_n sin(delta). Both give the same X_N, which the
    tests use as a seam check. The overall sign follows the principal
    branch of delta.
    """
    nn = ham.rank_index
    if n_max < nn + 1:
        raise ValueError("n_max must be at least N+1")
    basis = ham.basis
    _check_scattering_energy(basis.hbar_omega, energy_mev)
    delta = _principal(_general_parts(ham, energy_mev))
    p = math.sqrt(2.0 * energy_mev / basis.hbar_omega)
    x = s_solution_seq(basis, n_max, p) * math.cos(delta)
    x += c_solution_seq(basis, n_max, p) * math.sin(delta)
    x_boundary = x[nn + 1]
    for n in range(nn + 1):
        x[n] = p_matrix(ham, n, nn, energy_mev) * x_boundary
    return x


def solve_scattering(ham: TruncatedHamiltonian, energies, n_max: int | None = None) -> ScatteringSolution:
    """Phase shifts, S-matrix values and (optionally) coefficient tables on a
    strictly increasing grid of positive cm energies (MeV).

    Coefficient rows landing within 1e-9*hbar_omega of an eigenvalue are
    displaced by 1e-8*hbar_omega with a warning; phases and S-values need no
    displacement (their formulation has no pole there).
    """
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1 or e.size < 1:
        raise ValueError("energies must be a one-dimensional non-empty grid")
    if np.any(np.diff(e) <= 0.0):
        raise ValueError("energies must be strictly increasing")
    hw = ham.basis.hbar_omega
    parts_fn = lambda x: _general_parts(ham, x)
    deltas = _anchored_curve(parts_fn, e, hw)
    s_values = np.asarray([_smatrix(parts_fn(x)) for x in e])
    table = None
    if n_max is not None:
        rows = []
        for x in e:
            try:
                rows.append(coefficients(ham, x, n_max))
            except PoleProximityError:
                shifted = x + 1.0e-8 * hw
                warnings.warn(
                    "coefficient row at E=%g MeV displaced to %g (eigenvalue hit)"
                    % (x, shifted)
                )
                rows.append(coefficients(ham, shifted, n_max))
        table = np.vstack(rows)
    return ScatteringSolution(e, deltas, s_values, table)


@dataclass(frozen=True)
class Rank2Params:
    """Reduced parameters of a rank-2 (N=1) model.

    The interior block enters scattering only through eps0 = H_00 (MeV) and
    beta = H_01^2 (MeV^2); v11 is the boundary strength V_11 (MeV). beta = 0
    decouples the 0-state: its level becomes an invariant-block state at
    eps0 with no effect on the phases.
    """

    basis: OscillatorBasis
    eps0: float
    beta: float
    v11: float

    def __post_init__(self):
        if self.beta < 0.0:
            raise ValueError("beta = H_01^2 cannot be negative")

    @property
    def t00(self) -> float:
        return self.basis.hbar_omega * _t_diag(0, self.basis.l)

    @property
    def t01(self) -> float:
        return self.basis.hbar_omega * _t_off(0, self.basis.l)

    @classmethod
    def from_potential(cls, potential: SeparablePotential) -> "Rank2Params":
        if potential.rank != 2:
            raise ValueError("rank-2 reduction needs a 2x2 potential")
        basis = potential.basis
        hw = basis.hbar_omega
        h00 = hw * _t_diag(0, basis.l) + potential.v[0, 0]
        h01 = hw * _t_off(0, basis.l) + potential.v[0, 1]
        return cls(basis, h00, h01 * h01, potential.v[1, 1])

    def to_potential(self) -> SeparablePotential:
        # H_01 = +sqrt(beta); the sign is a pure rephasing of state 0 and
        # does not affect any observable
        hw = self.basis.hbar_omega
        v00 = self.eps0 - hw * _t_diag(0, self.basis.l)
        v01 = math.sqrt(self.beta) - hw * _t_off(0, self.basis.l)
        v = np.array([[v00, v01], [v01, self.v11]])
        return SeparablePotential(self.basis, v)


def _rank2_parts(params: Rank2Params, energy_mev: float):
    basis = params.basis
    hw = basis.hbar_omega
    _check_scattering_energy(hw, energy_mev)
    l = basis.l
    e = energy_mev / hw
    t00 = _t_diag(0, l)
    t01 = _t_off(0, l)
    v11 = params.v11 / hw
    if params.beta == 0.0:
        # invariant-block factor (eps0 - E) cancelled analytically
        a = v11 * (t00 - e) + t01 * t01
        b = v11
    else:
        e0 = params.eps0 / hw
        b = v11 * (e0 - e) - params.beta / hw ** 2
        a = b * (t00 - e) + t01 * t01 * (e0 - e)
    p = math.sqrt(2.0 * e)
    z = p * p
    if z <= 200.0:
        s0 = s_solution(basis, 0, p)
        c0 = c_solution(basis, 0, p)
        w = p / (math.pi * s0)
        return -s0 * a, 0.0, c0 * a - w * b, 0.0
    sg0, ls0 = s_solution_log(basis, 0, p)
    cg0, lc0 = c_solution_log(basis, 0, p)
    num = -sg0 * a
    ref = max(lc0, -ls0)
    den = cg0 * a * math.exp(lc0 - ref) - (p / math.pi) * sg0 * b * math.exp(-ls0 - ref)
    return num, ls0, den, ref


def tan_delta_rank2(params: Rank2Params, energy_mev: float) -> float:
    """tan(delta) from the closed rank-2 form; matches the general path."""
    num, nl, den, dl = _rank2_parts(params, energy_mev)
    if den == 0.0:
        return math.copysign(math.inf, num)
    return num * math.exp(min(nl - dl, 700.0)) / den


def rank2_phase_shift(params: Rank2Params, energy_mev: float) -> float:
    """Anchored-branch phase shift from the closed rank-2 form."""
    parts_fn = lambda e: _rank2_parts(params, e)
    return float(
        _anchored_curve(parts_fn, np.asarray([energy_mev], dtype=float), params.basis.hbar_omega)[0]
    )


def rank2_phase_curve(params: Rank2Params, energies) -> np.ndarray:
    """Anchored continuous delta(E) over an increasing grid, rank-2 form."""
    e = np.asarray(energies, dtype=float)
    if np.any(np.diff(e) <= 0.0):
        raise ValueError("energies must be strictly increasing")
    parts_fn = lambda x: _rank2_parts(params, x)
    return _anchored_curve(parts_fn, e, params.basis.hbar_omega)


def rank2_threshold_phase(params: Rank2Params) -> float:
    """delta(0+) for the rank-2 form, same extrapolation as threshold_phase."""
    parts_fn = lambda e: _rank2_parts(params, e)
    return _threshold_from_parts(parts_fn, params.basis.hbar_omega)


def s_matrix_rank2(params: Rank2Params, energy) -> complex:
    """Closed-form rank-2 S-matrix.

    Real E > 0 uses the scaled real path; complex E continues analytically
    (principal momentum branch), which is what the pole search rides on.
    """
    if isinstance(energy, complex) and energy.imag != 0.0:
        return _s_matrix_rank2_complex(params, energy)
    return _smatrix(_rank2_parts(params, float(energy.real if isinstance(energy, complex) else energy)))


def _rank2_ab_complex(params, e_hat):
    basis = params.basis
    hw = basis.hbar_omega
    l = basis.l
    t00 = _t_diag(0, l)
    t01 = _t_off(0, l)
    v11 = params.v11 / hw
    if params.beta == 0.0:
        a = v11 * (t00 - e_hat) + t01 * t01
        b = complex(v11)
    else:
        e0 = params.eps0 / hw
        b = v11 * (e0 - e_hat) - params.beta / hw ** 2
        a = b * (t00 - e_hat) + t01 * t01 * (e0 - e_hat)
    return a, b


def _s_matrix_rank2_complex(params, energy) -> complex:
    basis = params.basis
    e_hat = complex(energy) / basis.hbar_omega
    a, b = _rank2_ab_complex(params, e_hat)
    p = np.sqrt(2.0 * complex(e_hat))
    s0 = complex(s_solution(basis, 0, p))
    c0 = complex(c_solution(basis, 0, p))
    w = p / (math.pi * s0)
    c_plus = c0 + 1j * s0
    c_minus = c0 - 1j * s0
    return (c_minus * a - w * b) / (c_plus * a - w * b)


def s_matrix_rank2_is(params: Rank2Params, energy) -> complex:
    """Rank-2 S-matrix in the decoupled (beta = 0) form.

    The invariant-block factor is cancelled before evaluation, so this is
    regular at E = eps0; beta must be exactly zero.
    """
    if params.beta != 0.0:
        raise ValueError("the cancelled form applies only at beta = 0")
    return s_matrix_rank2(params, energy)
