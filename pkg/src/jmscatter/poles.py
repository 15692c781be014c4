"""Bound-state poles on the negative energy axis and resonance tracking.

The rank-2 S-matrix denominator restricted to imaginary momentum is real
(after peeling off a fixed phase), so bound states are plain sign changes.
Wavefunctions combine the resolvent interior with the decaying exterior
combination; rms radii come from the tridiagonal r^2 matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError
from .jmatrix import (
    Rank2Params,
    TruncatedHamiltonian,
    _rank2_parts,
    build_truncated_hamiltonian,
    p_matrix,
    rank2_phase_curve,
)
from .oscbasis import OscillatorBasis, _t_diag, _t_off, c_plus_seq, c_solution, s_solution

_N_MAX_START = 64
_N_MAX_CAP = 1 << 17
_TAIL_TOL = 1e-8


@dataclass(frozen=True)
class BoundStatePole:
    """One bound state: pole energy, imaginary momentum, and the expansion
    coefficients with their radii. residual is the scaled value of the pole
    function at the root."""

    energy: float
    momentum: complex
    coefficients: np.ndarray
    rms_relative: float
    rms_half: float
    residual: float
    n_max: int


@dataclass(frozen=True)
class ResonanceTrack:
    beta: float
    e_r: float
    gamma: float


class _TailError(NumericalError):
    pass


def _pole_function(params: Rank2Params, energy_mev: float):
    """Scaled S-matrix denominator at p = i*kappa; real up to rounding.

    Returns (value, magnitude scale). Roots of value are the bound poles.
    """
    basis = params.basis
    hw = basis.hbar_omega
    l = basis.l
    e = energy_mev / hw
    if e >= 0.0:
        raise ValueError("pole function is defined for E < 0")
    t00 = _t_diag(0, l)
    t01 = _t_off(0, l)
    v11 = params.v11 / hw
    if params.beta == 0.0:
        a = v11 * (t00 - e) + t01 * t01
        b = v11
    else:
        e0 = params.eps0 / hw
        b = v11 * (e0 - e) - params.beta / hw ** 2
        a = b * (t00 - e) + t01 * t01 * (e0 - e)
    p = 1j * math.sqrt(-2.0 * e)
    s0 = complex(s_solution(basis, 0, p))
    c0 = complex(c_solution(basis, 0, p))
    c_plus = c0 + 1j * s0
    w = p / (math.pi * s0)
    val = c_plus * a - w * b
    # the combination carries a fixed phase i^-l on the imaginary axis
    val = val * 1j ** l
    scale = abs(c_plus * a) + abs(w * b) + 1e-300
    return val.real, scale


def find_bound_poles(params: Rank2Params, window=None, mesh_points: int = 200) -> list[BoundStatePole]:
    """All bound poles in the window (default [-0.5*hw, -1e-6*hw)).

    Sign-change bracketing on a log-spaced mesh, Brent polish to 1e-13
    relative, then wavefunction and radii for each root. A root in the
    outermost mesh cell triggers a widen-window warning.
    """
    hw = params.basis.hbar_omega
    if window is None:
        window = (-0.5 * hw, -1e-6 * hw)
    lo, hi = window
    if not (lo < hi < 0.0):
        raise ValueError("window must satisfy E_min < E_max < 0")
    mesh = -np.geomspace(-lo, -hi, mesh_points)
    vals = np.array([_pole_function(params, e)[0] for e in mesh])
    ham = build_truncated_hamiltonian(params.to_potential())
    poles = []
    f = lambda e: _pole_function(params, e)[0]
    for i in range(mesh.size - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            root = float(mesh[i])
        elif a * b < 0.0:
            root = float(brentq(f, mesh[i], mesh[i + 1], rtol=1e-13, maxiter=200))
        else:
            continue
        if i == 0 or i == mesh.size - 2:
            warnings.warn(
                "bound pole at %g MeV sits in the outermost mesh cell; "
                "widen the search window" % root
            )
        poles.append(_assemble_pole(params, ham, root))
    return poles


def _assemble_pole(params, ham, e_root) -> BoundStatePole:
    val, scale = _pole_function(params, e_root)
    x, n_max = _adaptive_coefficients(ham, e_root)
    rms_rel, rms_half = rms_radius(x, params.basis)
    kappa = math.sqrt(-2.0 * e_root / params.basis.hbar_omega)
    return BoundStatePole(
        energy=e_root,
        momentum=1j * kappa,
        coefficients=x,
        rms_relative=rms_rel,
        rms_half=rms_half,
        residual=abs(val) / scale,
        n_max=n_max,
    )


def _bound_coefficients(ham: TruncatedHamiltonian, e_b: float, n_max: int) -> np.ndarray:
    basis = ham.basis
    nn = ham.rank_index
    if n_max < nn + 2:
        raise ValueError("n_max must reach past the boundary row")
    kappa = math.sqrt(-2.0 * e_b / basis.hbar_omega)
    tail = c_plus_seq(basis, n_max, 1j * kappa)
    x = np.empty(n_max + 1)
    x[nn + 1:] = tail[nn + 1:]
    x_boundary = tail[nn + 1]
    for n in range(nn + 1):
        x[n] = p_matrix(ham, n, nn, e_b) * x_boundary
    x /= np.linalg.norm(x)
    if x[np.argmax(np.abs(x))] < 0.0:
        x = -x
    if abs(x[-1]) > _TAIL_TOL:
        raise _TailError(
            "tail coefficient %.2e at n_max=%d has not decayed; increase n_max"
            % (x[-1], n_max)
        )
    return x


def _adaptive_coefficients(ham, e_b):
    n_max = _N_MAX_START
    while True:
        try:
            return _bound_coefficients(ham, e_b, n_max), n_max
        except _TailError:
            if n_max >= _N_MAX_CAP:
                raise
            n_max *= 2


def bound_wavefunction(pole: BoundStatePole, ham: TruncatedHamiltonian, n_max: int) -> np.ndarray:
    """Expansion coefficients of the bound state at the pole, n = 0..n_max.

    Interior from the resolvent route, exterior from the decaying
    combination at imaginary momentum; normalized, deterministic sign.
    Raises if the tail has not decayed below 1e-8 at n_max.
    """
    return _bound_coefficients(ham, pole.energy, n_max)


def rms_radius(coefficients, basis: OscillatorBasis):
    """(rms_relative, rms_half) in fm from the tridiagonal r^2 form.

    rms_half is the conventional half-separation radius quoted for
    two-body states. Warns when the tail carries more than 1e-6 of <r^2>.
    """
    x = np.asarray(coefficients, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two coefficients")
    n = np.arange(x.size, dtype=float)
    l = basis.l
    r2 = basis.r0 ** 2
    diag = r2 * (2.0 * n + l + 1.5)
    off = r2 * np.sqrt((n[:-1] + 1.0) * (n[:-1] + l + 1.5))
    total = float(np.dot(x * x, diag) + 2.0 * np.dot(x[:-1] * x[1:], off))
    tail = abs(x[-1] ** 2 * diag[-1]) + 2.0 * abs(x[-1] * x[-2] * off[-1])
    if tail > 1e-6 * total:
        warnings.warn("tail carries %.2e of <r^2>; radii are less precise" % (tail / total))
    rms = math.sqrt(total)
    return rms, rms / 2.0


def delta_derivative(params: Rank2Params, energy_mev: float) -> float:
    """d(delta)/dE in 1/MeV from the smooth matching parts.

    Differentiates numerator and denominator separately (central step
    1e-4*hw, one Richardson pass) and assembles (N'D - ND')/(N^2 + D^2);
    that stays pointwise-accurate for arbitrarily narrow resonances, which
    a finite difference of delta itself would smear.
    """
    hw = params.basis.hbar_omega
    h = 1e-4 * hw
    if energy_mev - h <= 1e-6 * hw:
        raise ValueError("energy too close to threshold for the derivative stencil")

    def parts(e):
        num, nl, den, dl = _rank2_parts(params, e)
        if nl != 0.0 or dl != 0.0:
            raise NumericalError("derivative stencil entered the log-scaled regime")
        return num, den

    n0, d0 = parts(energy_mev)

    def diff(step):
        np_, dp = parts(energy_mev + step)
        nm, dm = parts(energy_mev - step)
        return (np_ - nm) / (2.0 * step), (dp - dm) / (2.0 * step)

    n1, dd1 = diff(h)
    n2, dd2 = diff(h / 2.0)
    nd = (4.0 * n2 - n1) / 3.0
    dd = (4.0 * dd2 - dd1) / 3.0
    return (nd * d0 - n0 * dd) / (n0 * n0 + d0 * d0)


def _golden_max(f, a, b, xtol, max_iter=300):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    return (a + b) / 2.0


def find_resonance(params: Rank2Params):
    """(E_r, Gamma) of the sharp level for beta > 0: E_r at the maximum of
    d(delta)/dE, Gamma = 2 over that maximum."""
    if params.beta <= 0.0:
        raise ValueError("a resonance needs beta > 0")
    if params.eps0 <= 0.0:
        raise ValueError("resonance regime requires eps0 > 0")
    hw = params.basis.hbar_omega
    # keep the derivative stencil (reach 1e-4*hw) above the threshold floor
    floor = 2e-4 * hw
    center = max(params.eps0, 2.0 * floor)
    d0 = delta_derivative(params, center)
    if d0 > 0.0:
        # narrow resonance: start from a window sized by the local width,
        # capped so a broad-background misestimate cannot under-sample it
        half = min(max(20.0 / d0, 1e-6 * hw), max(center, 0.5 * hw))
    else:
        # broad level pushed away from eps0: search a center-sized window
        half = max(center, 0.5 * hw)
    for _ in range(80):
        lo = max(floor, center - half)
        hi = center + half
        grid = np.linspace(lo, hi, 41)
        dv = np.array([delta_derivative(params, e) for e in grid])
        k = int(np.argmax(dv))
        if 0 < k < grid.size - 1:
            xtol = max(1e-12 * hw, 1e-5 * (grid[k + 1] - grid[k - 1]))
            e_r = _golden_max(lambda e: delta_derivative(params, e),
                              grid[k - 1], grid[k + 1], xtol)
            gamma = 2.0 / delta_derivative(params, e_r)
            return e_r, gamma
        center = float(grid[k])
        half *= 3.0
    raise NumericalError("resonance peak could not be bracketed")


def beta_scan(params: Rank2Params, betas, energies):
    """Phase-shift curves and resonance tracks for a family of couplings.

    params supplies eps0 and v11 (params.beta itself is ignored); requires
    eps0 > 0 and v11 > 0, the regime where shrinking beta sharpens the
    resonance and collapses it onto eps0. Returns (tracks, curves): one
    anchored delta curve per beta in input order, and one ResonanceTrack
    per positive beta. A resonance outside the grid raises, asking for a
    wider grid.
    """
    if params.eps0 <= 0.0 or params.v11 <= 0.0:
        raise ValueError("beta scan requires eps0 > 0 and v11 > 0")
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0.0):
        raise ValueError("energies must be a strictly increasing grid")
    basis = params.basis
    tracks = []
    curves = []
    for beta in betas:
        pb = Rank2Params(basis, params.eps0, float(beta), params.v11)
        curves.append(rank2_phase_curve(pb, e))
        if beta > 0.0:
            e_r, gamma = find_resonance(pb)
            if not (e[0] <= e_r <= e[-1]):
                raise NumericalError(
                    "resonance at %g MeV lies outside the energy grid; refine it" % e_r
                )
            tracks.append(ResonanceTrack(float(beta), e_r, gamma))
    return tracks, curves
