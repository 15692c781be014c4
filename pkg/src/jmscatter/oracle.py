"""Momentum-space Lippmann-Schwinger solver for separable potentials.

Deliberately independent of the algebraic solver: it sees only the
potential matrix and its own momentum-space form factors, so agreement
between the two routes is a genuine cross-check rather than a tautology.
Used by tests and the `verify` command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import NumericalError
from .jmatrix import SeparablePotential
from .oscbasis import OscillatorBasis

_NODES_START = 64
_NODES_CAP = 2048
_DELTA_TOL = 1e-8


@dataclass(frozen=True)
class MomentumGrid:
    """Quadrature layout for the principal-value integral: Gauss-Legendre
    panels split at the on-shell momentum, pole handled by subtraction."""

    nodes: np.ndarray
    weights: np.ndarray
    k0: float
    kmax: float
    scheme: str = "pole-subtraction"

    def __post_init__(self):
        if self.nodes.size < 64:
            raise ValueError("grid needs at least 64 nodes")
        if not (0.0 < self.k0 < self.kmax):
            raise ValueError("on-shell momentum must lie inside (0, kmax)")
        if np.any(self.weights <= 0.0):
            raise ValueError("weights must be positive")


def momentum_form_factor(basis: OscillatorBasis, n: int, k):
    """Momentum profile of the n-th oscillator form factor, unit L2 norm
    over k in fm^-1.

    Same Laguerre-times-Gaussian shape as in position space with the length
    scale inverted; the alternating position-space phase cancels against
    the transform's own, so no (-1)^n appears here.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    k = np.asarray(k, dtype=float)
    b = basis.r0
    l = basis.l
    x = (k * b) ** 2
    lg = 0.5 * (math.log(2.0) + gammaln(n + 1) - gammaln(n + l + 1.5)) + 0.5 * math.log(b)
    return math.exp(lg) * (k * b) ** (l + 1) * np.exp(-x / 2.0) * eval_genlaguerre(n, l + 0.5, x)


def build_grid(k0: float, kmax: float, nodes_per_panel: int) -> MomentumGrid:
    """Three Gauss-Legendre panels: [0, k0], [k0, 2k0], [2k0, kmax]."""
    if not (0.0 < k0 < 0.5 * kmax):
        raise ValueError("need k0 < kmax/2 for the panel layout")
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes = []
    weights = []
    for a, b in ((0.0, k0), (k0, 2.0 * k0), (2.0 * k0, kmax)):
        half = 0.5 * (b - a)
        nodes.append(half * x + 0.5 * (a + b))
        weights.append(half * w)
    return MomentumGrid(np.concatenate(nodes), np.concatenate(weights), k0, kmax)


def _delta_on_grid(v, basis, grid, c, k0):
    size = v.shape[0]
    f_q = np.vstack([momentum_form_factor(basis, n, grid.nodes) for n in range(size)])
    f_0 = np.array([float(momentum_form_factor(basis, n, k0)) for n in range(size)])
    denom = k0 * k0 - grid.nodes ** 2
    pv_tail = math.log((grid.kmax + k0) / (grid.kmax - k0)) / (2.0 * k0)
    g = np.empty((size, size))
    for n in range(size):
        for m in range(n, size):
            gq = f_q[n] * f_q[m]
            g0 = f_0[n] * f_0[m]
            val = (2.0 / c) * (float(np.dot(grid.weights, (gq - g0) / denom)) + g0 * pv_tail)
            g[n, m] = g[m, n] = val
    tau = np.linalg.solve(np.eye(size) - v @ g, v)
    r_on_shell = float(f_0 @ tau @ f_0)
    return math.atan(-math.pi * r_on_shell / (c * k0))


def solve_tmatrix(potential: SeparablePotential, energy_mev: float) -> float:
    """On-shell s-channel phase shift (radians, principal branch).

    Standing-wave T-matrix reduced to an (N+1)x(N+1) linear system; the
    principal-value integral is regularized by subtracting the on-shell
    integrand and adding its analytic integral back. Node count doubles
    until the phase settles to 1e-8.
    """
    if energy_mev <= 0.0:
        raise ValueError("need E > 0")
    basis = potential.basis
    c = basis.mass_constant
    k0 = math.sqrt(2.0 * energy_mev / c)
    kmax = 40.0 / basis.r0
    if k0 >= 0.5 * kmax:
        raise ValueError("energy beyond the quadrature design range")
    prev = None
    nodes = _NODES_START
    while nodes <= _NODES_CAP:
        grid = build_grid(k0, kmax, nodes)
        delta = _delta_on_grid(potential.v, basis, grid, c, k0)
        if prev is not None and abs(delta - prev) < _DELTA_TOL:
            return delta
        prev = delta
        nodes *= 2
    raise NumericalError("quadrature refinement did not settle to %g" % _DELTA_TOL)
