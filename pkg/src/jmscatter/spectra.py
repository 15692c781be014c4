"""Invariant-block (isolated-state) machinery.

A level of the truncated Hamiltonian whose eigenvector never reaches the
boundary row decouples from the scattering problem entirely: it shares its
eigenvalue with the leading principal minor, supports a normalizable state
at any energy sign, and can be moved around freely without touching the
S-matrix. This module detects such levels, verifies the block structure,
and applies the energy-shifting projector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, DetectionMismatchError
from .jmatrix import SeparablePotential, TruncatedHamiltonian
from .oscbasis import kinetic_matrix_element

_COMPONENT_TOL = 1e-7


@dataclass(frozen=True)
class IsolatedStateRecord:
    """One detected isolated level.

    energy in MeV; alpha is the normalized interior eigenvector (length
    N+1); last_component and minor_gap are the two detection residuals;
    degenerate marks records whose minor-side match was ambiguous and
    therefore skipped cross-validation.
    """

    energy: float
    alpha: np.ndarray
    last_component: float
    minor_gap: float
    degenerate: bool = False

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > 1e-12:
            a = a / norm
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def classification(self) -> str:
        return "BSEC" if self.energy > 0.0 else "negative-energy IS"


@dataclass(frozen=True)
class ProjectorShift:
    """Rank-one shift lam * |psi><psi| with psi given in the oscillator basis."""

    coefficients: np.ndarray
    lam: float

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coefficients must be a one-dimensional vector")
        if abs(float(np.linalg.norm(c)) - 1.0) > 1e-12:
            raise ValueError("target vector must be normalized to 1e-12")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


def detect_isolated_states(ham: TruncatedHamiltonian, tol: float | None = None,
                           component_tol: float = _COMPONENT_TOL) -> list[IsolatedStateRecord]:
    """Find the invariant-block levels of the truncated Hamiltonian.

    Two independent tests must agree for every level: (a) the eigenvalue is
    shared with the leading principal minor, (b) the eigenvector's last
    component vanishes. tol is an energy (MeV), default 1e-8*hbar_omega,
    applied relatively on eps/hbar_omega; component_tol bounds |U_N|.

    Candidates inside a degenerate eigenvalue cluster (the theorem's
    hypothesis is non-degeneracy) raise DegenerateSpectrumError; an
    ambiguous minor-side match yields a record flagged degenerate instead
    of a validated one. Disagreement of (a) and (b) raises
    DetectionMismatchError.
    """
    hw = ham.basis.hbar_omega
    tol_hat = (tol / hw) if tol is not None else 1e-8
    nn = ham.rank_index
    eps_hat = ham.eigenvalues / hw
    if nn == 0:
        return []
    minor_hat = np.linalg.eigvalsh(ham.matrix[:-1, :-1]) / hw
    records = []
    a_flags = []
    b_flags = []
    for mu in range(nn + 1):
        scale = max(1.0, abs(eps_hat[mu]))
        gaps = np.abs(minor_hat - eps_hat[mu])
        matches = int(np.sum(gaps <= tol_hat * scale))
        a_flags.append(matches >= 1)
        b_flags.append(abs(ham.eigenvectors[nn, mu]) <= component_tol)
    for mu in range(nn + 1):
        if not (a_flags[mu] or b_flags[mu]):
            continue
        scale = max(1.0, abs(eps_hat[mu]))
        # non-degeneracy hypothesis on the truncated spectrum
        others = np.abs(np.delete(eps_hat, mu) - eps_hat[mu])
        if np.any(others <= tol_hat * scale):
            raise DegenerateSpectrumError(
                "candidate level %.9g MeV sits in a degenerate cluster; "
                "detection refuses to classify it" % ham.eigenvalues[mu]
            )
        gaps = np.abs(minor_hat - eps_hat[mu])
        matches = int(np.sum(gaps <= tol_hat * scale))
        record = IsolatedStateRecord(
            energy=float(ham.eigenvalues[mu]),
            alpha=ham.eigenvectors[:, mu],
            last_component=float(abs(ham.eigenvectors[nn, mu])),
            minor_gap=float(np.min(gaps) * hw),
            degenerate=matches > 1,
        )
        if record.degenerate:
            records.append(record)
            continue
        if a_flags[mu] != b_flags[mu]:
            raise DetectionMismatchError(
                "minor-eigenvalue and last-component tests disagree at "
                "%.9g MeV (gap %.3e hw, |U_N| %.3e); tolerances need "
                "recalibration" % (ham.eigenvalues[mu], float(np.min(gaps)),
                                   abs(ham.eigenvectors[nn, mu]))
            )
        records.append(record)
    return records


def verify_block_structure(ham: TruncatedHamiltonian, record: IsolatedStateRecord,
                           tol: float | None = None):
    """Check that the record's vector really decouples in this Hamiltonian.

    Returns (ok, report). The report lists the residual couplings of the
    vector inside the interaction block and its kinetic coupling to the
    first exterior row; ok requires both below tol (default 1e-10*hw).
    """
    hw = ham.basis.hbar_omega
    if tol is None:
        tol = 1e-10 * hw
    alpha = record.alpha
    if alpha.size != ham.rank_index + 1:
        raise ValueError("record vector length does not match the Hamiltonian")
    h_alpha = ham.matrix @ alpha
    rayleigh = float(alpha @ h_alpha)
    couplings = h_alpha - rayleigh * alpha
    tail = alpha[-1] * kinetic_matrix_element(ham.basis, ham.rank_index, ham.rank_index + 1)
    report = {
        "max_interior_coupling_mev": float(np.max(np.abs(couplings))),
        "tail_coupling_mev": float(tail),
        "rayleigh_energy_mev": rayleigh,
        "energy_gap_mev": abs(rayleigh - record.energy),
        "couplings_mev": couplings,
    }
    ok = report["max_interior_coupling_mev"] <= tol and abs(tail) <= tol
    return ok, report


def apply_projector_shift(potential: SeparablePotential, shift: ProjectorShift) -> SeparablePotential:
    """V' = V + lam * psi psi^T.

    When psi is an isolated-state eigenvector the level moves by exactly
    lam while every phase shift stays put. The vector must be supported on
    indices 0..N so the result keeps its rank.
    """
    size = potential.rank
    c = shift.coefficients
    if c.size > size:
        if np.any(c[size:] != 0.0):
            raise ValueError("target vector has support beyond index N")
        c = c[:size]
    elif c.size < size:
        c = np.concatenate([c, np.zeros(size - c.size)])
    if shift.lam == 0.0:
        return SeparablePotential(potential.basis, potential.v)
    return SeparablePotential(potential.basis, potential.v + shift.lam * np.outer(c, c))


def levinson_count(poles, isolated) -> int:
    """Number of pi units in delta(0+) - delta(inf): conventional bound
    states plus isolated levels, each counted once."""
    return len(poles) + len(isolated)
