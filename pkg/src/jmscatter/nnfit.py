"""Two-body s-wave fit: rank-2 potentials with a pinned isolated state.

One free strength per spin channel; the remaining entries of the 2x2
potential matrix are fixed by requiring an exact eigenvector of the
truncated Hamiltonian at the pinned energy. Ships reference phase-shift
tables at canonical lab energies (values digitized from standard
partial-wave analyses) plus the fitted strengths they reproduce.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import FitError
from .jmatrix import Rank2Params, rank2_phase_curve
from .oscbasis import DEFAULT_MASS_CONSTANT, OscillatorBasis, radial_function
from .poles import find_bound_poles

DEFAULT_HBAR_OMEGA = 500.0
DEFAULT_E_I_MEV = 189.525
SINGLET_V11_HW = -0.7315
TRIPLET_V11_HW = -0.81512
REFERENCE_E_D_MEV = -2.22496
REFERENCE_RMS_HALF_FM = 1.87
CHANNELS = ("singlet", "triplet")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_V11_BOUNDS_HW = (-1.5, -0.2)
_XTOL_HW = 1e-6


@dataclass(frozen=True)
class PhaseShiftDataset:
    """Lab energies in MeV, phases in degrees, optional 1-sigma errors."""

    e_lab_mev: np.ndarray
    delta_deg: np.ndarray
    sigma_deg: np.ndarray | None = None
    channel: str | None = None

    def __post_init__(self):
        e = np.asarray(self.e_lab_mev, dtype=float)
        d = np.asarray(self.delta_deg, dtype=float)
        if e.ndim != 1 or d.shape != e.shape:
            raise ValueError("energies and phases must be matching 1-D arrays")
        if e.size < 3:
            raise ValueError("need at least 3 data points")
        if np.any(np.diff(e) <= 0.0) or e[0] <= 0.0:
            raise ValueError("energies must be positive and strictly increasing")
        object.__setattr__(self, "e_lab_mev", e)
        object.__setattr__(self, "delta_deg", d)
        if self.sigma_deg is not None:
            s = np.asarray(self.sigma_deg, dtype=float)
            if s.shape != e.shape or np.any(s <= 0.0):
                raise ValueError("sigma column must be positive and match the grid")
            object.__setattr__(self, "sigma_deg", s)

    def __len__(self):
        return self.e_lab_mev.size


def load_dataset(source) -> PhaseShiftDataset:
    """Parse the plain-text table format: `#` comments, blank lines, rows of
    `E_lab_MeV delta_deg [sigma_deg]`. A comment `# channel = name` tags the
    channel. Accepts a path or an open text stream."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    channel = None
    rows = []
    width = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].strip()
            for sep in ("=", ":"):
                if sep in body:
                    key, _, val = body.partition(sep)
                    if key.strip().lower() == "channel":
                        channel = val.strip().lower()
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError("line %d: expected 2 or 3 columns, got %d" % (lineno, len(parts)))
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ValueError("line %d: non-numeric entry" % lineno) from None
        if width is None:
            width = len(parts)
        elif width != len(parts):
            raise ValueError("line %d: inconsistent column count" % lineno)
        rows.append(values)
    if not rows:
        raise ValueError("dataset contains no data rows")
    table = np.array(rows, dtype=float)
    sigma = table[:, 2] if width == 3 else None
    return PhaseShiftDataset(table[:, 0], table[:, 1], sigma, channel)


def write_dataset(dataset: PhaseShiftDataset, dest) -> None:
    out = io.StringIO()
    if dataset.channel:
        out.write("# channel = %s\n" % dataset.channel)
    cols = "E_lab_MeV delta_deg" + (" sigma_deg" if dataset.sigma_deg is not None else "")
    out.write("# columns: %s\n" % cols)
    for i in range(len(dataset)):
        row = "%.12g %.12g" % (dataset.e_lab_mev[i], dataset.delta_deg[i])
        if dataset.sigma_deg is not None:
            row += " %.12g" % dataset.sigma_deg[i]
        out.write(row + "\n")
    if hasattr(dest, "write"):
        dest.write(out.getvalue())
    else:
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(out.getvalue())


def load_builtin_dataset(channel: str) -> PhaseShiftDataset:
    names = {"singlet": "singlet_1s0.txt", "triplet": "triplet_3s1.txt"}
    if channel not in names:
        raise ValueError("unknown channel %r (expected one of %s)" % (channel, list(names)))
    ref = resources.files("jmscatter.data").joinpath(names[channel])
    return load_dataset(io.StringIO(ref.read_text(encoding="ascii")))


@dataclass(frozen=True)
class NNPotentialConfig:
    """Channel parametrization: one strength in oscillator units plus the
    pinned isolated-state energy; everything else follows from the basis."""

    v11_hw: float
    channel: str
    hbar_omega: float = DEFAULT_HBAR_OMEGA
    e_i_mev: float = DEFAULT_E_I_MEV
    mass_constant: float = DEFAULT_MASS_CONSTANT

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError("channel must be one of %s" % (CHANNELS,))

    @property
    def basis(self) -> OscillatorBasis:
        return OscillatorBasis(self.hbar_omega, 0, self.mass_constant)

    @property
    def rank2(self) -> Rank2Params:
        return Rank2Params(self.basis, self.e_i_mev, 0.0, self.v11_hw * self.hbar_omega)

    def potential(self):
        return self.rank2.to_potential()


def default_config(channel: str) -> NNPotentialConfig:
    v11 = {"singlet": SINGLET_V11_HW, "triplet": TRIPLET_V11_HW}[channel]
    return NNPotentialConfig(v11, channel)


def cm_energies(e_lab_mev) -> np.ndarray:
    """Equal-mass two-body kinematics: E_cm = E_lab / 2."""
    return 0.5 * np.asarray(e_lab_mev, dtype=float)


def model_phase_deg(config: NNPotentialConfig, e_lab_mev) -> np.ndarray:
    """Model phases in degrees at the given lab energies, on the branch
    continued from threshold (so deep attraction starts near 180)."""
    return np.degrees(rank2_phase_curve(config.rank2, cm_energies(e_lab_mev)))


@dataclass(frozen=True)
class FitReport:
    v11_hw: float
    objective: float
    branch_offset_rad: float
    e_lab_mev: np.ndarray
    data_deg: np.ndarray
    model_deg: np.ndarray
    residual_deg: np.ndarray

    @property
    def rms_residual_deg(self) -> float:
        return float(np.sqrt(np.mean(self.residual_deg ** 2)))


def _aligned_residual(model_rad, data_rad):
    # data tables carry their own branch convention; align by a multiple
    # of pi fixed at the first point, then compare pointwise
    offset = math.pi * round((model_rad[0] - data_rad[0]) / math.pi)
    return model_rad - offset - data_rad, offset


def fit_objective(v11_hw: float, dataset: PhaseShiftDataset, template: NNPotentialConfig) -> float:
    """Weighted sum of squared residuals in radians; weights are 1/sigma^2
    when the dataset has an error column, else 1."""
    config = replace(template, v11_hw=v11_hw)
    model = np.radians(model_phase_deg(config, dataset.e_lab_mev))
    resid, _ = _aligned_residual(model, np.radians(dataset.delta_deg))
    if dataset.sigma_deg is not None:
        weights = 1.0 / np.radians(dataset.sigma_deg) ** 2
    else:
        weights = 1.0
    return float(np.sum(weights * resid ** 2))


def _golden_min(func, lo, hi, xtol):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = func(c), func(d)
    while hi - lo > xtol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = func(d)
    return 0.5 * (lo + hi)


def fit_v11(dataset: PhaseShiftDataset, template: NNPotentialConfig,
            bounds_hw=_V11_BOUNDS_HW) -> tuple[NNPotentialConfig, FitReport]:
    """Fit the free strength by golden-section search on the weighted
    least-squares objective. Raises FitError when the minimum sits at a
    bound (the window must then be widened by the caller)."""
    lo, hi = bounds_hw
    if not lo < hi:
        raise FitError("bounds must satisfy lo < hi")

    def objective(v11_hw):
        return fit_objective(v11_hw, dataset, template)

    best = _golden_min(objective, lo, hi, _XTOL_HW)
    if best - lo < 10.0 * _XTOL_HW or hi - best < 10.0 * _XTOL_HW:
        raise FitError("minimum at search bound %.6g; widen the bounds" % best)
    config = replace(template, v11_hw=best)
    model = np.radians(model_phase_deg(config, dataset.e_lab_mev))
    resid, offset = _aligned_residual(model, np.radians(dataset.delta_deg))
    report = FitReport(
        v11_hw=best,
        objective=objective(best),
        branch_offset_rad=offset,
        e_lab_mev=dataset.e_lab_mev.copy(),
        data_deg=dataset.delta_deg.copy(),
        model_deg=np.degrees(model - offset),
        residual_deg=np.degrees(resid),
    )
    return config, report


def _node_count(basis, coefficients, r_max_fm=25.0, points=2000):
    r = np.linspace(1e-3, r_max_fm, points)
    u = radial_function(basis, coefficients, r)
    floor = 1e-8 * np.max(np.abs(u))
    signs = np.sign(u[np.abs(u) > floor])
    return int(np.sum(signs[1:] != signs[:-1]))


def deuteron_report(config: NNPotentialConfig) -> dict:
    """Bound-state observables of the triplet channel: pole energy, matter
    radius in both conventions, wavefunction diagnostics."""
    if config.channel != "triplet":
        raise ValueError("deuteron observables need the triplet channel")
    poles = find_bound_poles(config.rank2)
    if not poles:
        return {"bound": False}
    pole = poles[0]
    return {
        "bound": True,
        "e_d_mev": pole.energy,
        "kappa_hw": float(pole.momentum.imag),
        "rms_relative_fm": pole.rms_relative,
        "rms_half_fm": pole.rms_half,
        "n_max": pole.n_max,
        "tail_coefficient": float(pole.coefficients[-1]),
        "pole_residual": pole.residual,
        "node_count": _node_count(config.basis, pole.coefficients),
        "reference_e_d_mev": REFERENCE_E_D_MEV,
        "reference_rms_half_fm": REFERENCE_RMS_HALF_FM,
    }
