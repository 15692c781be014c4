"""Scattering on finite-rank separable potentials in an oscillator basis.

The potential lives on the first N+1 oscillator states, so the scattering
problem closes into finite algebra: phase shifts and S-matrices come from
a truncated Hamiltonian plus the analytic sine-like and cosine-like
reference solutions, bound states from the real S-matrix denominator at
imaginary momentum, and eigenstates whose last basis component vanishes
decouple from scattering entirely (isolated states).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateSpectrumError,
    DetectionMismatchError,
    FitError,
    JmscatterError,
    NumericalError,
    PoleProximityError,
    SeriesConvergenceError,
)
from .oscbasis import (
    DEFAULT_MASS_CONSTANT,
    OscillatorBasis,
    c_plus_minus,
    c_solution,
    form_factor,
    kinetic_matrix,
    kinetic_matrix_element,
    r2_matrix_element,
    radial_function,
    s_solution,
)
from .jmatrix import (
    Rank2Params,
    ScatteringSolution,
    SeparablePotential,
    TruncatedHamiltonian,
    build_truncated_hamiltonian,
    coefficients,
    p_matrix,
    phase_shift,
    rank2_phase_curve,
    rank2_phase_shift,
    rank2_threshold_phase,
    s_matrix_general,
    s_matrix_rank2,
    s_matrix_rank2_is,
    solve_scattering,
    tan_delta_rank2,
    threshold_phase,
)
from .spectra import (
    IsolatedStateRecord,
    ProjectorShift,
    apply_projector_shift,
    detect_isolated_states,
    levinson_count,
    verify_block_structure,
)
from .poles import (
    BoundStatePole,
    ResonanceTrack,
    beta_scan,
    bound_wavefunction,
    delta_derivative,
    find_bound_poles,
    find_resonance,
    rms_radius,
)
from .oracle import MomentumGrid, build_grid, momentum_form_factor, solve_tmatrix
from .nnfit import (
    NNPotentialConfig,
    PhaseShiftDataset,
    default_config,
    deuteron_report,
    fit_v11,
    load_builtin_dataset,
    load_dataset,
    write_dataset,
)
from .config import RunConfig, parse_config, write_config

__all__ = [name for name in dir() if not name.startswith("_")]
