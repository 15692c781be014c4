"""Service handlers: pure request-model -> response-model functions.

The CLI calls these in-process; the FastAPI layer only adds routing and
error translation on top.
"""

from __future__ import annotations

import math

import numpy as np

from .. import __version__
from ..config import RunConfig
from ..errors import ConfigError
from ..jmatrix import (
    Rank2Params,
    build_truncated_hamiltonian,
    rank2_phase_shift,
    rank2_threshold_phase,
    s_matrix_general,
    solve_scattering,
)
from ..nnfit import NNPotentialConfig, PhaseShiftDataset, fit_v11
from ..oracle import solve_tmatrix
from ..poles import beta_scan as poles_beta_scan
from ..poles import find_bound_poles
from ..spectra import detect_isolated_states, verify_block_structure
from . import models

_ORACLE_TOL = 1e-6
_UNITARITY_TOL = 1e-10


def _lab_grid(config: RunConfig) -> np.ndarray:
    return np.linspace(config.emin_mev, config.emax_mev, config.points)


def phase_shifts(req: models.PhaseShiftsRequest) -> models.PhaseShiftsResponse:
    config = req.config.to_run_config()
    e_lab = _lab_grid(config)
    e_cm = 0.5 * e_lab
    ham = build_truncated_hamiltonian(config.potential())
    sol = solve_scattering(ham, e_cm)
    rows = []
    for i in range(e_lab.size):
        s = sol.s_values[i]
        rows.append(models.PhasePoint(
            e_lab_mev=float(e_lab[i]),
            e_cm_mev=float(e_cm[i]),
            delta_deg=math.degrees(float(sol.deltas[i])),
            re_s=float(s.real),
            im_s=float(s.imag),
        ))
    return models.PhaseShiftsResponse(rows=rows)


def _scan_betas(req: models.BetaScanRequest, hw: float) -> list[float]:
    if (req.betas_mev2 is None) == (req.betas_hw2 is None):
        raise ConfigError("provide exactly one of betas_mev2 or betas_hw2")
    if req.betas_mev2 is not None:
        betas = [float(b) for b in req.betas_mev2]
    else:
        betas = [float(b) * hw * hw for b in req.betas_hw2]
    if any(b < 0.0 for b in betas):
        raise ConfigError("beta values must be non-negative")
    return betas


def beta_scan(req: models.BetaScanRequest) -> models.BetaScanResponse:
    config = req.config.to_run_config()
    if not config.enforce_is:
        raise ConfigError("beta-scan needs an enforce_is configuration as the beta = 0 template")
    template = config.rank2()
    betas = _scan_betas(req, config.hbar_omega_mev)
    e_cm = 0.5 * _lab_grid(config)
    raw_tracks, raw_curves = poles_beta_scan(template, betas, e_cm)
    track_iter = iter(raw_tracks)
    curves = []
    tracks = []
    for beta, curve in zip(betas, raw_curves):
        pb = Rank2Params(template.basis, template.eps0, beta, template.v11)
        d0 = math.degrees(rank2_threshold_phase(pb))
        curves.append(models.BetaCurve(
            beta_mev2=beta,
            delta_threshold_deg=d0,
            rows=[models.CurvePoint(e_cm_mev=float(e), delta_deg=math.degrees(float(d)))
                  for e, d in zip(e_cm, curve)],
        ))
        e_r = gamma = None
        if beta > 0.0:
            track = next(track_iter)
            e_r, gamma = track.e_r, track.gamma
        tracks.append(models.ResonanceRow(
            beta_mev2=beta, e_r_mev=e_r, gamma_mev=gamma, delta_threshold_deg=d0))
    return models.BetaScanResponse(curves=curves, tracks=tracks)


def _rank2_of(config: RunConfig) -> Rank2Params:
    if config.enforce_is:
        return config.rank2()
    if config.rank != 2:
        raise ConfigError("bound-state search needs a rank-2 configuration")
    return Rank2Params.from_potential(config.potential())


def poles(req: models.PolesRequest) -> models.PolesResponse:
    config = req.config.to_run_config()
    params = _rank2_of(config)
    window = None
    if req.window_emin_mev is not None or req.window_emax_mev is not None:
        if req.window_emin_mev is None or req.window_emax_mev is None:
            raise ConfigError("give both window bounds or neither")
        window = (req.window_emin_mev, req.window_emax_mev)
    found = find_bound_poles(params, window=window)
    rows = [models.PoleRow(
        e_b_mev=p.energy,
        kappa_hw=float(p.momentum.imag),
        rms_relative_fm=p.rms_relative,
        rms_half_fm=p.rms_half,
        residual=p.residual,
        n_max=p.n_max,
    ) for p in found]
    return models.PolesResponse(poles=rows)


def isolated(req: models.IsolatedRequest) -> models.IsolatedResponse:
    config = req.config.to_run_config()
    ham = build_truncated_hamiltonian(config.potential())
    states = []
    for record in detect_isolated_states(ham):
        ok, report = verify_block_structure(ham, record)
        states.append(models.IsolatedRow(
            energy_mev=record.energy,
            classification=record.classification,
            last_component=record.last_component,
            minor_gap_mev=record.minor_gap,
            degenerate=record.degenerate,
            block_ok=bool(ok),
            max_interior_coupling_mev=float(report["max_interior_coupling_mev"]),
        ))
    return models.IsolatedResponse(states=states)


def fit(req: models.FitRequest) -> models.FitResponse:
    e = np.array([r.e_lab_mev for r in req.rows])
    d = np.array([r.delta_deg for r in req.rows])
    sigmas = [r.sigma_deg for r in req.rows]
    if any(s is not None for s in sigmas):
        if any(s is None for s in sigmas):
            raise ConfigError("sigma column must be present for every row or none")
        sigma = np.array(sigmas, dtype=float)
    else:
        sigma = None
    try:
        dataset = PhaseShiftDataset(e, d, sigma, req.channel)
        kwargs = {}
        if req.mass_constant is not None:
            kwargs["mass_constant"] = req.mass_constant
        template = NNPotentialConfig(
            v11_hw=0.5 * (req.bound_lo_hw + req.bound_hi_hw),
            channel=req.channel,
            hbar_omega=req.hbar_omega_mev,
            e_i_mev=req.e_i_mev,
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    fitted, report = fit_v11(dataset, template, (req.bound_lo_hw, req.bound_hi_hw))
    rows = [models.ResidualRow(
        e_lab_mev=float(report.e_lab_mev[i]),
        delta_data_deg=float(report.data_deg[i]),
        delta_model_deg=float(report.model_deg[i]),
        residual_deg=float(report.residual_deg[i]),
    ) for i in range(len(report.e_lab_mev))]
    return models.FitResponse(
        v11_hw=report.v11_hw,
        v11_mev=report.v11_hw * req.hbar_omega_mev,
        objective=report.objective,
        rms_residual_deg=report.rms_residual_deg,
        rows=rows,
    )


def verify(req: models.VerifyRequest) -> models.VerifyResponse:
    """Config health checks: symmetry, S-matrix unitarity, phase/S
    consistency, agreement with the independent momentum-space solver,
    and (rank 2) closed form vs general algebra."""
    config = req.config.to_run_config(lenient=True)
    checks = []
    matrix = config.matrix()
    asym = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    sym_ok = asym == 0.0
    checks.append(models.CheckResult(
        name="symmetry", passed=sym_ok,
        detail="max |V - V^T| = %.3g MeV" % asym))
    if not sym_ok:
        return models.VerifyResponse(passed=False, checks=checks)

    potential = config.potential()
    ham = build_truncated_hamiltonian(potential)
    e_cm = 0.5 * np.linspace(config.emin_mev, config.emax_mev, 5)
    sol = solve_scattering(ham, e_cm)

    worst_u = max(float(abs(abs(s) - 1.0)) for s in sol.s_values)
    checks.append(models.CheckResult(
        name="unitarity", passed=worst_u <= _UNITARITY_TOL,
        detail="max ||S| - 1| = %.3g" % worst_u))

    worst_c = 0.0
    for i, e in enumerate(e_cm):
        s = s_matrix_general(ham, float(e))
        worst_c = max(worst_c, float(abs(s - np.exp(2j * sol.deltas[i]))))
    checks.append(models.CheckResult(
        name="phase_consistency", passed=worst_c <= _UNITARITY_TOL,
        detail="max |S - e^{2i delta}| = %.3g" % worst_c))

    worst_o = 0.0
    for i, e in enumerate(e_cm):
        ref = solve_tmatrix(potential, float(e))
        diff = abs(math.remainder(sol.deltas[i] - ref, math.pi))
        worst_o = max(worst_o, diff)
    checks.append(models.CheckResult(
        name="oracle_cross_check", passed=worst_o <= _ORACLE_TOL,
        detail="max |delta - delta_LS| mod pi = %.3g rad" % worst_o))

    if config.rank == 2:
        params = Rank2Params.from_potential(potential)
        worst_r = 0.0
        for i, e in enumerate(e_cm):
            d2 = rank2_phase_shift(params, float(e))
            worst_r = max(worst_r, abs(math.remainder(sol.deltas[i] - d2, math.pi)))
        checks.append(models.CheckResult(
            name="rank2_equivalence", passed=worst_r <= _UNITARITY_TOL,
            detail="max |delta_general - delta_rank2| mod pi = %.3g rad" % worst_r))

    return models.VerifyResponse(passed=all(c.passed for c in checks), checks=checks)


def health() -> models.HealthResponse:
    return models.HealthResponse(status="ok", version=__version__)
