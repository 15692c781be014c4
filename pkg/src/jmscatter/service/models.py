"""Request/response schemas for the HTTP service.

The potential payload mirrors the flat config-file schema one to one; it
is rendered to config text and pushed through the same parser the CLI
uses, so both front ends share a single validation path.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..config import RunConfig, parse_config


class ConfigPayload(BaseModel):
    hbar_omega_mev: float
    rank: int
    l: int = 0
    mass_constant: float | None = None
    enforce_is: bool = False
    e_i_mev: float | None = None
    v: dict[str, float] = Field(default_factory=dict)
    emin_mev: float = 1.0
    emax_mev: float = 300.0
    points: int = 50

    def to_config_text(self) -> str:
        lines = [
            "hbar_omega_mev = %.17g" % self.hbar_omega_mev,
            "rank = %d" % self.rank,
            "l = %d" % self.l,
            "emin_mev = %.17g" % self.emin_mev,
            "emax_mev = %.17g" % self.emax_mev,
            "points = %d" % self.points,
        ]
        if self.mass_constant is not None:
            lines.append("mass_constant = %.17g" % self.mass_constant)
        if self.enforce_is:
            lines.append("enforce_is = true")
        if self.e_i_mev is not None:
            lines.append("e_i_mev = %.17g" % self.e_i_mev)
        for key, value in self.v.items():
            lines.append("%s = %.17g" % (key, value))
        return "\n".join(lines) + "\n"

    def to_run_config(self, lenient: bool = False) -> RunConfig:
        return parse_config(self.to_config_text(), lenient=lenient)


class PhaseShiftsRequest(BaseModel):
    config: ConfigPayload


class PhasePoint(BaseModel):
    e_lab_mev: float
    e_cm_mev: float
    delta_deg: float
    re_s: float
    im_s: float


class PhaseShiftsResponse(BaseModel):
    rows: list[PhasePoint]


class BetaScanRequest(BaseModel):
    config: ConfigPayload
    betas_mev2: list[float] | None = None
    betas_hw2: list[float] | None = None


class CurvePoint(BaseModel):
    e_cm_mev: float
    delta_deg: float


class BetaCurve(BaseModel):
    beta_mev2: float
    delta_threshold_deg: float
    rows: list[CurvePoint]


class ResonanceRow(BaseModel):
    beta_mev2: float
    e_r_mev: float | None = None
    gamma_mev: float | None = None
    delta_threshold_deg: float


class BetaScanResponse(BaseModel):
    curves: list[BetaCurve]
    tracks: list[ResonanceRow]


class PolesRequest(BaseModel):
    config: ConfigPayload
    window_emin_mev: float | None = None
    window_emax_mev: float | None = None


class PoleRow(BaseModel):
    e_b_mev: float
    kappa_hw: float
    rms_relative_fm: float
    rms_half_fm: float
    residual: float
    n_max: int


class PolesResponse(BaseModel):
    poles: list[PoleRow]


class IsolatedRequest(BaseModel):
    config: ConfigPayload


class IsolatedRow(BaseModel):
    energy_mev: float
    classification: str
    last_component: float
    minor_gap_mev: float
    degenerate: bool
    block_ok: bool
    max_interior_coupling_mev: float


class IsolatedResponse(BaseModel):
    states: list[IsolatedRow]


class DataRow(BaseModel):
    e_lab_mev: float
    delta_deg: float
    sigma_deg: float | None = None


class FitRequest(BaseModel):
    rows: list[DataRow]
    channel: str
    hbar_omega_mev: float = 500.0
    e_i_mev: float = 189.525
    mass_constant: float | None = None
    bound_lo_hw: float = -1.5
    bound_hi_hw: float = -0.2


class ResidualRow(BaseModel):
    e_lab_mev: float
    delta_data_deg: float
    delta_model_deg: float
    residual_deg: float


class FitResponse(BaseModel):
    v11_hw: float
    v11_mev: float
    objective: float
    rms_residual_deg: float
    rows: list[ResidualRow]


class VerifyRequest(BaseModel):
    config: ConfigPayload


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[CheckResult]


class HealthResponse(BaseModel):
    status: str
    version: str
