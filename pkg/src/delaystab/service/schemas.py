"""Pydantic request/response models for the service and the run-config file schema.

The run-config document (schema_version 1) is shared by the /simulate endpoint
and the `simulate` CLI command; unknown keys are rejected everywhere so typos
in (tau, alpha) cannot pass silently, and all numbers must be finite.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModeSection(StrictModel):
    n: int = Field(ge=1)
    ell: float = Field(gt=0, allow_inf_nan=False)


class ControlSection(StrictModel):
    tau: float = Field(gt=0, allow_inf_nan=False)
    alpha: float = Field(allow_inf_nan=False)  # 0 requests an uncontrolled run


class PhysicalSection(StrictModel):
    l: float = Field(gt=0, allow_inf_nan=False)
    c: float = Field(gt=0, allow_inf_nan=False)


class DiscretizationSection(StrictModel):
    dx: float = Field(gt=0, allow_inf_nan=False)
    dt: float = Field(gt=0, allow_inf_nan=False)
    t_final: float = Field(gt=0, allow_inf_nan=False)
    snap_dt: bool = False


class OutputsSection(StrictModel):
    directory: str = "."
    snapshot_times: list[float] = []
    energy_stride: int = Field(default=10, ge=1)


class RunConfigFile(StrictModel):
    """Versioned simulation run configuration (the `simulate` input document)."""

    schema_version: Literal[1]
    mode: ModeSection
    control: ControlSection
    physical: PhysicalSection | None = None
    discretization: DiscretizationSection
    outputs: OutputsSection = OutputsSection()


class RectModel(StrictModel):
    re_min: float = Field(allow_inf_nan=False)
    re_max: float = Field(allow_inf_nan=False)
    im_min: float = Field(allow_inf_nan=False)
    im_max: float = Field(allow_inf_nan=False)

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("rectangle bounds must satisfy min < max")
        return self


class AnalyzeRequest(StrictModel):
    n: int = Field(ge=1)
    ell: float = Field(gt=0, allow_inf_nan=False)
    tau: float = Field(ge=0, allow_inf_nan=False)
    alpha: float = Field(default=0.0, allow_inf_nan=False)
    rect: RectModel | None = None
    grid_density: int = Field(default=64, ge=16)


class SpectrumRoot(StrictModel):
    re: float
    im: float
    residual: float
    certified: bool


class AnalyzeResponse(StrictModel):
    roots: list[SpectrumRoot]
    abscissa: float
    rhp_bound: float


class TauRange(StrictModel):
    start: float = Field(gt=0, allow_inf_nan=False)
    stop: float = Field(gt=0, allow_inf_nan=False)
    step: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _ordered(self):
        if self.stop < self.start:
            raise ValueError("stop must be >= start")
        return self


class DesignRequest(StrictModel):
    n: int = Field(ge=1)
    ell: float = Field(gt=0, allow_inf_nan=False)
    tau: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    tau_range: TauRange | None = None
    alpha: float | None = Field(default=None, allow_inf_nan=False)

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.tau is None) == (self.tau_range is None):
            raise ValueError("provide exactly one of tau or tau_range")
        if self.alpha is not None and self.tau is None:
            raise ValueError("a certificate for alpha needs a single tau")
        return self


class DesignRow(StrictModel):
    tau: float
    k: int | None
    alpha_lo: float | None
    alpha_hi: float | None
    is_empty: bool


class CertificateModel(StrictModel):
    k: int | None
    alpha_lo: float | None
    alpha_hi: float | None
    satisfied: bool


class DesignResponse(StrictModel):
    rows: list[DesignRow]
    certificate: CertificateModel | None = None


class RegionRequest(StrictModel):
    beta_range: tuple[float, float]
    alpha_range: tuple[float, float]
    resolution: int = Field(default=200, ge=8)
    workers: int | None = Field(default=None, ge=1)


class BoundaryLinePoint(StrictModel):
    family: str
    k: int
    sign: int
    beta_tilde: float
    alpha_tilde: float


class RegionResponse(StrictModel):
    beta_axis: list[float]
    alpha_axis: list[float]
    counts: list[list[int]]
    analytic_stable: list[list[bool]]
    valid: list[list[bool]]
    boundaries: list[BoundaryLinePoint]
    invalid_fraction: float


class DecayFitModel(StrictModel):
    rate: float | None
    r_squared: float | None
    window_start: float
    window_end: float
    n_peaks: int


class SnapshotsModel(StrictModel):
    times: list[float]
    x: list[float]
    frames: list[list[float]]


class SimulateResponse(StrictModel):
    times: list[float]
    field_energy: list[float]
    weighted_energy: list[float]
    snapshots: SnapshotsModel
    decay_fit: DecayFitModel
    dominant_energy_rate: float | None
    time_scale: float
    delay_steps: int
    delay_rounding: float
    courant: float
    dt: float


class OracleRequest(StrictModel):
    n: int = Field(ge=1)
    ell: float = Field(gt=0, allow_inf_nan=False)
    tau: float = Field(gt=0, allow_inf_nan=False)
    alpha: float = Field(allow_inf_nan=False)
    zeta0: float = Field(default=1.0, allow_inf_nan=False)
    zeta1: float = Field(default=0.0, allow_inf_nan=False)
    dt: float = Field(gt=0, allow_inf_nan=False)
    t_final: float = Field(gt=0, allow_inf_nan=False)


class OracleResponse(StrictModel):
    dt: float
    times: list[float]
    y: list[float]
    ydot: list[float]
    energy: list[float]
    decay_fit: DecayFitModel


class HealthResponse(StrictModel):
    status: str
    version: str
