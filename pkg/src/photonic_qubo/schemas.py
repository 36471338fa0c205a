"""Pydantic request/response models for the twin service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class TimingRequest(BaseModel):
    clock_hz: float | None = None
    mod_bandwidth_hz: float | None = None
    pd_bandwidth_hz: float | None = None
    path_length_m: float | None = None
    group_index: float | None = None
    rx_latency_cycles: int | None = None
    processed_cycles: int | None = None
    sample_rise_cycles: int | None = None
    sample_fall_cycles: int | None = None
    iter_time_s: float | None = None
    n: int | None = None
    chip_area_mm2: float | None = None
    dac_latency_s: float | None = None
    adc_latency_s: float | None = None
    sig_figs: int | None = 4


class TimingResponse(BaseModel):
    t0_s: float
    tau_mod_s: float
    tau_pd_s: float
    tau_prop_s: float
    tau_ovmm_s: float
    tau_dacadc_s: float
    tau_rx_window_s: float
    tau_fpga_s: float
    tau_iter_s: float
    loop_flops_per_s: float
    ovmm_flops_per_s: float
    area_gmac_per_mm2: float


class NoiseModel(BaseModel):
    detector_sigma: float = 0.0
    laser_rel_sigma: float = 0.0
    adc_bits: int | None = None
    adc_full_scale: float = 8.0
    dac_bits: int | None = None
    seed: int | None = None


class MeshStateRequest(BaseModel):
    n_ports: int = 16
    voltages: list[float] | None = None  # explicit drive; otherwise random pattern
    seed: int = 0
    e_ref: float = 0.5
    phase_per_volt_sq: float | None = None
    v_max: float | None = None


class MeshStateResponse(BaseModel):
    n_ports: int
    e_ref: float
    voltages: list[float]
    phases: list[float]
    u: list[list[float]]  # row-major [re, im] pairs
    a: list[float] | None  # row-major


class ReadoutRequest(BaseModel):
    mesh: MeshStateRequest = Field(default_factory=MeshStateRequest)
    state: str  # e.g. "0101100101011001"
    phi_ref: list[float] | None = None
    noise: NoiseModel | None = None
    noise_seed: int = 0


class ReadoutResponse(BaseModel):
    i_plus: list[float]
    i_minus: list[float]
    i_bpd: list[float]
    i_bpd_measured: list[float]
    cost_exp: float


class ProblemModel(BaseModel):
    n: int
    k: list[float]  # row-major


class GenerateRequest(BaseModel):
    mode: str = "random-mesh-voltages"
    n: int = 16
    seed: int = 0
    e_ref: float = 0.5
    with_ground_truth: bool = False


class GroundTruthModel(BaseModel):
    s_min: str
    c_min: float


class GenerateResponse(BaseModel):
    problem: ProblemModel
    mesh_state: MeshStateResponse | None = None
    ground_truth: GroundTruthModel | None = None


class CostRequest(BaseModel):
    problem: ProblemModel
    state: str


class CostResponse(BaseModel):
    cost: float


class ReadoutCostRequest(BaseModel):
    i_bpd: list[float]


class DecomposeRequest(BaseModel):
    problem: ProblemModel
    allow_shift: bool = False


class DecomposeResponse(BaseModel):
    eigenvalues: list[float]
    q: list[float]  # row-major
    a: list[float]  # row-major
    shift: float


class BruteForceRequest(BaseModel):
    problem: ProblemModel


class ScheduleModel(BaseModel):
    beta_start: float = 2.0
    beta_end: float = 1.0e7
    ramp: str = "geometric"


class FlipLawModel(BaseModel):
    law: str = "geometric-truncated"
    scale: float = 0.3


class ThermoModel(BaseModel):
    phase_per_volt_sq: float | None = None
    v_max: float | None = None


class CampaignRequest(BaseModel):
    problem_source: str = "random-mesh-voltages"
    problem: ProblemModel | None = None  # inline problem for source "file"
    n: int = 16
    runs: int = 100
    iterations: int = 1000
    eta_grid: list[float] = [0.96, 0.97, 0.98, 0.99]
    evaluator: str = "photonic-noisy"
    noise: NoiseModel = Field(default_factory=NoiseModel)
    target_snr_db: float | None = None
    schedule: ScheduleModel = Field(default_factory=ScheduleModel)
    flip_law: FlipLawModel = Field(default_factory=FlipLawModel)
    master_seed: int = 0
    e_ref: float = 0.5
    thermo: ThermoModel = Field(default_factory=ThermoModel)
    cost_scale: float | str | None = "auto"
    warmup_samples: int = 32
    wrong_accept_window: tuple[int, int] = (400, 600)
    include_iterations: bool = True


class StabilityReportModel(BaseModel):
    mean_fidelity: float | None
    fidelity_std: float | None
    mean_scale: float | None
    scale_std: float | None
    snr_db: float | None  # null encodes an infinite SNR
    resolution: float | None
    wrong_accept_fraction: float | None


class StabilityRequest(BaseModel):
    fidelity: list[list[float | None]]
    scale: list[list[float | None]]
    state_costs: list[list[float]]
    proposed_costs: list[list[float]]
    c_min: float
    window: tuple[int, int] = (400, 600)


class StabilityResponse(BaseModel):
    per_run: list[StabilityReportModel]
    aggregate: StabilityReportModel
    window: tuple[int, int]


class CurvesRequest(BaseModel):
    state_costs: list[list[float]]
    c_min: float
    eta_grid: list[float] = [0.96, 0.97, 0.98, 0.99]


class CurvesResponse(BaseModel):
    curves: dict[str, list[float]]
