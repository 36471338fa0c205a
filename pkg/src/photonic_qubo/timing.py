"""Deterministic latency and throughput model of the solver's sampling loop.

One iteration: the FPGA transmits modulator voltages, light traverses the
mesh, balanced detectors and the ADC return the readout, and the heuristic
update runs on the FPGA.  The optical part is picoseconds; the converter
latency dominates.  All quantities here are straight arithmetic over the
measured clock/cycle/bandwidth parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

SPEED_OF_LIGHT_M_S = 299_792_458.0
RESPONSE_TIME_FACTOR = 0.35  # first-order low-pass rise time: tau ~ 0.35 / f_3dB


@dataclass(frozen=True)
class TimingParams:
    """Measured hardware parameters (defaults: the demonstrated 16-channel chip)."""

    clock_hz: float = 245.76e6
    mod_bandwidth_hz: float = 28.0e9
    pd_bandwidth_hz: float = 41.3e9
    path_length_m: float = 9.3e-3
    group_index: float = 3.48
    rx_latency_cycles: int = 40
    processed_cycles: int = 45
    sample_rise_cycles: int = 47
    sample_fall_cycles: int = 51
    iter_time_s: float = 265.1e-9
    n: int = 16
    chip_area_mm2: float = 37.5

    def __post_init__(self):
        values = asdict(self)
        for name, value in values.items():
            if value <= 0:
                raise ValueError(f"timing parameter {name} must be positive, got {value}")
        if not (self.sample_fall_cycles > self.sample_rise_cycles
                > self.processed_cycles > self.rx_latency_cycles):
            raise ValueError("cycle counts must satisfy fall > rise > processed > rx")

    @property
    def t0_s(self) -> float:
        return 1.0 / self.clock_hz


@dataclass(frozen=True)
class LatencyBreakdown:
    """Per-iteration latency decomposition (seconds)."""

    t0: float
    tau_mod: float
    tau_pd: float
    tau_prop: float
    tau_ovmm: float
    tau_dacadc: float
    tau_fpga: float
    tau_iter: float


@dataclass(frozen=True)
class ThroughputReport:
    loop_flops_per_s: float
    ovmm_flops_per_s: float
    area_gmac_per_mm2: float


def response_time(bandwidth_hz: float) -> float:
    """Response time of a -3 dB bandwidth: 0.35 / f_B."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return RESPONSE_TIME_FACTOR / bandwidth_hz


def propagation_delay(length_m: float, index: float) -> float:
    """On-chip light propagation time: L * n_g / c."""
    if length_m < 0 or index <= 0:
        raise ValueError("length must be non-negative and index positive")
    return length_m * index / SPEED_OF_LIGHT_M_S


def latency_breakdown(
    p: TimingParams,
    dac_latency_s: float | None = None,
    adc_latency_s: float | None = None,
) -> LatencyBreakdown:
    """Decompose the iteration latency.

    tau_dacadc is the electronic share of the transmit-to-receive window:
    rx_cycles * t0 - tau_ovmm by default, or the substitute converter sum
    dac + adc in what-if mode.  The full DAC-to-ADC span is then always
    tau_dacadc + tau_ovmm.
    """
    if (dac_latency_s is None) != (adc_latency_s is None):
        raise ValueError("give both dac_latency_s and adc_latency_s or neither")
    t0 = p.t0_s
    tau_mod = response_time(p.mod_bandwidth_hz)
    tau_pd = response_time(p.pd_bandwidth_hz)
    tau_prop = propagation_delay(p.path_length_m, p.group_index)
    tau_ovmm = tau_mod + tau_prop + tau_pd
    if dac_latency_s is None:
        tau_dacadc = p.rx_latency_cycles * t0 - tau_ovmm
        if tau_dacadc <= 0:
            raise ValueError("RX window shorter than the optical path itself")
    else:
        if dac_latency_s <= 0 or adc_latency_s <= 0:
            raise ValueError("converter latencies must be positive")
        tau_dacadc = dac_latency_s + adc_latency_s
    tau_fpga = p.iter_time_s - p.sample_fall_cycles * t0
    if tau_fpga <= 0:
        raise ValueError("iteration time shorter than the sampling window")
    return LatencyBreakdown(
        t0=t0,
        tau_mod=tau_mod,
        tau_pd=tau_pd,
        tau_prop=tau_prop,
        tau_ovmm=tau_ovmm,
        tau_dacadc=tau_dacadc,
        tau_fpga=tau_fpga,
        tau_iter=p.iter_time_s,
    )


def rx_window(b: LatencyBreakdown) -> float:
    """Transmit-to-receive span: converter latency plus the optical transit."""
    return b.tau_dacadc + b.tau_ovmm


def throughput(p: TimingParams, b: LatencyBreakdown) -> ThroughputReport:
    """FLOP rates of the N^2-operation matrix-vector product.

    The loop rate counts the whole RX window (converters included); the OVMM
    rate counts only the optical transit.  One multiply-accumulate is counted
    as one floating-point operation, matching the N^2 convention.
    """
    if p.n < 1:
        raise ValueError("dimension must be at least 1")
    flops = float(p.n) ** 2
    mac_rate = flops / b.tau_ovmm
    return ThroughputReport(
        loop_flops_per_s=flops / rx_window(b),
        ovmm_flops_per_s=mac_rate,
        area_gmac_per_mm2=mac_rate / p.chip_area_mm2 / 1e9,
    )


def round_sig(x: float, digits: int = 4) -> float:
    """Round to a number of significant figures (paper-style reporting)."""
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - int(math.floor(math.log10(abs(x)))))


def timing_report(
    p: TimingParams,
    dac_latency_s: float | None = None,
    adc_latency_s: float | None = None,
    sig_figs: int | None = 4,
) -> dict:
    """Breakdown plus throughput as a flat dict, rounded for reporting."""
    b = latency_breakdown(p, dac_latency_s, adc_latency_s)
    rep = throughput(p, b)
    out = {
        "t0_s": b.t0,
        "tau_mod_s": b.tau_mod,
        "tau_pd_s": b.tau_pd,
        "tau_prop_s": b.tau_prop,
        "tau_ovmm_s": b.tau_ovmm,
        "tau_dacadc_s": b.tau_dacadc,
        "tau_rx_window_s": rx_window(b),
        "tau_fpga_s": b.tau_fpga,
        "tau_iter_s": b.tau_iter,
        "loop_flops_per_s": rep.loop_flops_per_s,
        "ovmm_flops_per_s": rep.ovmm_flops_per_s,
        "area_gmac_per_mm2": rep.area_gmac_per_mm2,
    }
    if sig_figs is not None:
        out = {k: round_sig(v, sig_figs) for k, v in out.items()}
    return out
