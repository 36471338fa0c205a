"""Calibrated readout noise and the stability metrics derived from it.

Noise model: a common-mode multiplicative term for laser power fluctuation
(one draw per readout vector) plus i.i.d. additive Gaussian detector noise per
channel, with optional uniform ADC quantization.  Stability is quantified by
the fidelity of measured vs theoretical readout vectors, the scale factor
P = C_exp / C_theo, the SNR of P (in 20*log10 dB), and its inverse, the cost
resolution R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UndefinedMetricError


@dataclass(frozen=True)
class NoiseParams:
    """Calibrated noise magnitudes.

    detector_sigma: additive Gaussian std per BPD channel (readout units).
    laser_rel_sigma: relative std of the common-mode power fluctuation.
    adc_bits / adc_full_scale: optional uniform quantizer on the readout.
    dac_bits: optional voltage quantizer (applied when configuring a mesh).
    """

    detector_sigma: float = 0.0
    laser_rel_sigma: float = 0.0
    adc_bits: int | None = None
    adc_full_scale: float = 8.0
    dac_bits: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.detector_sigma < 0 or self.laser_rel_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        for bits in (self.adc_bits, self.dac_bits):
            if bits is not None and not (4 <= bits <= 16):
                raise ValueError("quantizer resolution must be in [4, 16] bits")

    @property
    def is_ideal(self) -> bool:
        return (
            self.detector_sigma == 0.0
            and self.laser_rel_sigma == 0.0
            and self.adc_bits is None
        )


@dataclass(frozen=True)
class StabilityReport:
    """Aggregate stability metrics of a run or campaign."""

    mean_fidelity: float
    fidelity_std: float
    mean_scale: float
    scale_std: float
    snr_db: float
    resolution: float
    wrong_accept_fraction: float


def apply_noise(r, params: NoiseParams, rng: np.random.Generator) -> np.ndarray:
    """Noisy readout: r' = (1 + eps) r + eta, optionally quantized.

    The same number of variates is always drawn so paired-seed comparisons
    across noise levels stay aligned.
    """
    r = np.asarray(r, dtype=float)
    eps = params.laser_rel_sigma * rng.standard_normal()
    eta = params.detector_sigma * rng.standard_normal(r.shape)
    out = (1.0 + eps) * r + eta
    if params.adc_bits is not None:
        out = quantize(out, params.adc_bits, params.adc_full_scale)
    return out


def quantize(x, bits: int, full_scale: float) -> np.ndarray:
    """Uniform mid-tread quantizer over [-full_scale, +full_scale], clipping."""
    x = np.asarray(x, dtype=float)
    levels = (1 << (bits - 1)) - 1
    step = full_scale / levels
    return np.clip(np.round(x / step), -levels, levels) * step


def quantize_voltages(v, bits: int, v_max: float) -> np.ndarray:
    """Uniform voltage quantization over [0, v_max] (DAC resolution)."""
    v = np.asarray(v, dtype=float)
    levels = (1 << bits) - 1
    step = v_max / levels
    return np.clip(np.round(v / step), 0, levels) * step


def fidelity(measured, theoretical) -> float:
    """Normalized overlap |<m, t>| / (|m| |t|); 1 for parallel vectors."""
    m = np.asarray(measured, dtype=float)
    t = np.asarray(theoretical, dtype=float)
    if m.shape != t.shape:
        raise DimensionMismatchError(f"vector shapes {m.shape} and {t.shape} differ")
    mm = float(m @ m)
    tt = float(t @ t)
    if mm == 0.0 or tt == 0.0:
        raise UndefinedMetricError("fidelity is undefined for zero-norm vectors")
    return min(1.0, abs(float(m @ t)) / math.sqrt(mm * tt))


def scale_factor(measured, theoretical) -> float:
    """P = |measured|^2 / |theoretical|^2 = C_exp / C_theo."""
    m = np.asarray(measured, dtype=float)
    t = np.asarray(theoretical, dtype=float)
    tt = float(t @ t)
    if tt == 0.0:
        raise UndefinedMetricError("scale factor is undefined for a zero theoretical vector")
    return float(m @ m) / tt


def snr_and_resolution(scale_factors) -> tuple[float, float]:
    """SNR = mean(P)/std(P) in dB (20 log10) and the resolution R = 1/SNR.

    A zero spread reports an infinite SNR and zero resolution.
    """
    p = np.asarray(scale_factors, dtype=float)
    p = p[np.isfinite(p)]
    if p.size < 2:
        raise ValueError("need at least two scale factor samples")
    std = float(np.std(p))
    if std == 0.0:
        return math.inf, 0.0
    snr = float(np.mean(p)) / std
    return 20.0 * math.log10(snr), 1.0 / snr


def snr_db_to_resolution(snr_db: float) -> float:
    """Resolution R = 1/SNR for an SNR quoted in dB."""
    return 10.0 ** (-snr_db / 20.0)


def wrong_acceptance_fraction(relative_increases, resolution: float) -> float:
    """Fraction of sampled transitions with R > C_r > 0.

    ``relative_increases`` holds C_r = (C_prev - C_sampled)/C_min per sampled
    transition (positive when the proposed move worsens the cost); a wrong
    acceptance can occur when that increase is smaller than the resolution.
    """
    c_r = np.asarray(relative_increases, dtype=float)
    if c_r.size == 0:
        raise ValueError("transition window is empty")
    return float(np.mean((c_r > 0.0) & (c_r < resolution)))


def calibrate_detector_sigma(
    a: np.ndarray,
    target_snr_db: float,
    rng: np.random.Generator,
    laser_rel_sigma: float = 0.0,
    n_samples: int = 2000,
) -> float:
    """Detector sigma that yields the target cost-function SNR on matrix ``a``.

    The paper quotes only the resulting SNR, so calibration is inverse: the
    scale-factor spread is measured over random binary inputs and the sigma
    bisected until the simulated SNR matches the target.  Raises if the laser
    noise alone already exceeds the target spread.
    """
    n = a.shape[0]
    states = rng.integers(0, 2, size=(n_samples, n)).astype(float)
    r_t = states @ a.T
    norms = np.einsum("ij,ij->i", r_t, r_t)
    keep = norms > 0
    r_t = r_t[keep]
    eps = laser_rel_sigma * rng.standard_normal(r_t.shape[0])
    eta = rng.standard_normal(r_t.shape)

    def snr_for(sigma: float) -> float:
        r_m = (1.0 + eps)[:, None] * r_t + sigma * eta
        p = np.einsum("ij,ij->i", r_m, r_m) / np.einsum("ij,ij->i", r_t, r_t)
        return 20.0 * math.log10(float(np.mean(p)) / float(np.std(p)))

    if laser_rel_sigma > 0 and snr_for(0.0) < target_snr_db:
        raise ValueError("laser noise alone exceeds the target SNR spread")
    lo, hi = 0.0, float(np.sqrt(np.max(norms)))
    while snr_for(hi) > target_snr_db:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if snr_for(mid) > target_snr_db:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
