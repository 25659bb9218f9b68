"""Additive quantization noise model (AQNM) for resolution-adaptive ADC pairs.

Bit counts are per ADC *pair*: the I and Q converters behind RF chain m
both run at ``b[m]`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# normalised distortion constant of the high-resolution approximation
DISTORTION_CONST = np.pi * np.sqrt(3.0) / 2.0


@dataclass
class QuantGains:
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def F_alpha(self) -> np.ndarray:
        return np.diag(self.alpha)

    @property
    def F_beta(self) -> np.ndarray:
        return np.diag(self.beta)


def quant_gains(b) -> QuantGains:
    b = np.asarray(b, dtype=float)
    beta = DISTORTION_CONST * 4.0 ** (-b)
    return QuantGains(alpha=1.0 - beta, beta=beta)


def quant_noise_cov(Q, H, p, noise_power, b) -> np.ndarray:
    """Diagonal covariance of the quantization noise after RF combining."""
    Q = np.asarray(Q)
    H = np.asarray(H)
    p = np.asarray(p, dtype=float)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if Q.shape[0] != H.shape[0] or H.shape[1] != p.shape[0] or Q.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: Q{Q.shape}, H{H.shape}, p{p.shape}, b{b.shape}")
    C = Q.conj().T @ H
    received = (np.abs(C) ** 2) @ p + noise_power * np.sum(np.abs(Q) ** 2, axis=0)
    g = quant_gains(b)
    return np.diag(g.alpha * g.beta * received)


def adc_power(b, adc_energy_coeff, sampling_rate) -> float:
    b = np.asarray(b, dtype=float)
    return float(np.sum(adc_energy_coeff * sampling_rate * 2.0 ** (b + 1)))


def adc_power_grad(b, adc_energy_coeff, sampling_rate) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return np.log(2.0) * adc_energy_coeff * sampling_rate * 2.0 ** (b + 1)


def _quantize_real(x, bits, scale):
    levels = 2.0**bits
    step = 6.0 * scale / levels
    idx = np.clip(np.floor(x / step), -levels / 2, levels / 2 - 1)
    return (idx + 0.5) * step


def simulate_quantizer(y, b, agc_scale=None) -> np.ndarray:
    """Uniform mid-rise I/Q quantizer with clipping at +-3 AGC scales.

    ``y`` has the RF-chain index on its first axis; any trailing axes are
    samples. ``agc_scale`` is the per-branch scale of each real component;
    by default it is the empirical RMS of the real and imaginary parts,
    i.e. ``sqrt(E|y_m|^2 / 2)``.
    """
    y = np.asarray(y, dtype=complex)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    shape = (-1,) + (1,) * (y.ndim - 1)
    if agc_scale is None:
        axes = tuple(range(1, y.ndim))
        power = np.mean(np.abs(y) ** 2, axis=axes) if axes else np.abs(y) ** 2
        agc_scale = np.sqrt(power / 2.0)
        # an all-zero branch still needs a valid range
        agc_scale = np.where(agc_scale > 0, agc_scale, 1.0)
    agc_scale = np.broadcast_to(np.asarray(agc_scale, dtype=float), b.shape)
    if np.any(agc_scale <= 0):
        raise ValueError("agc_scale must be positive")
    bits = b.reshape(shape)
    scale = agc_scale.reshape(shape)
    return _quantize_real(y.real, bits, scale) + 1j * _quantize_real(y.imag, bits, scale)
