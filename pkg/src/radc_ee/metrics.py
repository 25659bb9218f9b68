"""Link-level quantities for a design point: SINR, rate, power and EE.

Rates are in nats/s/Hz. ``H`` is the N x K channel, ``W`` the N x S
codebook.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .quantization import adc_power, quant_gains
from .scenario import SystemConfig


class DegenerateSinrError(ArithmeticError):
    """A user has signal power but a zero interference-plus-noise term."""


@dataclass
class DesignPoint:
    p: np.ndarray  # (K,) transmit powers
    G: np.ndarray  # (S, M) codeword selection, relaxed to reals while solving
    D: np.ndarray  # (M, M) baseband combiner
    U: np.ndarray  # (M, K) receivers, one column per user
    b: np.ndarray  # (M,) bits per ADC pair

    def copy(self) -> "DesignPoint":
        return DesignPoint(self.p.copy(), self.G.copy(), self.D.copy(), self.U.copy(), self.b.copy())


class LinkTerms(NamedTuple):
    """Intermediate products shared by SINR, surrogate rate and solver.

    ``A[k, l]`` is user k's combined response to user l's channel, i.e.
    u_k^H D^H F_alpha Q^H h_l.
    """

    C: np.ndarray  # (M, K) Q^H H
    V: np.ndarray  # (M, K) D u_k
    A: np.ndarray  # (K, K)
    QQ: np.ndarray  # (M, M) Q^H Q
    alpha: np.ndarray
    beta: np.ndarray
    rx_power: np.ndarray  # (M,) diag(Q^H H P^2 H^H Q + s^2 Q^H Q)
    received: np.ndarray  # (K,) sum_l p_l |A[k, l]|^2, own signal included
    noise: np.ndarray  # (K,) thermal noise after combining
    quant: np.ndarray  # (K,) quantization noise after combining

    @property
    def gamma(self) -> np.ndarray:
        return self.received + self.noise + self.quant


def link_terms(z: DesignPoint, B: np.ndarray, gram: np.ndarray, noise_power: float) -> LinkTerms:
    """Evaluate the shared terms from beamspace quantities.

    ``B = W^H H`` (S x K) and ``gram = W^H W`` (S x S).
    """
    gains = quant_gains(z.b)
    alpha, beta = gains.alpha, gains.beta
    C = z.G.T @ B
    V = z.D @ z.U
    Va = alpha[:, None] * V
    A = Va.conj().T @ C
    QQ = z.G.T @ gram @ z.G
    rx_power = (np.abs(C) ** 2) @ z.p + noise_power * np.real(np.diag(QQ))
    noise = noise_power * np.real(np.einsum("mk,mn,nk->k", Va.conj(), QQ, Va))
    quant = (alpha * beta * rx_power) @ (np.abs(V) ** 2)
    weighted = (np.abs(A) ** 2) @ z.p
    return LinkTerms(C, V, A, QQ, alpha, beta, rx_power, weighted, noise, quant)


def effective_combiner(W, G) -> np.ndarray:
    return np.asarray(W) @ np.asarray(G)


def beamspace(H, W):
    W = np.asarray(W)
    return W.conj().T @ H, W.conj().T @ W


def sinr_from_terms(t: LinkTerms, p) -> np.ndarray:
    signal = p * np.abs(np.diag(t.A)) ** 2
    denom = t.gamma - signal
    out = np.zeros_like(signal)
    live = signal > 0
    if np.any(live & (denom <= 0)):
        raise DegenerateSinrError("zero interference-plus-noise with nonzero signal")
    out[live] = signal[live] / denom[live]
    return out


def sinr(z: DesignPoint, H, W, noise_power: float, k: int | None = None):
    """Per-user SINR; a single user's value when ``k`` is given."""
    B, gram = beamspace(H, W)
    theta = sinr_from_terms(link_terms(z, B, gram, noise_power), z.p)
    return theta if k is None else float(theta[k])


def sum_rate(z: DesignPoint, H, W, noise_power: float) -> float:
    return float(np.sum(np.log1p(sinr(z, H, W, noise_power))))


def power_consumption(z: DesignPoint, config: SystemConfig) -> float:
    M = len(z.b)
    static = config.baseband_power + M * (config.rf_chain_power + config.switch_power + config.lna_power)
    return float(np.sum(z.p)) + adc_power(z.b, config.adc_energy_coeff, config.sampling_rate) + static


def energy_efficiency(z: DesignPoint, H, W, config: SystemConfig) -> float:
    return sum_rate(z, H, W, config.noise_power) / power_consumption(z, config)
