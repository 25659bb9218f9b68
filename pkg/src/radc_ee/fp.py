"""Dinkelbach and quadratic-transform auxiliaries for the sum-of-log-ratios EE.

For fixed (phi, lambda) the surrogate rate

    rhat_k = ln(1 + phi_k) - phi_k + 2 Re{sqrt(p_k (1 + phi_k)) conj(lambda_k) a_kk}
             - |lambda_k|^2 gamma_k

is a lower bound on ln(1 + sinr_k), tight at phi = sinr and
lambda = sqrt(p_k (1 + phi_k)) a_kk / gamma_k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import (
    DesignPoint,
    LinkTerms,
    beamspace,
    link_terms,
    power_consumption,
    sinr_from_terms,
    sum_rate,
)
from .scenario import SystemConfig


@dataclass
class FpState:
    eta: float
    phi: np.ndarray  # (K,) >= 0
    lam: np.ndarray  # (K,) complex


def dinkelbach_eta(z: DesignPoint, H, W, config: SystemConfig) -> float:
    return sum_rate(z, H, W, config.noise_power) / power_consumption(z, config)


def optimal_phi(z: DesignPoint, H, W, noise_power: float) -> np.ndarray:
    B, gram = beamspace(H, W)
    return sinr_from_terms(link_terms(z, B, gram, noise_power), z.p)


def gamma(z: DesignPoint, H, W, noise_power: float) -> np.ndarray:
    B, gram = beamspace(H, W)
    return link_terms(z, B, gram, noise_power).gamma


def lambda_from_terms(t: LinkTerms, p, phi) -> np.ndarray:
    """Closed-form lambda; a user with no signal gets lambda = 0."""
    g = t.gamma
    num = np.sqrt(p * (1.0 + phi)) * np.diag(t.A)
    silent = num == 0
    if np.any((g <= 0) & ~silent):
        raise ZeroDivisionError("gamma_k vanished for a user with signal; lambda is undefined")
    return np.where(silent, 0.0, num / np.where(silent, 1.0, g))


def optimal_lambda(z: DesignPoint, phi, H, W, noise_power: float) -> np.ndarray:
    B, gram = beamspace(H, W)
    return lambda_from_terms(link_terms(z, B, gram, noise_power), z.p, np.asarray(phi, dtype=float))


def surrogate_from_terms(t: LinkTerms, p, phi, lam) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    cross = np.sqrt(p * (1.0 + phi)) * lam.conj() * np.diag(t.A)
    return np.log1p(phi) - phi + 2.0 * cross.real - np.abs(lam) ** 2 * t.gamma


def surrogate_rate(z: DesignPoint, phi, lam, H, W, noise_power: float, k: int | None = None):
    """Per-user surrogate rate; one user's value when ``k`` is given."""
    B, gram = beamspace(H, W)
    r = surrogate_from_terms(link_terms(z, B, gram, noise_power), z.p, phi, lam)
    return r if k is None else float(r[k])
