"""Scenario constants, mmWave channel generation and the DFT beam codebook."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np


@dataclass(frozen=True)
class SystemConfig:
    """Scenario and hardware constants for one uplink cell.

    Powers are in watts, energies in joules per conversion step. The
    defaults are the full-size cell (64 antennas, 8 RF chains, 12 users).
    """

    n_antennas: int = 64
    n_rf_chains: int = 8
    codebook_size: int = 12
    n_users: int = 12
    n_paths: int = 10
    noise_power: float = 1e-13  # -100 dBm
    per_user_power_budget: float = 1e-2  # 10 dBm
    bit_min: int = 1
    bit_max: int = 8
    avg_bits: float = 3.0
    adc_energy_coeff: float = 9e-12
    sampling_rate: float = 1e9
    baseband_power: float = 0.2
    rf_chain_power: float = 0.04
    switch_power: float = 0.005
    lna_power: float = 0.02
    cell_radius: float = 200.0
    snr_scale: float = 1.0

    def __post_init__(self):
        N, M, S = self.n_antennas, self.n_rf_chains, self.codebook_size
        if not N >= S >= M >= 1:
            raise ValueError(f"need n_antennas >= codebook_size >= n_rf_chains >= 1, got N={N}, S={S}, M={M}")
        if self.n_users < 1 or self.n_paths < 1:
            raise ValueError("n_users and n_paths must be >= 1")
        if not 1 <= self.bit_min <= self.avg_bits <= self.bit_max:
            raise ValueError(
                f"need 1 <= bit_min <= avg_bits <= bit_max, got "
                f"{self.bit_min}, {self.avg_bits}, {self.bit_max}"
            )
        positive = (
            "noise_power", "per_user_power_budget", "adc_energy_coeff", "sampling_rate",
            "baseband_power", "rf_chain_power", "switch_power", "lna_power",
            "cell_radius", "snr_scale",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.cell_radius <= 1.0:
            raise ValueError("cell_radius must exceed the 1 m minimum user distance")

    @property
    def p_max(self) -> float:
        """Per-user transmit budget after the SNR scaling."""
        return self.per_user_power_budget * self.snr_scale

    @property
    def static_power(self) -> float:
        return self.baseband_power + self.n_rf_chains * (
            self.rf_chain_power + self.switch_power + self.lna_power
        )

    @property
    def bit_budget(self) -> float:
        return self.n_rf_chains * self.avg_bits

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


PRESETS = {
    "full": SystemConfig(),
    "desk": SystemConfig(n_antennas=16, n_rf_chains=4, codebook_size=6, n_users=4, n_paths=4),
    "tiny": SystemConfig(
        n_antennas=4, n_rf_chains=2, codebook_size=3, n_users=2, n_paths=4,
        bit_min=1, bit_max=4, avg_bits=2.0,
    ),
}


def snr_scale_from_db(snr_db: float, reference_db: float = 10.0) -> float:
    """Transmit-budget multiplier for an SNR operating point.

    ``reference_db`` is the SNR at which the nominal budget applies.
    """
    return 10.0 ** ((snr_db - reference_db) / 10.0)


@dataclass
class PathParams:
    gains: np.ndarray  # (K, L) complex
    angles: np.ndarray  # (K, L) radians
    distances: np.ndarray  # (K,) meters
    shadowing_db: np.ndarray  # (K,)

    @property
    def path_loss_db(self) -> np.ndarray:
        return path_loss_db(self.distances, self.shadowing_db)


@dataclass
class ChannelSet:
    H: np.ndarray  # (N, K)
    paths: PathParams


@dataclass
class Codebook:
    W: np.ndarray  # (N, S)
    indices: np.ndarray  # DFT column index of each codeword


def array_response(angle, n: int) -> np.ndarray:
    """ULA response with half-wavelength spacing and a 1/n prefactor.

    A scalar angle gives a length-``n`` vector; an array of angles gives
    one column per angle.
    """
    m = np.arange(n)
    angle = np.asarray(angle, dtype=float)
    phase = np.pi * np.multiply.outer(m, np.sin(angle))
    return np.exp(1j * phase) / n


def path_loss_db(distance, shadowing=0.0):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distance must be positive")
    out = 72.0 + 29.2 * np.log10(distance) + np.asarray(shadowing, dtype=float)
    return float(out) if out.ndim == 0 else out


def gen_channel(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw one multipath channel realisation.

    Users are uniform over the annulus between 1 m and the cell radius.
    The random draws do not depend on the antenna count, so two configs
    that differ only in ``n_antennas`` see the same geometry for a seed.
    """
    rng = np.random.default_rng(seed)
    K, L, N = config.n_users, config.n_paths, config.n_antennas
    r_min, r_max = 1.0, config.cell_radius

    u = rng.random(K)
    distances = np.sqrt(r_min**2 + u * (r_max**2 - r_min**2))
    shadowing = rng.standard_normal(K)
    gains = (rng.standard_normal((K, L)) + 1j * rng.standard_normal((K, L))) / np.sqrt(2)
    angles = rng.uniform(-np.pi / 2, np.pi / 2, size=(K, L))

    loss = 10.0 ** (path_loss_db(distances, shadowing) / 10.0)
    H = np.empty((N, K), dtype=complex)
    for k in range(K):
        steering = array_response(angles[k], N)  # (N, L)
        H[:, k] = np.sqrt(N / L / loss[k]) * steering @ gains[k]
    return ChannelSet(H=H, paths=PathParams(gains, angles, distances, shadowing))


def dft_codebook(n: int, s: int) -> Codebook:
    if not 1 <= s <= n:
        raise ValueError(f"codebook size must satisfy 1 <= s <= n, got s={s}, n={n}")
    used: set[int] = set()
    indices = []
    for i in range(s):
        q = (2 * i * n + s) // (2 * s)  # round half up of i*n/s
        while q in used:
            q = (q + 1) % n
        used.add(q)
        indices.append(q)
    indices = np.array(indices)
    m = np.arange(n)[:, None]
    W = np.exp(-2j * np.pi * m * indices[None, :] / n) / np.sqrt(n)
    return Codebook(W=W, indices=indices)
