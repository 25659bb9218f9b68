"""Energy-efficient uplink design with beamspace combining and resolution-adaptive ADCs."""

from .baselines import SchemeId, brute_force_oracle, run_scheme
from .metrics import DesignPoint, energy_efficiency, power_consumption, sinr, sum_rate
from .pdd import Diagnostics, SolverOptions, solve
from .scenario import PRESETS, SystemConfig, dft_codebook, gen_channel

__all__ = [
    "PRESETS", "DesignPoint", "Diagnostics", "SchemeId", "SolverOptions", "SystemConfig",
    "brute_force_oracle", "dft_codebook", "energy_efficiency", "gen_channel",
    "power_consumption", "run_scheme", "sinr", "solve", "sum_rate",
]
