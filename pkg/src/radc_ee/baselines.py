"""Comparison schemes and the exhaustive discrete oracle."""

from __future__ import annotations

import itertools
import math
from enum import Enum

import numpy as np

from .metrics import DesignPoint
from .pdd import (
    Diagnostics,
    Problem,
    SolverOptions,
    fixed_bits,
    initial_design,
    optimize_continuous,
    solve,
)
from .scenario import SystemConfig

ORACLE_BUDGET = 100_000


class SchemeId(str, Enum):
    JBQA = "JBQA"  # joint beam selection and bit allocation
    RHC = "RHC"  # random codewords, fixed bits
    UNIFORM_BITS = "UNIFORM_BITS"  # optimised codewords, fixed bits
    ORACLE = "ORACLE"  # exhaustive over codewords and bits


def random_selection(S: int, M: int, rng: np.random.Generator) -> np.ndarray:
    G = np.zeros((S, M))
    G[rng.choice(S, size=M, replace=False), np.arange(M)] = 1.0
    return G


def _fixed_diag(options: SolverOptions, ee: float) -> Diagnostics:
    return Diagnostics(converged=True, outer_iters=0, final_eps=0.0, rho=options.rho0, eta=ee)


def rhc_solve(config: SystemConfig, H, options: SolverOptions | None = None, seed: int = 0, W=None):
    options = options or SolverOptions()
    prob = Problem.build(config, H, W)
    rng = np.random.default_rng([seed, 0x5EED])
    G = random_selection(config.codebook_size, config.n_rf_chains, rng)
    b = np.full(config.n_rf_chains, float(fixed_bits(config)))
    z, ee = optimize_continuous(initial_design(prob, G=G, b=b), prob, options)
    return z, _fixed_diag(options, ee)


def uniform_bits_solve(config: SystemConfig, H, options: SolverOptions | None = None, W=None):
    return solve(config, H, options, W, optimize_bits=False)


def jbqa_solve(config: SystemConfig, H, options: SolverOptions | None = None, W=None):
    return solve(config, H, options, W, optimize_bits=True)


def selection_count(S: int, M: int) -> int:
    return math.perm(S, M)


def enumerate_bits(config: SystemConfig):
    """All integer bit vectors in the box whose total meets the budget."""
    levels = range(config.bit_min, config.bit_max + 1)
    budget = config.bit_budget + 1e-9
    return [b for b in itertools.product(levels, repeat=config.n_rf_chains) if sum(b) <= budget]


def brute_force_oracle(config: SystemConfig, H, options: SolverOptions | None = None, W=None):
    """Exhaustive search over (G, b); continuous blocks optimised per pair.

    Returns ``(design, ee)`` with ee in nats/s/Hz/W. Ties keep the first
    pair in lexicographic order of (selection, bits).
    """
    options = options or SolverOptions()
    S, M = config.codebook_size, config.n_rf_chains
    bit_sets = enumerate_bits(config)
    count = selection_count(S, M) * len(bit_sets)
    if count > ORACLE_BUDGET:
        raise ValueError(f"oracle would enumerate {count} combinations (limit {ORACLE_BUDGET})")
    prob = Problem.build(config, H, W)
    best: tuple[float, DesignPoint | None] = (-np.inf, None)
    for picks in itertools.permutations(range(S), M):
        G = np.zeros((S, M))
        G[list(picks), np.arange(M)] = 1.0
        for b in bit_sets:
            z, ee = optimize_continuous(initial_design(prob, G=G, b=np.array(b, float)), prob, options)
            if ee > best[0]:
                best = (ee, z)
    return best[1], best[0]


def run_scheme(scheme: SchemeId | str, config: SystemConfig, H, options=None, seed: int = 0, W=None):
    """Dispatch by scheme tag; returns ``(design, diagnostics)``."""
    scheme = SchemeId(scheme)
    options = options or SolverOptions()
    if scheme is SchemeId.JBQA:
        return jbqa_solve(config, H, options, W)
    if scheme is SchemeId.UNIFORM_BITS:
        return uniform_bits_solve(config, H, options, W)
    if scheme is SchemeId.RHC:
        return rhc_solve(config, H, options, seed, W)
    z, ee = brute_force_oracle(config, H, options, W)
    return z, _fixed_diag(options, ee)
