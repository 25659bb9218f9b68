"""Penalty-dual-decomposition solver for joint beam selection and bit allocation.

The inner loop performs block-coordinate ascent on the augmented
Lagrangian ``J``. For fixed (eta, phi, lambda), ``J`` is a concave
quadratic in each of the selection matrix G, its copy ghat, the receivers
U and the baseband combiner D, so those blocks are maximised exactly.
Powers have a closed form. Bits use a linearise-plus-proximal surrogate.
The outer loop updates the multipliers of the coupling constraints
G = ghat, G * (1 - ghat) = 0, colsum(G) = 1, or shrinks the penalty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import nnls

from .fp import lambda_from_terms, surrogate_from_terms
from .metrics import DesignPoint, LinkTerms, link_terms, power_consumption, sinr_from_terms
from .quantization import adc_power_grad, quant_gains
from .scenario import SystemConfig, dft_codebook

log = logging.getLogger(__name__)

BLOCKS = ("p", "b", "g", "ghat", "u", "d")
POWER_FLOOR = 1e-30


@dataclass
class SolverOptions:
    rho0: float = 10.0
    shrink: float = 0.7
    tol: float = 1e-4
    max_inner: int = 30
    max_outer: int = 150
    prox_weight: float = 10.0
    mu0: float = 1.0
    bisection_tol: float = 1e-9
    seed: int = 0
    stall_tol: float = 1e-8
    # False holds eta fixed over each inner loop (classical Dinkelbach)
    refresh_eta_each_inner: bool = True
    max_final: int = 100
    # proximal weight: start at prox_weight, relax after each accepted
    # bit step and double on rejection
    adaptive_prox: bool = True
    prox_relax: float = 0.25
    prox_floor: float = 1e-9
    track_blocks: bool = False
    # "best": among budget-feasible thresholds keep the highest-EE rounding;
    # "smallest": always the smallest feasible threshold
    rounding: str = "best"

    def __post_init__(self):
        if self.rounding not in ("best", "smallest"):
            raise ValueError("rounding must be 'best' or 'smallest'")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.tol <= 0 or self.prox_weight <= 0 or self.rho0 <= 0 or self.mu0 <= 0:
            raise ValueError("tol, prox_weight, rho0 and mu0 must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class Problem:
    """A channel realisation together with its codebook and beamspace products."""

    config: SystemConfig
    H: np.ndarray
    W: np.ndarray
    B: np.ndarray = field(init=False)  # W^H H
    gram: np.ndarray = field(init=False)  # W^H W

    def __post_init__(self):
        self.B = self.W.conj().T @ self.H
        self.gram = self.W.conj().T @ self.W

    @classmethod
    def build(cls, config: SystemConfig, H, W=None) -> "Problem":
        if W is None:
            W = dft_codebook(config.n_antennas, config.codebook_size).W
        return cls(config, np.asarray(H, dtype=complex), np.asarray(W, dtype=complex))

    def terms(self, z: DesignPoint) -> LinkTerms:
        return link_terms(z, self.B, self.gram, self.config.noise_power)


@dataclass
class DualVars:
    zeta: np.ndarray  # (S, M)
    varsigma: np.ndarray  # (M,)
    nu: np.ndarray  # (S, M)

    @classmethod
    def zeros(cls, S: int, M: int) -> "DualVars":
        return cls(np.zeros((S, M)), np.zeros(M), np.zeros((S, M)))


@dataclass
class SolverState:
    z: DesignPoint
    ghat: np.ndarray
    eta: float
    phi: np.ndarray
    lam: np.ndarray
    duals: DualVars
    rho: float
    mu: float


@dataclass
class Diagnostics:
    converged: bool
    outer_iters: int
    final_eps: float
    rho: float
    eta: float  # EE of the returned design, nats/s/Hz/W
    trace: list = field(default_factory=list)  # (t, v, J, eps, eta)
    block_trace: list = field(default_factory=list)  # (t, v, block, J_before, J_after)
    mm_backtracks: int = 0
    b_relaxed: np.ndarray | None = None
    G_relaxed: np.ndarray | None = None


# --------------------------------------------------------------------------
# linear algebra helpers


def _pinv_psd(A: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    w, Vec = np.linalg.eigh(A)
    keep = w > rcond * max(w.max(initial=0.0), 0.0)
    if not np.any(keep):
        return np.zeros_like(A)
    return (Vec[:, keep] / w[keep]) @ Vec[:, keep].conj().T


def _psd_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    try:
        return linalg.cho_solve(linalg.cho_factor(A, check_finite=False), B, check_finite=False)
    except linalg.LinAlgError:
        log.debug("singular stationarity system, adding diagonal loading")
    loading = 1e-10 * max(float(np.max(np.abs(np.diag(A)))), np.finfo(float).tiny)
    try:
        A2 = A + loading * np.eye(A.shape[0])
        return linalg.cho_solve(linalg.cho_factor(A2, check_finite=False), B, check_finite=False)
    except linalg.LinAlgError:
        return _pinv_psd(A) @ B


# --------------------------------------------------------------------------
# objective


def penalty_term(G, ghat, duals: DualVars, rho: float) -> float:
    """The (1/2 rho) squared-residual part of the augmented Lagrangian."""
    if rho <= 0:
        raise ValueError("penalty parameter rho must be positive")
    r1 = G - ghat + rho * duals.zeta
    r2 = G * (1.0 - ghat) + rho * duals.nu
    r3 = G.sum(axis=0) - 1.0 + rho * duals.varsigma
    return float(np.sum(r1**2) + np.sum(r2**2) + np.sum(r3**2)) / (2.0 * rho)


def augmented_lagrangian(state: SolverState, prob: Problem, terms: LinkTerms | None = None) -> float:
    z = state.z
    t = prob.terms(z) if terms is None else terms
    rhat = surrogate_from_terms(t, z.p, state.phi, state.lam)
    return (
        float(np.sum(rhat))
        - state.eta * power_consumption(z, prob.config)
        - penalty_term(z.G, state.ghat, state.duals, state.rho)
    )


def refresh_fp(state: SolverState, prob: Problem, update_eta: bool = True) -> None:
    """Set phi, lambda (and optionally eta) to their closed-form optima."""
    z = state.z
    t = prob.terms(z)
    theta = sinr_from_terms(t, z.p)
    if update_eta:
        state.eta = float(np.sum(np.log1p(theta))) / power_consumption(z, prob.config)
    state.phi = theta
    state.lam = lambda_from_terms(t, z.p, theta)


# --------------------------------------------------------------------------
# block updates


def _fp_weights(state: SolverState):
    lam2 = np.abs(state.lam) ** 2
    cl = np.sqrt(state.z.p * (1.0 + state.phi)) * state.lam.conj()
    return lam2, cl


def _bisect_budget(num: float, base: float, p_max: float, tol: float) -> tuple[float, float]:
    """Find sigma >= 0 with (num / (base + sigma))^2 = p_max."""

    def power(sigma):
        return (num / (base + sigma)) ** 2

    lo, hi = 0.0, max(1.0, abs(base))
    while power(hi) >= p_max:
        hi *= 2.0
    p_hi = power(hi)
    while abs(p_hi - p_max) > tol * p_max:
        mid = 0.5 * (lo + hi)
        if power(mid) >= p_max:
            lo = mid
        else:
            hi, p_hi = mid, power(mid)
    return hi, p_hi


def update_p(state: SolverState, prob: Problem, tol: float = 1e-9) -> np.ndarray:
    """Closed-form power update with per-user budget multipliers.

    In the amplitude sqrt(p_k), J is ``2 c_k x - base_k x^2``, so the
    unconstrained optimum is ``(c_k / base_k)^2``; an active budget raises
    the denominator by the multiplier sigma_k found by bisection.
    """
    z = state.z
    t = prob.terms(z)
    lam2, _ = _fp_weights(state)
    tau = t.alpha * t.beta * ((np.abs(t.V) ** 2) @ lam2)
    base = state.eta + lam2 @ (np.abs(t.A) ** 2) + tau @ (np.abs(t.C) ** 2)
    num = np.sqrt(1.0 + state.phi) * np.real(state.lam.conj() * np.diag(t.A))
    num = np.maximum(num, 0.0)
    p_max = prob.config.p_max

    p = np.empty_like(z.p)
    for k in range(len(p)):
        if base[k] <= 0:
            # J non-decreasing in p_k
            p[k] = p_max if num[k] > 0 or base[k] < 0 else z.p[k]
            continue
        pk = (num[k] / base[k]) ** 2
        if pk <= p_max:
            p[k] = pk
        else:
            _, p[k] = _bisect_budget(num[k], base[k], p_max, tol)
    # a switched-off user decays geometrically; stop before denormals
    p[p < POWER_FLOOR * p_max] = 0.0
    return p


def _g_quadratic(state: SolverState, prob: Problem):
    """J as ``lin @ x - x @ quad @ x + const`` in x = G.ravel()."""
    z = state.z
    S, M = z.G.shape
    K = len(z.p)
    s2 = prob.config.noise_power
    gains = quant_gains(z.b)
    alpha, beta = gains.alpha, gains.beta
    V = z.D @ z.U
    Va = alpha[:, None] * V
    lam2, cl = _fp_weights(state)
    B, gram = prob.B, prob.gram

    lin = 2.0 * np.real(np.einsum("k,sk,mk->sm", cl, B, Va.conj())).ravel()

    # |A[k, l]|^2 = |e_kl . x|^2 with e_kl[s, m] = B[s, l] conj(Va[m, k])
    E = B.T[None, :, :, None] * Va.conj().T[:, None, None, :]
    F = (np.sqrt(lam2[:, None] * z.p[None, :])[:, :, None, None] * E).reshape(K * K, S * M)
    quad = np.real(F.conj().T @ F)
    Mw = (Va.conj() * lam2) @ Va.T
    quad += s2 * np.real(np.kron(gram, Mw))
    Omega = (B.conj() * z.p) @ B.T + s2 * gram
    tau = alpha * beta * ((np.abs(V) ** 2) @ lam2)
    quad += np.real(np.kron(Omega, np.diag(tau)))

    rho, ghat, du = state.rho, state.ghat, state.duals
    quad += np.diag((1.0 + (1.0 - ghat) ** 2).ravel()) / (2.0 * rho)
    quad += np.kron(np.ones((S, S)), np.eye(M)) / (2.0 * rho)
    lin -= ((rho * du.zeta - ghat) + (1.0 - ghat) * rho * du.nu + (rho * du.varsigma - 1.0)[None, :]).ravel() / rho
    return lin, quad


def update_g(state: SolverState, prob: Problem) -> np.ndarray:
    """Exact maximiser over G subject to each codeword row summing to <= 1.

    The row constraints are handled through the dual, a nonnegative least
    squares problem in one multiplier per row.
    """
    S, M = state.z.G.shape
    lin, quad = _g_quadratic(state, prob)
    cho = linalg.cho_factor(quad, check_finite=False)
    x0 = 0.5 * linalg.cho_solve(cho, lin, check_finite=False)
    if np.all(x0.reshape(S, M).sum(axis=1) <= 1.0):
        return x0.reshape(S, M)

    Cm = np.kron(np.eye(S), np.ones((1, M)))
    X = linalg.cho_solve(cho, Cm.T, check_finite=False)
    dual_hess = 0.25 * Cm @ X
    dual_lin = 0.5 * Cm @ x0 - 0.5
    E = linalg.cholesky(dual_hess, lower=False, check_finite=False)
    f = linalg.solve_triangular(E.T, dual_lin, lower=True, check_finite=False)
    mult, _ = nnls(E, f)
    return (x0 - 0.5 * X @ mult).reshape(S, M)


def update_ghat(state: SolverState) -> np.ndarray:
    """Per-entry maximiser of the two penalty quadratics, clamped to [0, 1]."""
    g, rho, du = state.z.G, state.rho, state.duals
    ghat = (g + g**2 + rho * (du.zeta + g * du.nu)) / (1.0 + g**2)
    return np.clip(ghat, 0.0, 1.0)


def _combiner_covariance(t: LinkTerms, p, noise_power):
    """Covariance of F_alpha yhat + n_q, i.e. the signal seen by D."""
    Ca = t.alpha[:, None] * t.C
    cov = (Ca * p) @ Ca.conj().T
    cov += noise_power * (t.alpha[:, None] * t.QQ * t.alpha[None, :])
    cov += np.diag(t.alpha * t.beta * t.rx_power)
    return Ca, cov


def update_u(state: SolverState, prob: Problem) -> np.ndarray:
    z = state.z
    t = prob.terms(z)
    lam2, cl = _fp_weights(state)
    Ca, cov = _combiner_covariance(t, z.p, prob.config.noise_power)
    Phi = z.D.conj().T @ cov @ z.D
    rhs = (z.D.conj().T @ Ca) * cl[None, :]
    U = z.U.copy()
    live = lam2 > 0
    if np.any(live):
        U[:, live] = _psd_solve(Phi, rhs[:, live]) / lam2[live]
    return U


def update_d(state: SolverState, prob: Problem) -> np.ndarray:
    """Solve cov D (sum_k |lam_k|^2 u_k u_k^H) = sum_k c_k conj(lam_k) f_k u_k^H."""
    z = state.z
    t = prob.terms(z)
    lam2, cl = _fp_weights(state)
    Ca, cov = _combiner_covariance(t, z.p, prob.config.noise_power)
    Y = (Ca * cl[None, :]) @ z.U.conj().T
    Su = (z.U * lam2[None, :]) @ z.U.conj().T
    if not np.any(lam2 > 0):
        return z.D.copy()
    return _psd_solve(cov, Y) @ _pinv_psd(Su)


def _set_combiner(z: DesignPoint, D: np.ndarray) -> None:
    """Install D, moving its scale into U; only D @ U enters J."""
    scale = np.linalg.norm(D) / np.sqrt(D.shape[0])
    if scale > 0 and np.isfinite(scale):
        z.D = D / scale
        z.U = z.U * scale
    else:
        z.D = D


def update_linear_block(state: SolverState, which: str, prob: Problem) -> np.ndarray:
    if which == "g":
        return update_g(state, prob)
    if which == "ghat":
        return update_ghat(state)
    if which == "u":
        return update_u(state, prob)
    if which == "d":
        return update_d(state, prob)
    raise ValueError(f"unknown block {which!r}")


def gradient_b(state: SolverState, prob: Problem) -> np.ndarray:
    """Analytic dJ/db through alpha(b), beta(b) and the ADC power."""
    z = state.z
    t = prob.terms(z)
    cfg = prob.config
    lam2, cl = _fp_weights(state)
    alpha, beta, V, C = t.alpha, t.beta, t.V, t.C
    ln4 = np.log(4.0)
    d_alpha = ln4 * beta
    d_ab = ln4 * beta * (beta - alpha)
    Vc = V.conj()
    Va = alpha[:, None] * V

    cross = 2.0 * d_alpha * np.real((Vc * C) @ cl)
    interference = 2.0 * d_alpha * np.real((Vc * (C @ (z.p[:, None] * t.A.conj().T))) @ lam2)
    thermal = 2.0 * cfg.noise_power * d_alpha * np.real((Vc * (t.QQ @ Va)) @ lam2)
    quant = d_ab * t.rx_power * ((np.abs(V) ** 2) @ lam2)
    adc = state.eta * adc_power_grad(z.b, cfg.adc_energy_coeff, cfg.sampling_rate)
    return cross - interference - thermal - quant - adc


def project_bits(center, lo: float, hi: float, budget: float, iters: int = 200) -> np.ndarray:
    """Euclidean projection onto {lo <= b <= hi, sum(b) <= budget}."""
    center = np.asarray(center, dtype=float)
    b = np.clip(center, lo, hi)
    if b.sum() <= budget:
        return b
    s_lo, s_hi = 0.0, float(np.max(center) - lo)
    for _ in range(iters):
        mid = 0.5 * (s_lo + s_hi)
        if np.clip(center - mid, lo, hi).sum() > budget:
            s_lo = mid
        else:
            s_hi = mid
        if s_hi - s_lo <= 1e-15 * max(1.0, s_hi):
            break
    return np.clip(center - s_hi, lo, hi)


def update_b(state: SolverState, prob: Problem, prox_weight: float, omega=None) -> np.ndarray:
    """Maximise ``omega.(b - b_v) - prox_weight ||b - b_v||^2`` over the bit set."""
    if omega is None:
        omega = gradient_b(state, prob)
    cfg = prob.config
    center = state.z.b + omega / (2.0 * prox_weight)
    return project_bits(center, cfg.bit_min, cfg.bit_max, cfg.bit_budget)


# --------------------------------------------------------------------------
# outer loop pieces


def _residuals(G, ghat):
    return G - ghat, G.sum(axis=0) - 1.0, G * (1.0 - ghat)


def violation_eps(state_or_G, ghat=None) -> float:
    if ghat is None:
        G, ghat = state_or_G.z.G, state_or_G.ghat
    else:
        G = state_or_G
    r1, r2, r3 = _residuals(G, ghat)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2)), np.max(np.abs(r3))))


def dual_update(state: SolverState) -> DualVars:
    r1, r2, r3 = _residuals(state.z.G, state.ghat)
    du, rho = state.duals, state.rho
    return DualVars(du.zeta + r1 / rho, du.varsigma + r2 / rho, du.nu + r3 / rho)


def penalty_update(rho: float, shrink: float) -> float:
    return shrink * rho


def _snap(b_star, snap):
    b_star = np.asarray(b_star, dtype=float)
    near = np.abs(b_star - np.round(b_star)) <= snap
    return np.where(near, np.round(b_star), b_star)


def rounding_candidates(b_star, avg_bits: float, M: int | None = None, snap: float = 1e-9):
    """Threshold roundings that meet the budget, smallest threshold first.

    Each entry is ``(delta, bits)``; values within ``snap`` of an integer
    are treated as that integer.
    """
    b_star = _snap(b_star, snap)
    M = len(b_star) if M is None else M
    budget = M * avg_bits + 1e-9
    lo = np.floor(b_star)
    frac = b_star - lo
    out = []
    for delta in np.unique(np.concatenate(([0.0], frac))):
        bits = np.where(frac <= delta, lo, np.ceil(b_star)).astype(int)
        if bits.sum() <= budget:
            out.append((float(delta), bits))
    if not out:  # delta = 1 floors everything
        out.append((1.0, lo.astype(int)))
    return out


def round_bits(b_star, avg_bits: float, M: int | None = None, snap: float = 1e-9) -> np.ndarray:
    """Threshold rounding with the smallest threshold that meets the budget."""
    return rounding_candidates(b_star, avg_bits, M, snap)[0][1]


def project_selection(G: np.ndarray) -> np.ndarray:
    """Greedy binary assignment: repeatedly take the largest remaining entry."""
    S, M = G.shape
    out = np.zeros((S, M))
    free_rows = np.ones(S, bool)
    free_cols = np.ones(M, bool)
    # stable order: ties go to the lowest (s, m)
    order = np.argsort(-G.ravel(), kind="stable")
    for flat in order:
        s, m = divmod(int(flat), M)
        if free_rows[s] and free_cols[m]:
            out[s, m] = 1.0
            free_rows[s] = free_cols[m] = False
            if not free_cols.any():
                break
    return out


# --------------------------------------------------------------------------
# initialisation and the restricted continuous loop


def greedy_selection(prob: Problem) -> np.ndarray:
    """Pick the M codewords with the largest aggregate beam gain, best first."""
    S, M = prob.config.codebook_size, prob.config.n_rf_chains
    score = np.sum(np.abs(prob.B) ** 2, axis=1)
    picks = np.argsort(-score, kind="stable")[:M]
    G = np.zeros((S, M))
    G[picks, np.arange(M)] = 1.0
    return G


def mmse_receivers(z: DesignPoint, prob: Problem) -> np.ndarray:
    t = prob.terms(z)
    Ca, cov = _combiner_covariance(t, z.p, prob.config.noise_power)
    Fm = z.D.conj().T @ Ca
    Phi = z.D.conj().T @ cov @ z.D
    return _psd_solve(Phi, Fm * np.sqrt(z.p)[None, :])


def initial_design(prob: Problem, G=None, b=None) -> DesignPoint:
    cfg = prob.config
    M, K = cfg.n_rf_chains, cfg.n_users
    G = greedy_selection(prob) if G is None else np.asarray(G, dtype=float)
    b = np.full(M, float(cfg.avg_bits)) if b is None else np.asarray(b, dtype=float)
    z = DesignPoint(
        p=np.full(K, cfg.p_max), G=G, D=np.eye(M, dtype=complex), U=np.zeros((M, K), complex), b=b
    )
    z.U = mmse_receivers(z, prob)
    return z


def design_ee(z: DesignPoint, prob: Problem) -> float:
    theta = sinr_from_terms(prob.terms(z), z.p)
    return float(np.sum(np.log1p(theta))) / power_consumption(z, prob.config)


def optimize_continuous(z: DesignPoint, prob: Problem, options: SolverOptions | None = None):
    """Optimise p, U, D (and eta, phi, lambda) with G and b frozen.

    Returns the improved design and its EE in nats/s/Hz/W.
    """
    options = options or SolverOptions()
    S, M = z.G.shape
    state = SolverState(
        z=z.copy(), ghat=z.G.copy(), eta=0.0, phi=np.zeros(len(z.p)), lam=np.zeros(len(z.p), complex),
        duals=DualVars.zeros(S, M), rho=1.0, mu=options.mu0,
    )
    prev = None
    for _ in range(options.max_final):
        refresh_fp(state, prob)
        if prev is not None and abs(state.eta - prev) <= options.stall_tol * max(abs(state.eta), 1e-300):
            break
        prev = state.eta
        state.z.p = update_p(state, prob, options.bisection_tol)
        state.z.U = update_u(state, prob)
        _set_combiner(state.z, update_d(state, prob))
    return state.z, design_ee(state.z, prob)


# --------------------------------------------------------------------------
# the double loop


def _b_step(state: SolverState, prob: Problem, options: SolverOptions, J_before: float, weight: float):
    """Surrogate bit step with a backtracked proximal weight.

    A step is accepted once the linear-plus-proximal surrogate lies below
    J at the new point, so J never decreases. Returns the accepted weight
    and the number of doublings.
    """
    omega = gradient_b(state, prob)
    b_old = state.z.b
    slack = 1e-12 * max(1.0, abs(J_before))
    for backtracks in range(60):
        state.z.b = b_old
        b_new = update_b(state, prob, weight, omega)
        step = b_new - b_old
        state.z.b = b_new
        floor = J_before + omega @ step - weight * (step @ step)
        if augmented_lagrangian(state, prob) >= floor - slack:
            return weight, backtracks
        weight *= 2.0
    state.z.b = b_old
    return weight, 60


def solve(
    config: SystemConfig,
    H,
    options: SolverOptions | None = None,
    W=None,
    *,
    optimize_bits: bool = True,
    G0=None,
) -> tuple[DesignPoint, Diagnostics]:
    """Run the full double loop and return a feasible integer design.

    With ``optimize_bits=False`` the bits stay at the average budget,
    which must then be an integer.
    """
    options = options or SolverOptions()
    prob = Problem.build(config, H, W)
    S, M = config.codebook_size, config.n_rf_chains
    b0 = None
    if not optimize_bits:
        b0 = np.full(M, float(fixed_bits(config)))
    z = initial_design(prob, G=G0, b=b0)
    state = SolverState(
        z=z, ghat=z.G.copy(), eta=0.0, phi=np.zeros(config.n_users), lam=np.zeros(config.n_users, complex),
        duals=DualVars.zeros(S, M), rho=options.rho0, mu=options.mu0,
    )
    diag = Diagnostics(converged=False, outer_iters=0, final_eps=np.inf, rho=options.rho0, eta=0.0)

    updates = {
        "p": lambda: setattr(state.z, "p", update_p(state, prob, options.bisection_tol)),
        "g": lambda: setattr(state.z, "G", update_g(state, prob)),
        "ghat": lambda: setattr(state, "ghat", update_ghat(state)),
        "u": lambda: setattr(state.z, "U", update_u(state, prob)),
        "d": lambda: _set_combiner(state.z, update_d(state, prob)),
    }

    eps = 0.0
    prox = options.prox_weight
    for t in range(options.max_outer):
        J_last = None
        for v in range(options.max_inner):
            refresh_fp(state, prob, update_eta=options.refresh_eta_each_inner or v == 0)
            J = augmented_lagrangian(state, prob)
            for name in BLOCKS:
                if name == "b":
                    if not optimize_bits:
                        continue
                    trial = max(prox * options.prox_relax, options.prox_floor) if options.adaptive_prox else prox
                    prox, n_back = _b_step(state, prob, options, J, trial)
                    diag.mm_backtracks += n_back
                else:
                    updates[name]()
                if options.track_blocks or name == "p":
                    J_new = augmented_lagrangian(state, prob)
                    if options.track_blocks:
                        diag.block_trace.append((t, v, name, J, J_new))
                    J = J_new
            J = augmented_lagrangian(state, prob)
            eps = violation_eps(state)
            diag.trace.append((t, v, J, eps, state.eta))
            if J_last is not None and abs(J - J_last) <= options.stall_tol * max(1.0, abs(J)):
                break
            J_last = J

        eps = violation_eps(state)
        diag.outer_iters = t + 1
        if eps <= state.mu:
            state.duals = dual_update(state)
        else:
            state.rho = penalty_update(state.rho, options.shrink)
        state.mu = options.shrink * eps
        if eps <= options.tol:
            diag.converged = True
            break

    diag.final_eps = eps
    diag.rho = state.rho
    diag.G_relaxed = state.z.G.copy()
    diag.b_relaxed = state.z.b.copy()

    # the continuous blocks restart from the standard initial point, so
    # the returned design depends only on the discrete choice (G, b)
    G = project_selection(state.z.G)
    if not optimize_bits:
        final, diag.eta = optimize_continuous(initial_design(prob, G=G, b=state.z.b), prob, options)
        return final, diag

    candidates = rounding_candidates(state.z.b, config.avg_bits, M)
    if options.rounding == "smallest":
        candidates = candidates[:1]
    best = None
    for _, bits in candidates:
        trial, ee = optimize_continuous(initial_design(prob, G=G, b=bits.astype(float)), prob, options)
        if best is None or ee > best[1]:
            best = (trial, ee)
    final, diag.eta = best
    return final, diag


def fixed_bits(config: SystemConfig) -> int:
    """Integer per-pair resolution used by the fixed-bit schemes."""
    b = int(np.floor(config.avg_bits + 1e-9))
    return int(np.clip(b, config.bit_min, config.bit_max))
