"""
Linearized 1D membrane model on a periodic grid:

    ∂t u = μ ∂xx u − (K/ε) ∂xx Y,    ∂t Y = −u

discretized with the elastic term explicit, fully implicit, or explicit
with the Δt·K/ε augmented viscosity. Closed-form Von Neumann
amplification, marching, and an empirical stability classifier.

Y is stored as the perturbation from the identity map x; the second
difference of x vanishes so only the perturbation enters the scheme.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigurationError, SolverError
from .models import (
    AmplificationResponse,
    ClassifyResponse,
    Model1DParams,
    Scheme1D,
    StabilityVerdict,
)

logger = logging.getLogger(__name__)

AMPLITUDE_LIMIT = 1e6
ENERGY_LIMIT = 10.0
SEED_AMPLITUDE = 1e-3


@dataclass
class State1D:
    u: np.ndarray
    y: np.ndarray  # perturbation of Y from x

    def copy(self) -> "State1D":
        return State1D(self.u.copy(), self.y.copy())


@dataclass
class AmplificationPair:
    alpha_theta: float
    beta_theta: float
    a_matrix: np.ndarray
    b_matrix: np.ndarray

    @property
    def g_matrix(self) -> np.ndarray:
        """A_θ⁻¹B_θ."""
        return np.linalg.solve(self.a_matrix, self.b_matrix)

    def eigenvalues(self) -> Tuple[complex, complex]:
        """Roots of α_θλ² − λ(1 + α_θ − Δtβ_θ) + 1 = 0."""
        dt = self.a_matrix[1, 0]
        a = self.alpha_theta
        b = -(1.0 + a - dt * self.beta_theta)
        disc = cmath.sqrt(b * b - 4.0 * a)
        return (-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)

    def to_response(self) -> AmplificationResponse:
        lams = self.eigenvalues()
        return AmplificationResponse(
            alpha_theta=self.alpha_theta,
            beta_theta=self.beta_theta,
            a_matrix=self.a_matrix.tolist(),
            b_matrix=self.b_matrix.tolist(),
            eigenvalues=[(lam.real, lam.imag) for lam in lams],
            spectral_radius=max(abs(lam) for lam in lams),
        )


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def explicit_dt_bound(params: Model1DParams) -> float:
    """Δt < (με + max(με, √(Kε)Δx))/K."""
    me = params.mu * params.eps
    return (me + max(me, math.sqrt(params.K * params.eps) * params.dx)) / params.K


def exact_explicit_threshold(params: Model1DParams) -> float:
    """Sharp 1D threshold of the explicit scheme, reached by the θ = π mode."""
    me = params.mu * params.eps
    return (me + math.sqrt(me * me + params.K * params.eps * params.dx ** 2)) / params.K


def capillary_dt_estimate(rho: float, dx: float, K: float) -> float:
    """√(ρΔx³/K), the usual capillary time-step restriction."""
    return math.sqrt(rho * dx ** 3 / K)


def amplification(params: Model1DParams, theta: float,
                  scheme: Scheme1D = Scheme1D.SemiImplicit) -> AmplificationPair:
    """
    A_θ, B_θ with A_θ(ûⁿ⁺¹, Ŷⁿ⁺¹) = B_θ(ûⁿ, Ŷⁿ). The implicit scheme
    reduces to the semi-implicit one for this model.
    """
    scheme = Scheme1D(scheme)
    if not 0.0 <= theta < 2.0 * math.pi:
        raise ConfigurationError(f"theta must lie in [0, 2π), got {theta}")
    s2 = math.sin(theta / 2.0) ** 2
    r = params.dt / params.dx ** 2
    viscosity = params.mu
    if scheme != Scheme1D.Explicit:
        viscosity += params.dt * params.K / params.eps
    alpha = 1.0 + 4.0 * r * viscosity * s2
    beta = 4.0 * r * (params.K / params.eps) * s2
    a = np.array([[alpha, 0.0], [params.dt, 1.0]])
    b = np.array([[1.0, beta], [0.0, 1.0]])
    return AmplificationPair(alpha, beta, a, b)


def spectral_radius_grid(dt, dx, mu, K, eps, thetas: Sequence[float],
                         scheme: Scheme1D = Scheme1D.SemiImplicit) -> np.ndarray:
    """
    Spectral radius for parameter arrays (length N) × θ values (length T),
    shape (N, T). The characteristic polynomial α λ² − cλ + 1 is evaluated
    in the cancellation-free form

        c = 2 + 4 r s (μ + a − Δt K/ε),   c² − 4α = 16 r s (r s m² − Δt K/ε)

    with s = sin²(θ/2), r = Δt/Δx², a the augmented viscosity and
    m = μ + a − Δt K/ε.
    """
    scheme = Scheme1D(scheme)
    dt, dx, mu, K, eps = (np.asarray(v, dtype=float).reshape(-1, 1) for v in (dt, dx, mu, K, eps))
    s = np.sin(np.asarray(thetas, dtype=float).reshape(1, -1) / 2.0) ** 2
    k = K / eps
    aug = dt * k if scheme != Scheme1D.Explicit else np.zeros_like(dt)
    r = dt / dx ** 2
    m = mu + aug - dt * k
    alpha = 1.0 + 4.0 * r * (mu + aug) * s
    c = 2.0 + 4.0 * r * s * m
    disc = 16.0 * r * s * (r * s * m * m - dt * k)
    real = (np.abs(c) + np.sqrt(np.maximum(disc, 0.0))) / (2.0 * alpha)
    return np.where(disc < 0.0, 1.0 / np.sqrt(alpha), real)


def spectral_radius(params: Model1DParams, theta: float,
                    scheme: Scheme1D = Scheme1D.SemiImplicit) -> float:
    if not 0.0 <= theta < 2.0 * math.pi:
        raise ConfigurationError(f"theta must lie in [0, 2π), got {theta}")
    return float(spectral_radius_grid(params.dt, params.dx, params.mu, params.K, params.eps,
                                      [theta], scheme)[0, 0])


def spectral_radius_semi_implicit(params: Model1DParams, theta: float) -> float:
    return spectral_radius(params, theta, Scheme1D.SemiImplicit)


def sweep_spectral_radius(params_list: Iterable[Model1DParams],
                          thetas: Sequence[float]) -> pd.DataFrame:
    """Semi-implicit spectral radius over parameter tuples × θ grid."""
    params_list = list(params_list)
    columns = ["theta", "dt", "dx", "mu", "K", "eps"]
    values = {name: np.array([getattr(p, name) for p in params_list], dtype=float)
              for name in columns[1:]}
    thetas = np.asarray(thetas, dtype=float)
    radius = spectral_radius_grid(values["dt"], values["dx"], values["mu"], values["K"],
                                  values["eps"], thetas)
    frame = pd.DataFrame({"theta": np.tile(thetas, len(params_list))})
    for name in columns[1:]:
        frame[name] = np.repeat(values[name], thetas.size)
    frame["rho_semi_implicit"] = radius.ravel()
    return frame


# ---------------------------------------------------------------------------
# Marching
# ---------------------------------------------------------------------------

def second_difference(values: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(values, -1) - 2.0 * values + np.roll(values, 1)) / dx ** 2


def _solve_viscous(rhs: np.ndarray, coef: float, dx: float) -> np.ndarray:
    """(I − coef·D²) x = rhs with a circulant solve."""
    n = rhs.size
    r = coef / dx ** 2
    column = np.zeros(n)
    column[0] = 1.0 + 2.0 * r
    column[1] = -r
    column[-1] = -r
    try:
        return sla.solve_circulant(column, rhs, singular="raise")
    except np.linalg.LinAlgError as exc:
        logger.error("periodic viscous system is singular: %s", exc)
        raise SolverError("solve_circulant", 0, math.nan, -1) from exc


def _laplacian_matrix(n: int, dx: float) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    lap[0, n - 1] = 1.0
    lap[n - 1, 0] = 1.0
    return (lap / dx ** 2).tocsr()


def _implicit_step(state: State1D, params: Model1DParams) -> State1D:
    """Coupled system for (uⁿ⁺¹, Yⁿ⁺¹) with the elastic term at n+1."""
    n = state.u.size
    dt, k = params.dt, params.K / params.eps
    lap = _laplacian_matrix(n, params.dx)
    eye = sp.identity(n, format="csr")
    system = sp.bmat([[eye - dt * params.mu * lap, dt * k * lap],
                      [dt * eye, eye]], format="csc")
    x = spla.spsolve(system, np.concatenate([state.u, state.y]))
    if not np.all(np.isfinite(x)):
        raise SolverError("spsolve", 1, math.nan, -1)
    return State1D(x[:n], x[n:])


def step_1d(state: State1D, params: Model1DParams, scheme: Scheme1D,
            augmentation: Optional[float] = None) -> State1D:
    """
    One step. Explicit and semi-implicit solve the periodic viscous system
    for uⁿ⁺¹ then set Yⁿ⁺¹ = Yⁿ − Δt uⁿ⁺¹. `augmentation` overrides the
    Δt·K/ε added viscosity of the semi-implicit scheme.
    """
    scheme = Scheme1D(scheme)
    if scheme == Scheme1D.Implicit:
        return _implicit_step(state, params)
    dt = params.dt
    extra = 0.0
    if scheme == Scheme1D.SemiImplicit:
        extra = dt * params.K / params.eps if augmentation is None else augmentation
    rhs = state.u - dt * (params.K / params.eps) * second_difference(state.y, params.dx)
    u = _solve_viscous(rhs, dt * (params.mu + extra), params.dx)
    return State1D(u, state.y - dt * u)


def grid_1d(params: Model1DParams) -> np.ndarray:
    return np.arange(params.n_cells) * params.dx


def initial_state(params: Model1DParams, seed: Optional[int] = 0) -> State1D:
    """u = sin(2πx/L), Y = x, plus a small seeded perturbation exciting every mode."""
    x = grid_1d(params)
    length = params.n_cells * params.dx
    u = np.sin(2.0 * math.pi * x / length)
    if seed is not None:
        u = u + SEED_AMPLITUDE * np.random.default_rng(seed).standard_normal(u.size)
    return State1D(u, np.zeros_like(u))


def energy(state: State1D, params: Model1DParams) -> float:
    """½Σu²Δx + ½(K/ε)Σ(ΔY/Δx)²Δx."""
    dy = (np.roll(state.y, -1) - state.y) / params.dx
    return float(0.5 * np.sum(state.u ** 2) * params.dx
                 + 0.5 * params.K / params.eps * np.sum(dy ** 2) * params.dx)


def march(state: State1D, params: Model1DParams, scheme: Scheme1D, n_steps: int) -> State1D:
    for _ in range(n_steps):
        state = step_1d(state, params, scheme)
    return state


def measured_amplification(params: Model1DParams, theta: float,
                           scheme: Scheme1D = Scheme1D.SemiImplicit,
                           n_steps: int = 1) -> Tuple[np.ndarray, float]:
    """
    Amplification matrix measured by marching the cos(kx) states (1, 0)
    and (0, 1) for `n_steps` steps, i.e. Gⁿ. θ is snapped to the nearest
    grid wavenumber; returns (Gⁿ, θ used).
    """
    n = params.n_cells
    k = int(round(theta * n / (2.0 * math.pi))) % n
    used = 2.0 * math.pi * k / n
    mode = np.cos(used * np.arange(n))
    norm = float(mode @ mode)
    g = np.zeros((2, 2))
    for col, start in enumerate((State1D(mode.copy(), np.zeros(n)), State1D(np.zeros(n), mode.copy()))):
        out = march(start, params, scheme, n_steps)
        g[0, col] = out.u @ mode / norm
        g[1, col] = out.y @ mode / norm
    return g, used


def measured_spectral_radius(params: Model1DParams, theta: float,
                             scheme: Scheme1D = Scheme1D.SemiImplicit,
                             n_steps: int = 100) -> Tuple[float, float]:
    """Per-step growth ρ(Gⁿ)^(1/n) of a marched single mode; returns (ρ, θ used)."""
    g, used = measured_amplification(params, theta, scheme, n_steps)
    radius = float(np.abs(np.linalg.eigvals(g)).max())
    return radius ** (1.0 / n_steps), used


def march_report(params: Model1DParams, scheme: Scheme1D, horizon_steps: int = 500,
                 seed: Optional[int] = 0) -> ClassifyResponse:
    """Empirical classification with the amplitude and energy ratios it used."""
    if horizon_steps < 500:
        raise ConfigurationError("horizon_steps must be at least 500")
    scheme = Scheme1D(scheme)
    state = initial_state(params, seed)
    amp0 = float(np.abs(state.u).max())
    e0 = energy(state, params)
    peak = amp0
    verdict = StabilityVerdict.Stable
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(horizon_steps):
            state = step_1d(state, params, scheme)
            amp = float(np.abs(state.u).max())
            if not math.isfinite(amp) or amp > AMPLITUDE_LIMIT * amp0:
                verdict = StabilityVerdict.Unstable
                peak = amp if math.isfinite(amp) else math.inf
                logger.debug("%s diverged at step %d (dt=%.6g)", scheme.value, n, params.dt)
                break
            peak = max(peak, amp)
        e_end = energy(state, params)
    energy_ratio = e_end / e0 if math.isfinite(e_end) else math.inf
    if energy_ratio > ENERGY_LIMIT:
        verdict = StabilityVerdict.Unstable
    return ClassifyResponse(
        verdict=verdict,
        explicit_dt_bound=explicit_dt_bound(params),
        max_amplitude_ratio=peak / amp0,
        energy_ratio=energy_ratio,
    )


def classify_stability(params: Model1DParams, scheme: Scheme1D,
                       horizon_steps: int = 500, seed: Optional[int] = 0) -> StabilityVerdict:
    return march_report(params, scheme, horizon_steps, seed).verdict


def empirical_dt_threshold(params: Model1DParams, scheme: Scheme1D = Scheme1D.Explicit,
                           low: Optional[float] = None, high: Optional[float] = None,
                           bisections: int = 20, horizon_steps: int = 500) -> float:
    """
    Largest stable Δt by bisection of classify_stability. Defaults bracket
    the explicit bound by [0.25, 4]×.
    """
    bound = explicit_dt_bound(params)
    low = 0.25 * bound if low is None else low
    high = 4.0 * bound if high is None else high
    if classify_stability(params.with_dt(low), scheme, horizon_steps) != StabilityVerdict.Stable:
        raise ConfigurationError(f"lower bracket dt={low:.6g} is already unstable")
    if classify_stability(params.with_dt(high), scheme, horizon_steps) == StabilityVerdict.Stable:
        logger.info("%s stable at the upper bracket dt=%.6g", Scheme1D(scheme).value, high)
        return high
    for _ in range(bisections):
        mid = 0.5 * (low + high)
        if classify_stability(params.with_dt(mid), scheme, horizon_steps) == StabilityVerdict.Stable:
            low = mid
        else:
            high = mid
    return low


def stability_table(params_list: Iterable[Model1DParams], horizon_steps: int = 500) -> pd.DataFrame:
    """Explicit bound, sharp threshold and measured limit per parameter tuple."""
    rows = []
    for params in params_list:
        measured = empirical_dt_threshold(params, Scheme1D.Explicit, horizon_steps=horizon_steps,
                                          bisections=12)
        bound = explicit_dt_bound(params)
        rows.append({
            "scheme": Scheme1D.Explicit.value, "dx": params.dx, "mu": params.mu,
            "K": params.K, "eps": params.eps, "dt_bound": bound,
            "dt_exact": exact_explicit_threshold(params), "dt_measured": measured,
            "ratio": measured / bound,
        })
    return pd.DataFrame(rows)
