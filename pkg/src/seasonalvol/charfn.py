"""Joint characteristic function of two futures log-returns.

Each stochastic factor contributes

    exp(-i rho/sigma f1(u,0) (v0 + kappa theta_hat_T(lam))) exp(A(0,T) v0 + B(0,T))

where A solves a Riccati equation backwards from ``A(T,T) = i rho/sigma f1(u,T)``
and ``B(0,T) = int_0^T kappa theta(t) A(t,T) dt``.  A is integrated
numerically (Dormand-Prince 8(5,3) on the complex plane, vectorised over all
requested arguments) together with B, restarting the integrator at every
kink of theta.

Factors with ``sigma == 0`` have deterministic variance and contribute a
Gaussian factor instead.

All functions broadcast over array-valued ``u1``/``u2``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .correlation import loading_integral
from .model import ModelConfig, VolFactor, initial_price
from .seasonality import SeasonalitySpec, breakpoints, theta_eval, theta_transform

__all__ = [
    "CharFnBlowUp",
    "FactorOdeSolution",
    "f1",
    "f2",
    "q_coeff",
    "solve_factor_odes",
    "joint_cf",
    "single_cf",
    "log_price_cf",
    "deterministic_cf",
    "gaussian_covariance",
    "cached_theta_transform",
]

ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


class CharFnBlowUp(ArithmeticError):
    """The Riccati equation exploded; ``u`` lies outside the analyticity strip."""

    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail


@functools.lru_cache(maxsize=4096)
def cached_theta_transform(spec: SeasonalitySpec, T: float, lam: float) -> float:
    return theta_transform(spec, T, lam)


def f1(factor: VolFactor, u1, u2, t, T1, T2):
    lam = factor.lam
    return u1 * np.exp(-lam * (T1 - t)) + u2 * np.exp(-lam * (T2 - t))


def f2(factor: VolFactor, u1, u2, t, T1, T2):
    lam = factor.lam
    return u1 * np.exp(-2 * lam * (T1 - t)) + u2 * np.exp(-2 * lam * (T2 - t))


def q_coeff(factor: VolFactor, u1, u2, t, T1, T2):
    if factor.sigma == 0.0:
        raise ValueError("q_coeff is undefined for sigma = 0; use the Gaussian path")
    rho, kappa, lam, sigma = factor.rho, factor.kappa, factor.lam, factor.sigma
    g1 = f1(factor, u1, u2, t, T1, T2)
    g2 = f2(factor, u1, u2, t, T1, T2)
    return 1j * rho * (kappa - lam) / sigma * g1 - 0.5 * (1 - rho**2) * g1**2 - 0.5j * g2


@dataclass
class FactorOdeSolution:
    grid: np.ndarray  # integrator nodes, from T down to 0
    A: np.ndarray  # shape (n_args, len(grid))
    A_at_0: np.ndarray
    B_at_0: np.ndarray


def solve_factor_odes(factor: VolFactor, u1, u2, T, T1, T2) -> FactorOdeSolution:
    """Integrate A and B backwards from T to 0.

    B is carried as an extra state, ``dB/dt = -kappa theta(t) A``; the
    integrator restarts at every kink or jump of theta so no step straddles
    one.
    """
    if factor.sigma == 0.0:
        raise ValueError("solve_factor_odes needs sigma > 0")
    u1 = np.atleast_1d(np.asarray(u1, dtype=complex)).ravel()
    u2 = np.atleast_1d(np.asarray(u2, dtype=complex)).ravel()
    u1, u2 = np.broadcast_arrays(u1, u2)
    n = u1.size
    kappa, sigma, rho, lam = factor.kappa, factor.sigma, factor.rho, factor.lam
    spec = factor.seasonality
    half_s2 = 0.5 * sigma**2
    c1 = 1j * rho * (kappa - lam) / sigma
    g1_base = u1 * math.exp(-lam * T1) + u2 * math.exp(-lam * T2)
    g2_base = u1 * math.exp(-2 * lam * T1) + u2 * math.exp(-2 * lam * T2)
    s1 = 0.5 * (1 - rho**2)
    out = np.empty(2 * n, dtype=complex)

    def rhs(t, y):
        A = y[:n]
        e = math.exp(lam * t)
        g1 = g1_base * e
        g2 = g2_base * (e * e)
        q = c1 * g1 - s1 * g1 * g1 - 0.5j * g2
        out[:n] = kappa * A - half_s2 * A * A - q
        out[n:] = -kappa * theta_eval(spec, t) * A
        return out.copy()

    A_T = 1j * rho / sigma * g1_base * math.exp(lam * T)
    y = np.concatenate([A_T, np.zeros(n, dtype=complex)])
    grid, path = [T], [A_T]
    edges = [T, *reversed(breakpoints(spec, 0.0, T)), 0.0]
    for t_hi, t_lo in zip(edges[:-1], edges[1:]):
        if t_hi <= t_lo:
            continue
        sol = solve_ivp(rhs, (t_hi, t_lo), y, method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            t_fail = float(sol.t[-1]) if sol.t.size else t_hi
            raise CharFnBlowUp(f"Riccati integration failed at t={t_fail:.6g}: {sol.message}", t_fail)
        y = sol.y[:, -1]
        grid.extend(sol.t[1:])
        path.extend(sol.y[:n, 1:].T)
    return FactorOdeSolution(np.array(grid), np.array(path).T, y[:n].copy(), y[n:].copy())


def gaussian_covariance(factor: VolFactor, T, T1, T2):
    """Covariance of the two log-returns contributed by a sigma = 0 factor."""
    lam = factor.lam
    I = loading_integral(factor, T, 2 * lam)
    e1, e2 = math.exp(-lam * T1), math.exp(-lam * T2)
    return np.array([[e1 * e1 * I, e1 * e2 * I], [e1 * e2 * I, e2 * e2 * I]])


def _gaussian_log_cf(factor, u1, u2, T, T1, T2):
    C = gaussian_covariance(factor, T, T1, T2)
    drift = -0.5j * (u1 * C[0, 0] + u2 * C[1, 1])
    quad = u1 * u1 * C[0, 0] + 2 * u1 * u2 * C[0, 1] + u2 * u2 * C[1, 1]
    return drift - 0.5 * quad


def _stochastic_log_cf(factor, u1, u2, T, T1, T2):
    sol = solve_factor_odes(factor, u1, u2, T, T1, T2)
    th = cached_theta_transform(factor.seasonality, float(T), factor.lam)
    g1_0 = f1(factor, u1, u2, 0.0, T1, T2)
    pre = -1j * factor.rho / factor.sigma * g1_0 * (factor.v0 + factor.kappa * th)
    return pre + sol.A_at_0 * factor.v0 + sol.B_at_0


def _check_times(T, T1, T2):
    if T < 0 or T > min(T1, T2) + 1e-14:
        raise ValueError(f"need 0 <= T <= min(T1, T2); got T={T}, T1={T1}, T2={T2}")


def _prepare(u1, u2):
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    shape = np.broadcast_shapes(u1.shape, u2.shape)
    a, b = np.broadcast_arrays(u1, u2)
    return a.ravel(), b.ravel(), shape


def _finish(values, shape):
    values = values.reshape(shape)
    return complex(values) if values.ndim == 0 else values


def joint_log_cf(config: ModelConfig, u1, u2, T, T1, T2):
    """Logarithm of ``joint_cf`` (sum of the per-factor exponents)."""
    _check_times(T, T1, T2)
    a, b, shape = _prepare(u1, u2)
    total = np.zeros(a.shape, dtype=complex)
    if T > 0:
        for factor in config.factors:
            if factor.deterministic:
                total += _gaussian_log_cf(factor, a, b, T, T1, T2)
            else:
                total += _stochastic_log_cf(factor, a, b, T, T1, T2)
    # the zero argument is exactly 1 regardless of integration error
    total[(a == 0) & (b == 0)] = 0.0
    return total.reshape(shape)


def joint_cf(config: ModelConfig, u1, u2, T, T1, T2):
    """E[exp(i u1 X1(T) + i u2 X2(T))] for log-returns X_k = ln F(T,T_k)/F(0,T_k)."""
    log_cf = np.asarray(joint_log_cf(config, u1, u2, T, T1, T2))
    return _finish(np.exp(log_cf).ravel(), log_cf.shape)


def single_cf(config: ModelConfig, u, T, T1):
    return joint_cf(config, u, 0.0, T, T1, T1)


def log_price_cf(config: ModelConfig, u1, u2, T, T1, T2):
    """CF of (ln F(T,T1), ln F(T,T2)): the return CF times the initial-curve phase."""
    log_cf = np.asarray(joint_log_cf(config, u1, u2, T, T1, T2))
    a, b, shape = _prepare(u1, u2)
    phase = 1j * (a * math.log(initial_price(config, T1)) + b * math.log(initial_price(config, T2)))
    return _finish(np.exp(log_cf.ravel() + phase), shape)


def deterministic_cf(config: ModelConfig, u1, u2, T, T1, T2):
    """Bivariate-Gaussian CF of the log-returns when every factor has sigma = 0."""
    if any(not f.deterministic for f in config.factors):
        raise ValueError("deterministic_cf needs sigma = 0 on every factor")
    _check_times(T, T1, T2)
    a, b, shape = _prepare(u1, u2)
    total = np.zeros(a.shape, dtype=complex)
    if T > 0:
        for factor in config.factors:
            total += _gaussian_log_cf(factor, a, b, T, T1, T2)
    total[(a == 0) & (b == 0)] = 0.0
    return _finish(np.exp(total), shape)
