"""Monte Carlo simulation of the futures curve and its variance factors.

Variance factors use full-truncation Euler (the positive part of v enters
both drift and diffusion) with theta taken at the left end of each step.
Log-futures use a log-Euler step driven by the same truncated variances, so
every simulated F(., T_m) is a martingale up to sampling noise.

Paths are produced in fixed-size blocks, each with its own PCG64 stream
spawned from one ``SeedSequence``.  Block results are merged in block order,
so estimates do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, VolFactor, initial_price
from .seasonality import theta_bounds, theta_eval
from .spread import CsoSpec
from .vanilla import VanillaSpec

__all__ = [
    "McSettings",
    "McEstimate",
    "simulate_terminal",
    "estimate",
    "mc_price_vanilla",
    "mc_price_cso",
    "comparison_test",
    "min_variance",
]

BLOCK_SIZE = 50_000
COMPARISON_SLACK = 1e-12


@dataclass(frozen=True)
class McSettings:
    paths: int = 100_000
    steps_per_year: int = 400
    seed: int = 12345
    antithetic: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError(f"paths: need at least 2, got {self.paths}")
        if self.steps_per_year < 50:
            raise ValueError(f"steps_per_year: need at least 50, got {self.steps_per_year}")
        if self.antithetic and self.paths % 2:
            raise ValueError("paths: must be even with antithetic variates")
        if self.threads < 1:
            raise ValueError("threads: must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    paths_used: int

    def contains(self, x, k=3.0):
        """True when ``x`` lies within ``k`` standard errors of the estimate."""
        return abs(x - self.value) <= k * self.stderr


def _steps(T, steps_per_year):
    n = max(1, math.ceil(T * steps_per_year - 1e-9))
    return n, T / n


def _blocks(settings):
    sizes = []
    left = settings.paths
    while left > 0:
        size = min(BLOCK_SIZE, left)
        if settings.antithetic and size % 2:
            size += 1
        sizes.append(size)
        left -= size
    seeds = np.random.SeedSequence(settings.seed).spawn(len(sizes))
    return list(zip(sizes, seeds))


def _normals(rng, shape, antithetic):
    """Standard normals whose antithetic partners sit in adjacent columns."""
    if not antithetic:
        return rng.standard_normal(shape)
    half = rng.standard_normal(shape[:-1] + (shape[-1] // 2,))
    out = np.empty(shape)
    out[..., 0::2] = half
    out[..., 1::2] = -half
    return out


def _simulate_block(config, T, maturities, n_steps, dt, size, seed, antithetic):
    rng = np.random.Generator(np.random.PCG64(seed))
    factors = config.factors
    n = len(factors)
    lam = np.array([f.lam for f in factors])[:, None]
    kappa = np.array([f.kappa for f in factors])[:, None]
    sigma = np.array([f.sigma for f in factors])[:, None]
    rho = np.array([f.rho for f in factors])[:, None]
    rho_bar = np.sqrt(1.0 - rho**2)
    mats = np.asarray(maturities, dtype=float)

    v = np.repeat(np.array([f.v0 for f in factors])[:, None], size, axis=1)
    log_f = np.zeros((mats.size, size))
    sqdt = math.sqrt(dt)
    for step in range(n_steps):
        t = step * dt
        theta = np.array([[theta_eval(f.seasonality, t)] for f in factors])
        # loadings e^{-lam (T_m - t)}, shape (m, n)
        load = np.exp(-lam.T * (mats[:, None] - t))
        z = _normals(rng, (2 * n, size), antithetic)
        dw = z[:n] * sqdt
        dz = (rho * z[:n] + rho_bar * z[n:]) * sqdt
        vp = np.maximum(v, 0.0)
        sv = np.sqrt(vp)
        log_f += -0.5 * (load**2 @ vp) * dt + load @ (sv * dw)
        v = v + kappa * (theta - vp) * dt + sigma * sv * dz
    f0 = np.array([initial_price(config, m) for m in mats])[:, None]
    return (f0 * np.exp(log_f)).T


def simulate_terminal(config: ModelConfig, T: float, maturities, settings: McSettings) -> np.ndarray:
    """Joint samples of F(T, T_m), shape ``(paths, len(maturities))``.

    With antithetic variates, rows ``2i`` and ``2i + 1`` are partners.
    """
    maturities = list(maturities)
    if not 0 < T <= min(maturities) + 1e-14:
        raise ValueError(f"need 0 < T <= min(maturities); got T={T}")
    n_steps, dt = _steps(T, settings.steps_per_year)
    jobs = _blocks(settings)

    def run(job):
        size, seed = job
        return _simulate_block(config, T, maturities, n_steps, dt, size, seed, settings.antithetic)

    if settings.threads > 1:
        with ThreadPoolExecutor(settings.threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    return np.concatenate(parts)[: settings.paths]


def estimate(samples, antithetic, scale=1.0) -> McEstimate:
    """Mean and standard error of ``scale * samples``; antithetic pairs are averaged first."""
    x = np.asarray(samples, dtype=float)
    if antithetic:
        x = x.reshape(-1, 2).mean(axis=1)
    m = x.size
    return McEstimate(scale * float(x.mean()), scale * float(x.std(ddof=1)) / math.sqrt(m), samples.size)


def mc_price_vanilla(config: ModelConfig, spec: VanillaSpec, settings: McSettings) -> McEstimate:
    F = simulate_terminal(config, spec.expiry, [spec.futures_maturity], settings)[:, 0]
    payoff = np.maximum(F - spec.strike, 0.0) if spec.call else np.maximum(spec.strike - F, 0.0)
    return estimate(payoff, settings.antithetic, math.exp(-config.rate * spec.expiry))


def mc_price_cso(config: ModelConfig, spec: CsoSpec, settings: McSettings, call=True) -> McEstimate:
    F = simulate_terminal(config, spec.expiry, [spec.T1, spec.T2], settings)
    spread = F[:, 0] - F[:, 1] - spec.strike
    payoff = np.maximum(spread, 0.0) if call else np.maximum(-spread, 0.0)
    return estimate(payoff, settings.antithetic, math.exp(-config.rate * spec.expiry))


def _euler_step(v, kappa, sigma, theta, dt, dz):
    vp = np.maximum(v, 0.0)
    return v + kappa * (theta - vp) * dt + sigma * np.sqrt(vp) * dz


def _implicit_sqrt_step(v, kappa, sigma, theta, dt, dz):
    # drift-implicit step on y = sqrt(v); the root is positive whenever 4 kappa theta > sigma^2
    x = np.sqrt(v) + 0.5 * sigma * dz
    c = 1.0 + 0.5 * kappa * dt
    y = (x + np.sqrt(x * x + c * (4.0 * kappa * theta - sigma**2) * dt / 2.0)) / (2.0 * c)
    return y * y


def _variance_paths(factor, v0s, thetas, horizon, settings, visit, scheme="euler"):
    """Drive several copies of one factor with shared noise; ``visit`` sees every step."""
    step_fn = {"euler": _euler_step, "implicit": _implicit_sqrt_step}[scheme]
    n_steps, dt = _steps(horizon, settings.steps_per_year)
    sqdt = math.sqrt(dt)
    for size, seed in _blocks(settings):
        rng = np.random.Generator(np.random.PCG64(seed))
        vs = [np.full(size, v0) for v0 in v0s]
        for step in range(n_steps):
            t = step * dt
            dz = _normals(rng, (size,), settings.antithetic) * sqdt
            vs = [step_fn(v, factor.kappa, factor.sigma, theta(t), dt, dz) for v, theta in zip(vs, thetas)]
            visit(vs)


def comparison_test(factor: VolFactor, theta_min: float, settings: McSettings, horizon=1.0, v0_tilde=None):
    """Fraction of path-steps where the constant-level process exceeds the seasonal one.

    Both processes share their Brownian increments; the comparison one uses
    ``theta_min`` as a constant level and starts from ``v0_tilde`` (default
    the factor's own ``v0``).
    """
    v0_tilde = factor.v0 if v0_tilde is None else v0_tilde
    if v0_tilde > factor.v0:
        raise ValueError("v0_tilde must not exceed the factor's v0")
    counts = [0, 0]

    def visit(vs):
        v, v_tilde = vs
        counts[0] += int(np.count_nonzero(v_tilde > v + COMPARISON_SLACK))
        counts[1] += v.size

    thetas = [lambda t: theta_eval(factor.seasonality, t), lambda t: theta_min]
    _variance_paths(factor, [factor.v0, v0_tilde], thetas, horizon, settings, visit)
    return counts[0] / counts[1]


def min_variance(factor: VolFactor, settings: McSettings, horizon=1.0, scheme="euler") -> float:
    """Smallest simulated variance over all paths and steps.

    ``scheme="euler"`` reports the raw full-truncation Euler state, which
    can dip below zero from discretisation alone.  ``scheme="implicit"``
    uses a drift-implicit step on the square root of v, which stays positive
    when ``sigma^2 < 4 kappa theta_min``.
    """
    if scheme == "implicit":
        theta_min = theta_bounds(factor.seasonality).theta_min
        if factor.sigma**2 >= 4.0 * factor.kappa * theta_min:
            raise ValueError("implicit scheme needs sigma^2 < 4 kappa theta_min")
    low = [factor.v0]

    def visit(vs):
        low[0] = min(low[0], float(vs[0].min()))

    thetas = [lambda t: theta_eval(factor.seasonality, t)]
    _variance_paths(factor, [factor.v0], thetas, horizon, settings, visit, scheme)
    return low[0]
