"""Deterministic variance paths and instantaneous correlation of two futures."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .model import ModelConfig, VolFactor
from .seasonality import breakpoints, theta_transform

__all__ = [
    "CorrCurve",
    "deterministic_variance",
    "loading_integral",
    "instantaneous_correlation",
    "corr_term_structure",
    "DEFAULT_GRID_NODES",
]

DEFAULT_GRID_NODES = 601


@dataclass(frozen=True)
class CorrCurve:
    grid: np.ndarray
    values: np.ndarray
    benchmark: np.ndarray | None = None

    @property
    def difference(self):
        if self.benchmark is None:
            return None
        return self.values - self.benchmark


def deterministic_variance(factor: VolFactor, t):
    """v(t) = exp(-kappa t) (v0 + kappa theta_hat_t(kappa)) for a sigma = 0 factor."""
    if factor.sigma != 0.0:
        raise ValueError("deterministic_variance needs sigma = 0")
    k = factor.kappa
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t: must be >= 0")
    out = np.array([math.exp(-k * s) * (factor.v0 + k * theta_transform(factor.seasonality, s, k)) for s in ts])
    return float(out[0]) if np.ndim(t) == 0 else out


def loading_integral(factor: VolFactor, T: float, rate: float) -> float:
    """int_0^T exp(rate t) v(t) dt along the deterministic variance path.

    Integrating by parts turns this into theta transforms at ``kappa`` and
    ``rate``; at ``rate == kappa`` the closed form degenerates and quadrature
    is used instead.
    """
    if T == 0.0:
        return 0.0
    k, v0, spec = factor.kappa, factor.v0, factor.seasonality
    c = rate - k
    if abs(c) < 1e-6:
        return _loading_integral_quad(factor, T, rate)
    g = math.expm1(c * T) / c
    th_k = theta_transform(spec, T, k)
    th_r = theta_transform(spec, T, rate)
    return v0 * g + k * (g * th_k - (th_r - th_k) / c)


def _loading_integral_quad(factor, T, rate):
    f = factor.with_(sigma=0.0)

    def integrand(s):
        return math.exp(rate * s) * deterministic_variance(f, s)

    edges = [0.0, *breakpoints(factor.seasonality, 0.0, T), T]
    return sum(
        integrate.quad(integrand, x0, x1, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        for x0, x1 in zip(edges[:-1], edges[1:])
    )


def instantaneous_correlation(config: ModelConfig, t, T1, T2, v1, v2):
    """Correlation of dF(t,T1)/F and dF(t,T2)/F in the two-factor model.

    ``t``, ``v1`` and ``v2`` broadcast against each other.
    """
    if config.n_factors != 2:
        raise ValueError("instantaneous_correlation needs a two-factor model")
    if not T1 < T2:
        raise ValueError("need T1 < T2")
    t = np.asarray(t, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if np.any(t > T1):
        raise ValueError("t must not exceed T1")
    if np.any((v1 == 0) & (v2 == 0)):
        raise ValueError("correlation undefined when both variances vanish")
    l1, l2 = config.factors[0].lam, config.factors[1].lam
    num = np.exp(-l1 * (T1 + T2 - 2 * t)) * v1 + np.exp(-l2 * (T1 + T2 - 2 * t)) * v2
    d1 = np.exp(-2 * l1 * (T1 - t)) * v1 + np.exp(-2 * l2 * (T1 - t)) * v2
    d2 = np.exp(-2 * l1 * (T2 - t)) * v1 + np.exp(-2 * l2 * (T2 - t)) * v2
    rho = num / (np.sqrt(d1) * np.sqrt(d2))
    return float(rho) if rho.ndim == 0 else rho


def corr_term_structure(config: ModelConfig, T1, T2, grid=None) -> CorrCurve:
    """Instantaneous correlation over ``grid`` for deterministic variances.

    The benchmark curve switches off seasonality (``b = 0`` on every factor).
    """
    if any(f.sigma != 0.0 for f in config.factors):
        raise ValueError("corr_term_structure needs sigma = 0 on every factor")
    if grid is None:
        grid = np.linspace(0.0, T1, DEFAULT_GRID_NODES)
    grid = np.asarray(grid, dtype=float)

    def curve(cfg):
        v1 = deterministic_variance(cfg.factors[0], grid)
        v2 = deterministic_variance(cfg.factors[1], grid)
        return instantaneous_correlation(cfg, grid, T1, T2, v1, v2)

    flat = config.with_factors(
        [f.with_(seasonality=replace(f.seasonality, b=0.0)) for f in config.factors]
    )
    return CorrCurve(grid, curve(config), curve(flat))
