"""Model and market parameters."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .seasonality import SeasonalitySpec, theta_bounds

__all__ = ["VolFactor", "ModelConfig", "FellerResult", "feller_check", "initial_price", "FellerWarning"]


class FellerWarning(UserWarning):
    """A factor violates the Feller condition; its variance may touch zero."""


class FellerResult(NamedTuple):
    strict_positive: bool
    margin: float


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name}: must be finite, got {value}")
    return value


@dataclass(frozen=True)
class VolFactor:
    """One volatility factor.

    ``lam`` is the Samuelson damping rate, ``kappa`` the mean-reversion speed,
    ``sigma`` the vol-of-vol (zero gives deterministic variance), ``rho`` the
    correlation between the futures driver and the variance driver and ``v0``
    the initial variance.
    """

    lam: float
    kappa: float
    sigma: float
    rho: float
    v0: float
    seasonality: SeasonalitySpec

    def __post_init__(self):
        for name in ("lam", "kappa", "sigma", "rho", "v0"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.lam <= 0:
            raise ValueError(f"lambda: damping rate must be > 0, got {self.lam}")
        if self.kappa <= 0:
            raise ValueError(f"kappa: mean-reversion speed must be > 0, got {self.kappa}")
        if self.sigma < 0:
            raise ValueError(f"sigma: vol-of-vol must be >= 0, got {self.sigma}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho: correlation must lie in (-1, 1), got {self.rho}")
        if self.v0 <= 0:
            raise ValueError(f"v0: initial variance must be > 0, got {self.v0}")
        if not isinstance(self.seasonality, SeasonalitySpec):
            raise TypeError("seasonality: expected a SeasonalitySpec")

    @property
    def deterministic(self) -> bool:
        return self.sigma == 0.0

    def with_(self, **changes) -> "VolFactor":
        return replace(self, **changes)


def feller_check(factor: VolFactor) -> FellerResult:
    """Feller condition ``sigma^2 < 2 kappa theta_min`` with its margin."""
    theta_min = theta_bounds(factor.seasonality).theta_min
    margin = 2.0 * factor.kappa * theta_min - factor.sigma**2
    return FellerResult(margin > 0.0, margin)


@dataclass(frozen=True)
class ModelConfig:
    """Volatility factors plus market data.

    ``curve`` lists ``(maturity, price)`` pairs of the initial futures curve.
    A single pair means a curve that is flat in price.
    """

    factors: tuple[VolFactor, ...]
    rate: float = 0.0
    curve: tuple[tuple[float, float], ...] = ((1.0, 100.0),)
    _maturities: np.ndarray = field(init=False, repr=False, compare=False)
    _prices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("factors: at least one volatility factor is required")
        for f in factors:
            if not isinstance(f, VolFactor):
                raise TypeError("factors: expected VolFactor instances")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "rate", _finite("rate", self.rate))
        curve = tuple((_finite("curve", m), _finite("curve", p)) for m, p in self.curve)
        if not curve:
            raise ValueError("curve: at least one (maturity, price) point is required")
        mats = np.array([m for m, _ in curve])
        prices = np.array([p for _, p in curve])
        if np.any(prices <= 0):
            raise ValueError("curve: futures prices must be > 0")
        if np.any(np.diff(mats) <= 0):
            raise ValueError("curve: maturities must be strictly increasing")
        object.__setattr__(self, "curve", curve)
        object.__setattr__(self, "_maturities", mats)
        object.__setattr__(self, "_prices", prices)
        for j, f in enumerate(factors, 1):
            if f.sigma > 0 and not feller_check(f).strict_positive:
                warnings.warn(f"factor {j} violates the Feller condition", FellerWarning, stacklevel=3)

    @classmethod
    def flat(cls, factors: Sequence[VolFactor], price: float = 100.0, rate: float = 0.0):
        return cls(tuple(factors), rate, ((1.0, float(price)),))

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    def with_factors(self, factors) -> "ModelConfig":
        return ModelConfig(tuple(factors), self.rate, self.curve)


def initial_price(config: ModelConfig, maturity: float) -> float:
    """F(0, T_m), linear in price between curve nodes; no extrapolation."""
    mats, prices = config._maturities, config._prices
    if len(mats) == 1:
        return float(prices[0])
    if not mats[0] <= maturity <= mats[-1]:
        raise ValueError(f"maturity {maturity} outside the initial curve [{mats[0]}, {mats[-1]}]")
    return float(np.interp(maturity, mats, prices))
