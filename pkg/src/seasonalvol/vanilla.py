"""European options on futures: Fourier inversion pricer and Black-76 quoting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .charfn import single_cf
from .model import ModelConfig, initial_price
from .quadrature import integrate_semi_infinite

__all__ = [
    "VanillaSpec",
    "PriceResult",
    "NoSolution",
    "price_vanilla",
    "black76_price",
    "implied_vol",
    "model_implied_vol",
]

VOL_BRACKET = (1e-6, 5.0)


class NoSolution(ValueError):
    """No implied parameter reproduces the target price."""


@dataclass(frozen=True)
class VanillaSpec:
    strike: float
    expiry: float
    futures_maturity: float
    call: bool = True

    def __post_init__(self):
        if not self.strike > 0:
            raise ValueError(f"strike: must be > 0, got {self.strike}")
        if not 0 < self.expiry <= self.futures_maturity:
            raise ValueError(
                f"expiry: need 0 < T <= T_m, got T={self.expiry}, T_m={self.futures_maturity}"
            )


@dataclass
class PriceResult:
    price: float
    error: float = 0.0
    evaluations: int = 0
    upper_limit: float = float("nan")
    details: dict | None = None

    def __float__(self):
        return float(self.price)


def _probabilities(config, spec):
    T, Tm = spec.expiry, spec.futures_maturity
    log_k = math.log(spec.strike / initial_price(config, Tm))

    # P1 and P2 integrands share one batched CF call and one mesh
    def integrand(u):
        n = u.size
        cf = single_cf(config, np.concatenate([u - 1j, u.astype(complex)]), T, Tm)
        phase = np.exp(-1j * u * log_k) / (1j * u)
        return np.stack([(phase * cf[:n]).real, (phase * cf[n:]).real])

    res = integrate_semi_infinite(integrand, width=2.0 / math.sqrt(T))
    p1, p2 = 0.5 + res.value / math.pi
    return p1, p2, res.error / math.pi, res.evaluations, res.upper


def price_vanilla(config: ModelConfig, spec: VanillaSpec, method: str = "parity") -> PriceResult:
    """European call or put on F(., T_m) by two-probability Fourier inversion.

    Puts come from put-call parity unless ``method="inversion"``, in which case
    the put payoff is inverted directly from the same probabilities.
    """
    F = initial_price(config, spec.futures_maturity)
    K = spec.strike
    df = math.exp(-config.rate * spec.expiry)
    p1, p2, err, n, upper = _probabilities(config, spec)
    call = df * (F * p1 - K * p2)
    err *= df * (F + K)
    if spec.call:
        price = call
    elif method == "inversion":
        price = df * (K * (1.0 - p2) - F * (1.0 - p1))
    else:
        price = call - df * (F - K)
    return PriceResult(price, err, n, upper, {"P1": p1, "P2": p2, "forward": F})


def black76_price(F, K, T, vol, r=0.0, call=True):
    """Black-76 price of a European option on a futures contract."""
    df = math.exp(-r * T)
    if vol <= 0 or T <= 0:
        intrinsic = max(F - K, 0.0) if call else max(K - F, 0.0)
        return df * intrinsic
    sd = vol * math.sqrt(T)
    d1 = (math.log(F / K) + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    if call:
        return df * (F * norm.cdf(d1) - K * norm.cdf(d2))
    return df * (K * norm.cdf(-d2) - F * norm.cdf(-d1))


def implied_vol(price, F, K, T, r=0.0, call=True, tol=1e-10):
    """Black-76 volatility matching ``price``, searched in [1e-6, 5]."""
    lo, hi = VOL_BRACKET
    p_lo = black76_price(F, K, T, lo, r, call)
    p_hi = black76_price(F, K, T, hi, r, call)
    if not p_lo <= price <= p_hi:
        where = "below" if price < p_lo else "above"
        raise NoSolution(
            f"price {price:.12g} is {where} the attainable range [{p_lo:.12g}, {p_hi:.12g}] "
            f"for vols in [{lo}, {hi}]"
        )
    if price == p_lo:
        return lo
    # brentq is a safeguarded bisection/secant hybrid
    vol = brentq(lambda s: black76_price(F, K, T, s, r, call) - price, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    if abs(black76_price(F, K, T, vol, r, call) - price) > tol * max(1.0, price):
        raise NoSolution(f"implied vol search stalled at {vol}")
    return vol


def model_implied_vol(config: ModelConfig, spec: VanillaSpec) -> float:
    res = price_vanilla(config, spec)
    F = initial_price(config, spec.futures_maturity)
    return implied_vol(res.price, F, spec.strike, spec.expiry, config.rate, spec.call)
