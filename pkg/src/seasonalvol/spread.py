"""Calendar spread options.

Calls are priced with a Fourier lower bound built on the joint characteristic
function of the two log-prices.  Exercise is restricted to the region
``ln F1 - beta ln F2 > k``; the payoff restricted to that region has a
single-integral representation after exponential damping in ``k``, and ``k``
is chosen to maximise the bound.  With a zero strike, ``beta = 1`` and
``k = 0`` recover the true exercise region, so the price is exact there.

Puts follow from the model-free parity relation.  Implied correlations invert
a Gaussian-copula pricer with Black-76 marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import roots_hermitenorm
from scipy.stats import norm

from .charfn import log_price_cf
from .model import ModelConfig, initial_price
from .quadrature import integrate_semi_infinite, panel_nodes
from .vanilla import NoSolution, PriceResult, VanillaSpec, black76_price, model_implied_vol

__all__ = [
    "CsoSpec",
    "cso_call",
    "cso_put",
    "spread_forward",
    "copula_spread_price",
    "implied_correlation",
    "model_implied_correlation",
    "DEFAULT_DAMPING",
]

DEFAULT_DAMPING = 0.75
_GH_X, _GH_W = roots_hermitenorm(200)
_GH_W = _GH_W / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CsoSpec:
    """Option on F(T, T1) - F(T, T2) struck at ``strike`` (which may be negative)."""

    expiry: float
    T1: float
    T2: float
    strike: float

    def __post_init__(self):
        if not 0 < self.expiry <= self.T1 < self.T2:
            raise ValueError(
                f"expiry: need 0 < T <= T1 < T2, got T={self.expiry}, T1={self.T1}, T2={self.T2}"
            )
        if not math.isfinite(self.strike):
            raise ValueError("strike: must be finite")


def spread_forward(config: ModelConfig, spec: CsoSpec) -> float:
    """Discounted forward value of the spread payoff, e^{-rT}(F1 - F2 - K)."""
    F1 = initial_price(config, spec.T1)
    F2 = initial_price(config, spec.T2)
    return math.exp(-config.rate * spec.expiry) * (F1 - F2 - spec.strike)


def default_tilt(F2: float, K: float) -> float:
    # linearise the boundary F1 = F2 + K around today's F2
    return F2 / (F2 + K) if F2 + K > 0 else 1.0


class _Bound:
    """Lower-bound integrand for one tilt ``beta``.

    The CF part ``psi`` does not depend on the threshold ``k``, so it is
    memoised per node and the search over ``k`` reuses it.
    """

    def __init__(self, config, spec, beta, delta):
        self.config, self.spec, self.beta, self.delta = config, spec, beta, delta
        self.disc = math.exp(-config.rate * spec.expiry)
        self._memo = {}

    def psi(self, g):
        g = np.asarray(g, dtype=float)
        flat = g.ravel().tolist()
        todo = np.unique([x for x in flat if x not in self._memo])
        if todo.size:
            s = self.spec
            z = todo - 1j * self.delta
            w = -self.beta * z
            n = todo.size
            u1 = np.concatenate([z - 1j, z, z])
            u2 = np.concatenate([w, w - 1j, w])
            phi = log_price_cf(self.config, u1, u2, s.expiry, s.T1, s.T2)
            vals = (phi[:n] - phi[n : 2 * n] - s.strike * phi[2 * n :]) / (self.delta + 1j * todo)
            self._memo.update(zip(todo.tolist(), vals.tolist()))
        return np.array([self._memo[x] for x in flat], dtype=complex).reshape(g.shape)

    def scale(self, k):
        return self.disc * math.exp(-self.delta * k) / math.pi

    def integrate(self, k):
        s = self.spec
        size = initial_price(self.config, s.T1) + initial_price(self.config, s.T2) + abs(s.strike)

        def f(g):
            return (np.exp(-1j * g * k) * self.psi(g)).real

        return integrate_semi_infinite(f, 4.0 / math.sqrt(s.expiry), tail_tol=1e-13 * size)

    def on_panels(self, panels):
        """The bound as a function of ``k`` on a fixed mesh, with a G7/K15 error estimate."""
        x, wk, wg = panel_nodes(*panels)
        psi = self.psi(x)

        def value(k, with_error=False):
            y = (np.exp(-1j * x * k) * psi).real
            kron = (wk * y).sum(axis=1)
            v = self.scale(k) * float(kron.sum())
            if not with_error:
                return v
            return v, self.scale(k) * float(np.abs(kron - (wg * y).sum(axis=1)).sum())

        return value


def _optimise_k(value, k0, span):
    res = minimize_scalar(lambda k: -value(k), bounds=(k0 - span, k0 + span), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def cso_call(config: ModelConfig, spec: CsoSpec, damping: float = DEFAULT_DAMPING, tilt="default",
             tol=1e-8) -> PriceResult:
    """Lower-bound price of a calendar spread call.

    ``tilt`` selects the boundary slope: ``"default"`` uses F2/(F2+K), a number
    fixes it, and ``"optimize"`` maximises the bound over the slope as well.
    The threshold ``k`` is always chosen to maximise the bound.
    """
    F2 = initial_price(config, spec.T2)
    K = spec.strike
    beta0 = default_tilt(F2, K)
    k0 = math.log(F2 + K) - beta0 * math.log(F2) if F2 + K > 0 else 0.0
    bound = _Bound(config, spec, beta0, damping)
    first = bound.integrate(k0)
    if K == 0.0 and tilt == "default":
        # beta = 1, k = 0 is the true exercise region; nothing to optimise
        s0 = bound.scale(0.0)
        return _result(config, spec, s0 * float(first.value), s0 * first.error, first, 1.0, 0.0, damping)

    panels = first.panels
    span = 0.5

    def k_for(b):
        return k0 + (beta0 - b) * math.log(F2)

    if tilt == "optimize":
        def neg_best(b):
            value = _Bound(config, spec, b, damping).on_panels(panels)
            return -value(_optimise_k(value, k_for(b), span))

        beta = float(minimize_scalar(neg_best, bounds=(beta0 - 0.25, beta0 + 0.25), method="bounded",
                                     options={"xatol": 1e-7}).x)
        bound = _Bound(config, spec, beta, damping)
    elif tilt == "default":
        beta = beta0
    else:
        beta = float(tilt)
        bound = _Bound(config, spec, beta, damping)
    value = bound.on_panels(panels)
    k_star = _optimise_k(value, k_for(beta), span)
    v, err = value(k_star, with_error=True)
    res = first
    if err > tol:
        res = bound.integrate(k_star)
        v, err = bound.scale(k_star) * float(res.value), bound.scale(k_star) * res.error
    return _result(config, spec, v, err, res, beta, k_star, damping)


def _result(config, spec, value, err, res, beta, k, damping):
    floor = max(0.0, spread_forward(config, spec))
    return PriceResult(
        max(value, floor),
        err,
        res.evaluations,
        res.upper,
        {"beta": beta, "k": k, "damping": damping, "raw": value},
    )


def cso_put(config: ModelConfig, spec: CsoSpec, **kw) -> PriceResult:
    """Calendar spread put through parity: CSP = CSC - e^{-rT}(F1 - F2 - K)."""
    call = cso_call(config, spec, **kw)
    put = call.price - spread_forward(config, spec)
    details = dict(call.details or {}, call=call.price)
    return PriceResult(put, call.error, call.evaluations, call.upper_limit, details)


def copula_spread_price(F1, F2, K, T, vol1, vol2, rho, r=0.0, call=True):
    """Spread option under a Gaussian copula with Black-76 marginals.

    Conditions on the Gaussian driver of the second leg and integrates a
    Black-type price over it with 200-node Gauss-Hermite.
    """
    sd1, sd2 = vol1 * math.sqrt(T), vol2 * math.sqrt(T)
    z = _GH_X
    leg2 = F2 * np.exp(sd2 * z - 0.5 * sd2 * sd2)
    strike = leg2 + K
    fwd1 = F1 * np.exp(rho * sd1 * z - 0.5 * (rho * sd1) ** 2)
    s = sd1 * math.sqrt(max(0.0, 1.0 - rho * rho))
    pay = np.empty_like(z)
    pos = strike > 0
    if s > 0:
        with np.errstate(divide="ignore"):
            d1 = (np.log(fwd1[pos] / strike[pos]) + 0.5 * s * s) / s
        pay[pos] = fwd1[pos] * norm.cdf(d1) - strike[pos] * norm.cdf(d1 - s)
    else:
        pay[pos] = np.maximum(fwd1[pos] - strike[pos], 0.0)
    pay[~pos] = fwd1[~pos] - strike[~pos]
    price = math.exp(-r * T) * float(_GH_W @ pay)
    if call:
        return price
    return price - math.exp(-r * T) * (F1 - F2 - K)


def implied_correlation(price, F1, F2, K, T, vol1, vol2, r=0.0, tol=1e-10, max_iter=200, eps=1e-9):
    """Correlation in (-1, 1) at which the copula pricer matches ``price``.

    Safeguarded bisection on a price that falls monotonically in rho.
    """
    lo, hi = -1.0 + eps, 1.0 - eps
    p_lo = copula_spread_price(F1, F2, K, T, vol1, vol2, lo, r)
    p_hi = copula_spread_price(F1, F2, K, T, vol1, vol2, hi, r)
    if not p_hi <= price <= p_lo:
        raise NoSolution(
            f"price {price:.10g} outside attainable range [{p_hi:.10g}, {p_lo:.10g}] "
            f"(rho={hi:.9f} .. {lo:.9f})"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        p_mid = copula_spread_price(F1, F2, K, T, vol1, vol2, mid, r)
        if abs(p_mid - price) <= tol or hi - lo < 1e-15:
            return mid
        if p_mid > price:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def model_implied_correlation(config: ModelConfig, spec: CsoSpec, leg_vols=None, price=None, **kw):
    """Implied correlation of a model CSO price.

    Leg vols default to the model's at-the-money implied vols of F(., T1) and
    F(., T2) at the option expiry.
    """
    F1 = initial_price(config, spec.T1)
    F2 = initial_price(config, spec.T2)
    if price is None:
        price = cso_call(config, spec, **kw).price
    if leg_vols is None:
        leg_vols = (
            model_implied_vol(config, VanillaSpec(F1, spec.expiry, spec.T1)),
            model_implied_vol(config, VanillaSpec(F2, spec.expiry, spec.T2)),
        )
    vol1, vol2 = leg_vols
    return implied_correlation(price, F1, F2, spec.strike, spec.expiry, vol1, vol2, config.rate)
