"""Seasonal mean-reversion levels theta(t) and their exponential transforms.

Every pattern is periodic with period one year and is controlled by a level
``a``, a magnitude ``b`` and a peak time ``t0`` in [0, 1).  The transform

    theta_hat_T(lam) = int_0^T theta(t) exp(lam t) dt

enters both the characteristic function and the deterministic-variance
solution.  Closed forms are used for the constant, sinusoid, sawtooth and
triangle patterns; the exponential-sinusoid and spiked patterns go through
adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate

__all__ = [
    "Pattern",
    "SeasonalitySpec",
    "ThetaBounds",
    "QuadratureError",
    "theta_eval",
    "theta_transform",
    "theta_transform_oracle",
    "theta_bounds",
    "breakpoints",
]

SMALL_LAMBDA = 1e-6
TWO_PI = 2.0 * math.pi


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class Pattern(str, Enum):
    CONSTANT = "constant"
    SINUSOID = "sinusoid"
    EXP_SINUSOID = "exp-sinusoid"
    SAWTOOTH = "sawtooth"
    TRIANGLE = "triangle"
    SPIKED = "spiked"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"expsinusoid": "exp-sinusoid", "exp-sin": "exp-sinusoid", "sin": "sinusoid"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"pattern: unknown seasonality pattern {name!r} (expected one of {valid})") from None


@dataclass(frozen=True)
class ThetaBounds:
    theta_min: float
    theta_max: float


@dataclass(frozen=True)
class SeasonalitySpec:
    """Parameters of a seasonal mean-reversion level.

    ``a`` is the level, ``b`` the magnitude of the seasonal swing and ``t0``
    the time of year (in years) at which theta peaks.  A sinusoid with
    ``b >= a`` dips to or below zero; it is rejected unless ``strict=False``.
    """

    pattern: Pattern
    a: float
    b: float = 0.0
    t0: float = 0.0
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern.parse(self.pattern))
        for name in ("a", "b", "t0"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name}: must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.a <= 0.0:
            raise ValueError(f"a: level must be > 0, got {self.a}")
        if self.b < 0.0:
            raise ValueError(f"b: magnitude must be >= 0, got {self.b}")
        if not 0.0 <= self.t0 < 1.0:
            raise ValueError(f"t0: peak time must lie in [0, 1), got {self.t0}")
        if self.strict and self.pattern is Pattern.SINUSOID and self.a - self.b <= 0.0:
            raise ValueError(f"b: sinusoid needs a - b > 0 (a={self.a}, b={self.b})")

    @classmethod
    def constant(cls, a):
        return cls(Pattern.CONSTANT, a, 0.0, 0.0)


def _frac(x):
    # fractional part in [0, 1) for negative arguments as well
    f = x - np.floor(x)
    return np.where(f >= 1.0, 0.0, f)


def theta_eval(spec: SeasonalitySpec, t):
    """Mean-reversion level theta(t); accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    a, b, t0 = spec.a, spec.b, spec.t0
    p = spec.pattern
    if p is Pattern.CONSTANT:
        out = np.full_like(t, a)
    elif p is Pattern.SINUSOID:
        out = a + b * np.cos(TWO_PI * (t - t0))
    elif p is Pattern.EXP_SINUSOID:
        out = a * np.exp(b * np.cos(TWO_PI * (t - t0)))
    elif p is Pattern.SAWTOOTH:
        out = a + b * _frac(t - t0)
    elif p is Pattern.TRIANGLE:
        out = a + b * np.abs(0.5 - _frac(t - t0))
    elif p is Pattern.SPIKED:
        s = np.abs(np.sin(math.pi * (t - t0)))
        out = a + b * (2.0 / (1.0 + s) - 1.0) ** 2
    else:  # pragma: no cover
        raise AssertionError(p)
    return float(out) if out.ndim == 0 else out


def theta_bounds(spec: SeasonalitySpec) -> ThetaBounds:
    """Analytic range of theta; a non-positive minimum is an error for strict specs."""
    a, b = spec.a, spec.b
    p = spec.pattern
    if p is Pattern.CONSTANT:
        lo, hi = a, a
    elif p is Pattern.SINUSOID:
        lo, hi = a - b, a + b
    elif p is Pattern.EXP_SINUSOID:
        lo, hi = a * math.exp(-b), a * math.exp(b)
    elif p is Pattern.SAWTOOTH:
        lo, hi = a, a + b
    elif p is Pattern.TRIANGLE:
        lo, hi = a, a + 0.5 * b
    else:
        lo, hi = a, a + b
    if lo <= 0.0 and spec.strict:
        raise ValueError(f"theta_min must be > 0 for {p.value} (got {lo})")
    return ThetaBounds(lo, hi)


def breakpoints(spec: SeasonalitySpec, lo: float, hi: float):
    """Kinks and jumps of theta strictly inside (lo, hi), sorted."""
    p = spec.pattern
    if p in (Pattern.SAWTOOTH, Pattern.SPIKED):
        offsets = (0.0,)
    elif p is Pattern.TRIANGLE:
        offsets = (0.0, 0.5)
    else:
        return []
    pts = []
    k = math.floor(lo - spec.t0) - 1
    while True:
        base = spec.t0 + k
        if base > hi:
            break
        for off in offsets:
            x = base + off
            if lo < x < hi:
                pts.append(x)
        k += 1
    return sorted(pts)


def _quad_segments(func, lo, hi, cuts, tol=1e-12):
    """Adaptive Gauss-Kronrod over [lo, hi], restarting at every cut."""
    edges = [lo, *cuts, hi]
    total = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        if x1 <= x0:
            continue
        res = integrate.quad(func, x0, x1, epsabs=tol, epsrel=tol, limit=200, full_output=1)
        val, err = res[0], res[1]
        # ier > 0 is often only roundoff at 1e-12; accept unless the error is material
        if len(res) > 3 and err > 1e3 * tol * max(1.0, abs(val)):
            raise QuadratureError(f"quadrature on [{x0}, {x1}] did not converge: {res[3]}", achieved=err)
        total += val
    return total


def theta_transform_oracle(spec: SeasonalitySpec, T: float, lam: float) -> float:
    """Quadrature of t -> theta(t) exp(lam t) over [0, T], split at every kink."""
    if T < 0:
        raise ValueError(f"T: horizon must be >= 0, got {T}")
    if T == 0.0:
        return 0.0
    lam = float(lam)

    def integrand(t):
        return theta_eval(spec, t) * math.exp(lam * t)

    return _quad_segments(integrand, 0.0, float(T), breakpoints(spec, 0.0, T))


def _exp_integral(lam, T):
    # int_0^T exp(lam t) dt
    return math.expm1(lam * T) / lam


def _sinusoid(a, b, t0, T, lam):
    d = lam * lam + TWO_PI * TWO_PI
    w = TWO_PI * (T - t0)
    seasonal = (
        b * math.exp(lam * T) / d * (TWO_PI * math.sin(w) + lam * math.cos(w))
        + b / d * (TWO_PI * math.sin(TWO_PI * t0) - lam * math.cos(TWO_PI * t0))
    )
    return seasonal + a * _exp_integral(lam, T)


def _geom(lam, first, last):
    # sum_{k=first}^{last} exp(lam k); zero when the range is empty
    if last < first:
        return 0.0
    k = np.arange(first, last + 1, dtype=float)
    return float(np.exp(lam * k).sum())


def _sawtooth(a, b, t0, T, lam):
    linear = (b * (1.0 / lam + t0) - a) / lam + math.exp(lam * T) / lam * (a + b * (T - 1.0 / lam - t0))
    n = math.floor(T - t0)
    after = T >= t0
    floor_part = math.exp(lam * t0) / lam * (
        n * math.exp(lam * (T - t0))
        - (_geom(lam, 1, n) if after else 0.0)
        + (0.0 if after else 1.0)
        + math.exp(-lam * t0)
        - 1.0
    )
    return linear - b * floor_part


def _triangle(a, b, t0, T, lam):
    n = math.floor(T - t0)
    alpha = T - t0 - n
    z1 = 0.5 + 1.0 / lam
    z2 = 0.5 - 1.0 / lam
    z3 = z1 - alpha
    e = math.exp
    s = T - t0

    head = z2
    if t0 > 0.5:
        head += 2.0 / lam * e(-lam / 2) + e(-lam * t0) * (z2 - t0)
    else:
        head -= e(-lam * t0) * (z2 - t0)

    body = 0.0
    if T >= t0:
        period = 2.0 / lam * e(lam / 2) + z2 * e(lam) - z1
        if alpha > 0.5:
            tail = 2.0 / lam * e(lam / 2) - z3 * e(lam * alpha)
        else:
            tail = z3 * e(lam * alpha)
        body = period * _geom(lam, 0, n - 1) + e(lam * n) * (tail - z1)
    elif -0.5 <= s < 0.0:
        body = e(lam * s) * (z2 + s) - z2
    elif -1.0 <= s < -0.5:
        body = -(2.0 / lam * e(-lam / 2) + e(lam * s) * (z2 + s) + z2)

    return a * _exp_integral(lam, T) + b * e(lam * t0) / lam * (head + body)


def theta_transform(spec: SeasonalitySpec, T: float, lam: float) -> float:
    """theta_hat_T(lam) = int_0^T theta(t) exp(lam t) dt.

    Closed forms for constant, sinusoid, sawtooth and triangle; quadrature for
    the remaining patterns and whenever ``|lam| < 1e-6`` (the closed forms
    carry a removable ``1/lam`` singularity there).
    """
    if T < 0:
        raise ValueError(f"T: horizon must be >= 0, got {T}")
    T = float(T)
    lam = float(lam)
    if T == 0.0:
        return 0.0
    p = spec.pattern
    if abs(lam) < SMALL_LAMBDA:
        if p is Pattern.CONSTANT or (p is Pattern.SINUSOID and spec.b == 0.0):
            return spec.a * T if lam == 0.0 else spec.a * _exp_integral(lam, T)
        return theta_transform_oracle(spec, T, lam)
    a, b, t0 = spec.a, spec.b, spec.t0
    if p is Pattern.CONSTANT:
        return a * _exp_integral(lam, T)
    if p is Pattern.SINUSOID:
        return _sinusoid(a, b, t0, T, lam)
    if p is Pattern.SAWTOOTH:
        return _sawtooth(a, b, t0, T, lam)
    if p is Pattern.TRIANGLE:
        return _triangle(a, b, t0, T, lam)
    return theta_transform_oracle(spec, T, lam)
