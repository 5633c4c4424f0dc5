"""Vectorised adaptive Gauss-Kronrod (G7/K15) quadrature.

The integrand receives every node of every active panel in a single call,
which matters when each evaluation is an ODE solve over a batch of
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["QuadResult", "gk15", "integrate_semi_infinite", "panel_nodes", "QuadratureFailure"]

_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
# abscissae on [-1, 1]: 7 negative, centre, 7 positive
_X = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_WK = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])


class QuadratureFailure(ArithmeticError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


@dataclass
class QuadResult:
    value: np.ndarray | float
    error: float
    evaluations: int
    upper: float = float("nan")
    panels: tuple | None = None  # accepted (lo, hi) arrays


def panel_nodes(lo, hi):
    """K15 nodes, Kronrod weights and Gauss weights for panels [lo, hi]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _X[None, :]
    return x, half[:, None] * _WK[None, :], half[:, None] * _WG_FULL[None, :]


def _panel_rules(f, lo, hi):
    # f maps nodes of shape (N,) to values of shape (N,) or (m, N)
    half = 0.5 * (hi - lo)
    x = panel_nodes(lo, hi)[0]
    y = np.asarray(f(x.ravel()), dtype=float)
    y = y.reshape(y.shape[:-1] + x.shape)
    k = half * (y @ _WK)
    g = half * (y @ _WG_FULL)
    err = np.abs(k - g)
    if err.ndim > 1:
        err = err.max(axis=0)
    return k, err, y


def _refine(f, lo, hi, k, err, a, b, abs_tol, rel_tol, max_panels, evals):
    done_val = 0.0
    done_err = 0.0
    kept_lo, kept_hi = [], []
    while True:
        total = done_val + k.sum(axis=-1)
        tol = max(abs_tol, rel_tol * float(np.max(np.abs(total))))
        # a panel is accepted when its error is within its share of the budget
        share = tol * (hi - lo) / (b - a)
        ok = err <= share
        done_val = done_val + k[..., ok].sum(axis=-1)
        done_err += err[ok].sum()
        kept_lo.append(lo[ok])
        kept_hi.append(hi[ok])
        if ok.all():
            panels = (np.concatenate(kept_lo), np.concatenate(kept_hi))
            return QuadResult(done_val, done_err, evals, b, panels)
        lo, hi = lo[~ok], hi[~ok]
        if evals // 15 + 2 * lo.size > max_panels:
            achieved = done_err + err[~ok].sum()
            raise QuadratureFailure(f"adaptive quadrature exhausted {max_panels} panels", achieved)
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        k, err, _ = _panel_rules(f, lo, hi)
        evals += 15 * lo.size


def gk15(f, a, b, abs_tol=1e-12, rel_tol=1e-10, initial_panels=8, max_panels=4000) -> QuadResult:
    """Adaptive G7/K15 quadrature of a vectorised integrand over [a, b].

    ``f`` may return several components stacked along the first axis; they
    share one mesh and the worst component drives refinement.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    k, err, _ = _panel_rules(f, lo, hi)
    return _refine(f, lo, hi, k, err, a, b, abs_tol, rel_tol, max_panels, 15 * lo.size)


def integrate_semi_infinite(
    f, width, tail_tol=1e-12, consecutive=3, max_upper=1e4, abs_tol=1e-12, rel_tol=1e-10, max_panels=4000
) -> QuadResult:
    """Integrate over [0, inf) by extending panels until the integrand dies out.

    Panels of ``width`` are scanned outward in growing batches; the upper
    limit is fixed once ``consecutive`` panels in a row have
    ``max |f| * width < tail_tol``.  The scanned panels then seed the
    adaptive refinement of the finite range.
    """
    los, ks, errs = [], [], []
    upper = 0.0
    quiet = 0
    batch = 8
    evals = 0
    while quiet < consecutive:
        lo = upper + width * np.arange(batch)
        k, err, y = _panel_rules(f, lo, lo + width)
        evals += 15 * batch
        peaks = np.abs(y).reshape(-1, batch, 15).max(axis=(0, 2))
        for i, peak in enumerate(peaks):
            los.append(lo[i])
            ks.append(k[..., i])
            errs.append(err[i])
            upper += width
            quiet = quiet + 1 if peak * width < tail_tol else 0
            if quiet >= consecutive:
                break
        if upper > max_upper:
            raise QuadratureFailure(f"integrand still above {tail_tol} at u={upper}")
        batch *= 2
    lo = np.array(los)
    k = np.stack(ks, axis=-1)
    res = _refine(f, lo, lo + width, k, np.array(errs), 0.0, upper, abs_tol, rel_tol, max_panels, evals)
    res.upper = upper
    return res
