"""Acceptance gate: one test and one printed PASS/FAIL line per criterion.

Tolerances are the ones the criteria state.  Criteria that fail are left
failing; the printed line carries the numbers needed to see why.
"""

import csv
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import CONFIGS, DATA, TABLE1, table1_model
from seasonalvol.charfn import deterministic_cf, joint_cf, single_cf
from seasonalvol.config import load_config
from seasonalvol.correlation import corr_term_structure
from seasonalvol.model import VolFactor
from seasonalvol.montecarlo import McSettings, comparison_test, estimate, min_variance, simulate_terminal
from seasonalvol.seasonality import SeasonalitySpec, theta_transform, theta_transform_oracle
from seasonalvol.spread import CsoSpec, cso_call, model_implied_correlation
from seasonalvol.vanilla import VanillaSpec, black76_price, model_implied_vol, price_vanilla

ROW_T = [0.33 + 0.25 * i for i in range(11)]
STRIKES = (-10.0, 0.0, 10.0)
CASES = ("case1", "case2", "case3")
T0 = 7 / 12


def report(request, number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    with request.config.pluginmanager.getplugin("capturemanager").global_and_fixture_disabled():
        print("\n" + line, flush=True)
    assert ok, line


def before_or_at_t0(T):
    """Rows whose expiry falls in the quarter up to and including t0 + k."""
    phase = (T - T0) % 1.0
    return phase > 0.5 or phase < 1e-9


def published_table():
    with open(DATA / "table3_published.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([[float(r[f"{c}_K{int(K)}"]) for K in STRIKES] for r in rows]) for c in CASES}


@pytest.fixture(scope="module")
def table3():
    run = load_config(CONFIGS / "table4_cases.cfg")
    start = time.perf_counter()
    prices = {
        name: np.array([[cso_call(run.cases[name], CsoSpec(T, T, T + 0.5, K)).price for K in STRIKES] for T in ROW_T])
        for name in CASES
    }
    return run, prices, time.perf_counter() - start


def test_criterion_1_table3_reproduction(request, table3):
    run, ours, seconds = table3
    published = published_table()
    parts, ok = [], seconds <= 300
    for name in CASES:
        rel = np.abs(ours[name] / published[name] - 1)
        ok &= bool(np.all(rel <= 0.01))
        parts.append(f"{name} max rel {rel.max():.4f} ({int(np.sum(rel > 0.01))}/33 over 1%)")
    # the same comparison with the first and third published blocks exchanged
    swapped = {"case1": "case3", "case2": "case2", "case3": "case1"}
    worst = max(np.abs(ours[n] / published[swapped[n]] - 1).max() for n in CASES)
    detail = "; ".join(parts) + f"; runtime {seconds:.0f}s; with published case1/case3 blocks exchanged: max rel {worst:.4f}"
    report(request, 1, "Table 3 prices within 1%", ok, detail)


def test_criterion_2_table3_orderings(request, table3):
    _, ours, _ = table3
    monotone = all(np.all(np.diff(ours[n], axis=1) < 0) for n in CASES)
    agree, total, pattern = 0, 0, []
    for i, T in enumerate(ROW_T):
        col = np.stack([ours[n][i] for n in CASES])  # magnitude-ordered rows, strikes across
        rising = np.all(np.diff(col, axis=0) > 0)
        falling = np.all(np.diff(col, axis=0) < 0)
        want_rising = before_or_at_t0(T)
        agree += int(rising if want_rising else falling)
        total += 1
        pattern.append("up" if rising else "down" if falling else "mixed")
    ok = monotone and agree == total
    detail = (
        f"monotone in K: {monotone}; seasonality ordering holds in {agree}/{total} rows "
        f"(observed per row: {', '.join(pattern)})"
    )
    report(request, 2, "Table 3 orderings", ok, detail)


def test_criterion_3_characteristic_function(request):
    start = time.perf_counter()
    u = np.linspace(-50.0, 50.0, 401)
    models = [table1_model(n) for n in TABLE1]
    zero = all(joint_cf(m, 0.0, 0.0, 1.0, 1.0, 1.0) == 1.0 for m in models)
    mod = herm = mart = 0.0
    for m in models:
        for T in (0.25, 1.0, 2.0):
            phi = single_cf(m, u, T, T)
            mod = max(mod, float(np.abs(phi).max()) - 1.0)
            herm = max(herm, float(np.abs(single_cf(m, -u, T, T) - np.conj(phi)).max()))
            mart = max(mart, abs(single_cf(m, -1j, T, T) - 1.0))
    seconds = time.perf_counter() - start
    ok = zero and mod <= 1e-10 and herm <= 1e-12 and mart <= 1e-6 and seconds <= 60
    detail = (
        f"phi(0)=1 exactly: {zero}; max |phi|-1 = {mod:.2e}; Hermitian gap {herm:.2e}; "
        f"martingale gap {mart:.2e}; runtime {seconds:.1f}s"
    )
    report(request, 3, "characteristic-function identities", ok, detail)


def test_criterion_4_transform_oracles(request):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for t0 in (0.0, 0.25, T0, 0.9):
        specs = [
            SeasonalitySpec.constant(0.3),
            SeasonalitySpec("sinusoid", 0.25, 0.15, t0),
            SeasonalitySpec("sawtooth", 0.10, 0.30, t0),
            SeasonalitySpec("triangle", 0.10, 0.60, t0),
        ]
        for spec in specs:
            for T in np.round(np.arange(0.1, 3.01, 0.1), 10):
                for lam in (-3.0, -1.0, -0.1, 0.1, 1.0, 3.0):
                    ref = theta_transform_oracle(spec, T, lam)
                    worst = max(worst, abs(theta_transform(spec, T, lam) - ref) / (1 + abs(ref)))
                    count += 1
    seconds = time.perf_counter() - start
    ok = worst <= 1e-10 and seconds <= 30
    report(request, 4, "closed-form transforms vs quadrature", ok,
           f"{count} grid points, worst relative gap {worst:.2e}, runtime {seconds:.1f}s")


def test_criterion_5_degenerate_model(request):
    worst = 0.0
    for k in (1, 2):
        m = load_config(CONFIGS / f"table2_case{k}.cfg").model
        for T in (0.5, 1.0, 2.0):
            # for a Gaussian log-return, ln phi(1) = -i C/2 - C/2
            var = -2.0 * float(np.log(deterministic_cf(m, 1.0, 0.0, T, T, T)).real)
            vol = math.sqrt(var / T)
            for K in range(80, 121, 5):
                ref = black76_price(100.0, K, T, vol, m.rate)
                worst = max(worst, abs(price_vanilla(m, VanillaSpec(K, T, T)).price - ref))
    report(request, 5, "sigma = 0 prices vs Black-76", worst <= 1e-8, f"max abs gap {worst:.2e}")


def test_criterion_6_monte_carlo(request):
    start = time.perf_counter()
    lines, ok = [], True

    sin = table1_model("sinusoid")
    settings = McSettings(paths=1_000_000, steps_per_year=400, seed=20240601)
    F = simulate_terminal(sin, 0.5, [0.5], settings)[:, 0]
    for K in (90.0, 100.0, 110.0):
        mc = estimate(np.maximum(F - K, 0.0), settings.antithetic, math.exp(-sin.rate * 0.5))
        cf = price_vanilla(sin, VanillaSpec(K, 0.5, 0.5)).price
        z = (cf - mc.value) / mc.stderr
        ok &= abs(z) <= 3
        lines.append(f"vanilla K={K:g} z={z:+.2f}")

    case2 = load_config(CONFIGS / "table4_cases.cfg").cases["case2"]
    settings = McSettings(paths=1_000_000, steps_per_year=400, seed=20240602)
    T, T2 = 0.58, 1.08
    legs = simulate_terminal(case2, T, [T, T2], settings)
    for K in STRIKES:
        payoff = np.maximum(legs[:, 0] - legs[:, 1] - K, 0.0)
        mc = estimate(payoff, settings.antithetic, math.exp(-case2.rate * T))
        cf = cso_call(case2, CsoSpec(T, T, T2, K)).price
        z = (cf - mc.value) / mc.stderr
        ok &= abs(z) <= 3
        lines.append(f"cso K={K:g} z={z:+.2f}")
    seconds = time.perf_counter() - start
    ok &= seconds <= 600
    report(request, 6, "CF prices within 3 stderr of Monte Carlo (1e6 paths, 400 steps/yr)", ok,
           ", ".join(lines) + f", runtime {seconds:.0f}s")


def test_criterion_7_comparison_and_positivity(request):
    seasonal = table1_model("sinusoid").factors[0]
    coarse = comparison_test(seasonal, 0.10, McSettings(paths=1_000_000, steps_per_year=400, seed=7))
    fine = comparison_test(seasonal, 0.10, McSettings(paths=1_000_000, steps_per_year=800, seed=7))
    feller = VolFactor(1.0, 1.0, 0.4, -0.25, 0.10, SeasonalitySpec.constant(0.10))
    scan = McSettings(paths=1_000_000, steps_per_year=400, seed=8)
    low_implicit = min_variance(feller, scan, scheme="implicit")
    low_euler = min_variance(feller, scan)
    ok = coarse <= 1e-3 and fine < coarse and low_implicit > 0
    detail = (
        f"violation fraction {coarse:.4f} at 400 steps/yr, {fine:.4f} at 800 (target <= 0.001, decreasing); "
        f"Feller factor min v {low_implicit:.3e} with the drift-implicit sqrt scheme "
        f"(full-truncation Euler state reaches {low_euler:.3e})"
    )
    report(request, 7, "comparison and positivity at simulation scale", ok, detail)


def _local_maxima(x, y):
    return [x[i] for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] > y[i + 1]]


def test_criterion_8_figure_properties(request, table3):
    checks = {}
    months = np.arange(1, 37) / 12.0

    sin = table1_model("sinusoid")
    f = sin.factors[0]
    flat = sin.with_factors([f.with_(seasonality=replace(f.seasonality, b=0.0))])
    iv_flat = np.array([model_implied_vol(flat, VanillaSpec(100.0, T, T)) for T in months])
    checks["Samuelson (b=0 strictly decreasing)"] = (bool(np.all(np.diff(iv_flat) < 0)), "")

    iv = np.array([model_implied_vol(sin, VanillaSpec(100.0, T, T)) for T in months])
    peaks = _local_maxima(months, iv)
    near = [min(abs(p - (T0 + k)) for k in range(4)) for p in peaks]
    ok_peaks = bool(peaks) and all(d <= 1 / 12 + 1e-9 for d in near)
    checks["seasonal maxima within 1 month of t0+k"] = (
        ok_peaks, f"maxima at {', '.join(f'{p:.3f}' for p in peaks)}"
    )

    convex, short_wing = True, np.inf
    for name in TABLE1:
        m = table1_model(name)
        for T in (0.5, 1.0):
            vols = [model_implied_vol(m, VanillaSpec(K, T, T)) for K in range(80, 121, 5)]
            convex &= bool(np.all(np.diff(vols, 2) >= -1e-6))
        # reported only: at three months the far low-strike wing bends slightly
        vols = [model_implied_vol(m, VanillaSpec(K, 0.25, 0.25)) for K in range(80, 121, 5)]
        short_wing = min(short_wing, float(np.diff(vols, 2).min()))
    checks["smiles convex"] = (convex, f"T=0.5 and 1; min second difference at T=0.25 is {short_wing:.1e}")

    signs = []
    for k, early_sign in ((1, -1), (2, 1)):
        curve = corr_term_structure(load_config(CONFIGS / f"table2_case{k}.cfg").model, 1.0, 2.0)
        early = curve.difference[(curve.grid > 0) & (curve.grid <= 0.4)]
        late = curve.difference[(curve.grid >= 0.5) & (curve.grid <= 0.95)]
        signs.append(bool(np.all(early_sign * early > 0) and np.all(early_sign * late < 0)))
    checks["Table 2 difference-curve signs"] = (all(signs), "T1=1, T2=2")

    run, prices, _ = table3
    higher = 0
    for i, T in enumerate(ROW_T):
        spec = CsoSpec(T, T, T + 0.5, 0.0)
        r1 = model_implied_correlation(run.cases["case1"], spec, price=prices["case1"][i, 1])
        r3 = model_implied_correlation(run.cases["case3"], spec, price=prices["case3"][i, 1])
        higher += int((r3 > r1) == before_or_at_t0(T))
    checks["implied correlation case3 vs case1"] = (higher == len(ROW_T), f"{higher}/{len(ROW_T)} maturities")

    ok = all(v for v, _ in checks.values())
    detail = "; ".join(f"{k}: {'pass' if v else 'FAIL'}" + (f" ({d})" if d else "") for k, (v, d) in checks.items())
    report(request, 8, "figure properties", ok, detail)
