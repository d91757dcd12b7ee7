"""Acceptance checks, one test per criterion (criterion 8 has three parts).

Each test records a PASS/FAIL line; the lines are printed together at the end
of the pytest run (see ``conftest.py``) and also when this file is run as a
script. Tolerances and runtime budgets are the stated ones.
"""

import functools
import time

import mpmath as mp
import pytest

from gapprob.coulomb import (density_normalization, jue_endpoint, jue_quartic_residual, lue_cubic_residual,
                             lue_endpoint, lue_ratio_limit)
from gapprob.fredholm import log_det_converged
from gapprob.orthopoly import (WeightSpec, gue_sigma_n, hankel_log_det, jue_scaled_sigma, jue_sigma_n,
                               log_abs_pn_at_point, lue_h_derivatives, pn_at_point)
from gapprob.painleve import (AsymptoticSeries, constant_c1, residual, series_eval, widom_dyson)
from gapprob.specfun import PrecisionContext
from gapprob.verify import doubling_suite, extracted_sine_constant, identities_suite

RESULTS = {}


def record(key, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
    RESULTS[key] = line
    print(line)
    return ok


def _worst(values):
    return max(values) if values else mp.mpf(0)


def _fmt(x):
    return mp.nstr(mp.mpf(x), 3)


# 1 -------------------------------------------------------------------------

def test_criterion_1_appendix_identities():
    start = time.perf_counter()
    checks = identities_suite(points=((0.1, 0.5), (0.2, 0.9)), threshold=1e-9)
    elapsed = time.perf_counter() - start
    worst = _worst([abs(c.value) for c in checks])
    ok = all(c.passed for c in checks) and elapsed < 10
    assert record("1", ok, f"{len(checks)} identity evaluations, worst residual {_fmt(worst)} (<= 1e-9), "
                           f"{elapsed:.1f}s (< 10s)")


# 2 -------------------------------------------------------------------------

def test_criterion_2_exact_finite_n():
    ctx = PrecisionContext(256)
    start = time.perf_counter()
    worst_ratio = mp.mpf(0)
    with ctx.workprec():
        for al in (-mp.mpf(1) / 2, mp.mpf(1) / 2, mp.mpf(1)):
            for t in (mp.mpf("0.1"), mp.mpf(1)):
                w = WeightSpec.deformed_laguerre(al, t)
                shifted = WeightSpec.deformed_laguerre(al + 1, t)
                for n in range(1, 9):
                    rec = pn_at_point(w, n, 0, ctx, check=False)
                    ratio = (-1) ** n * mp.exp(hankel_log_det(shifted, n, ctx).log_det
                                               - hankel_log_det(w, n, ctx).log_det)
                    worst_ratio = max(worst_ratio, abs(rec - ratio) / abs(ratio))
    doubling = doubling_suite(max_n=10, ctx=ctx, threshold=1e-8)
    worst_doubling = _worst([abs(c.value) for c in doubling])
    elapsed = time.perf_counter() - start
    ok = worst_ratio <= 1e-8 and all(c.passed for c in doubling) and elapsed < 120
    assert record("2", ok, f"P_n(0) recurrence vs determinant ratio worst rel {_fmt(worst_ratio)} (<= 1e-8); "
                           f"doubling worst {_fmt(worst_doubling)} over {len(doubling)} cases (<= 1e-8); "
                           f"{elapsed:.1f}s (< 120s)")


# 3 -------------------------------------------------------------------------

def _gue_sigma(a, n, ctx):
    if n == 0:
        return mp.mpf(0), mp.mpf(0), mp.mpf(0)
    return gue_sigma_n(a, n, ctx)


def test_criterion_3_painleve_residual_chain():
    ctx = PrecisionContext(256)
    pv, pvi, gdiff, gode = [], [], [], []
    with ctx.workprec():
        for al in (mp.mpf(1) / 2, mp.mpf(1)):
            for t in (mp.mpf("0.2"), mp.mpf("0.5")):
                for n in range(1, 7):
                    h, dh, d2h = lue_h_derivatives(t, n, al, ctx)
                    pv.append(residual("PV_SIGMA", {"H": h, "dH": dh, "d2H": d2h, "t": t, "n": n, "alpha": al},
                                       ctx).relative)
        al, be = mp.mpf(1) / 2, mp.mpf(1)
        for t in (mp.mpf("0.2"), mp.mpf("0.5")):
            for n in range(1, 6):
                s, ds, d2s = jue_sigma_n(t, n, al, be, ctx)
                pvi.append(residual("PVI_SIGMA", {"sigma": s, "dsigma": ds, "d2sigma": d2s, "t": t, "n": n,
                                                  "alpha": al, "beta": be}, ctx).relative)
        for a in (mp.mpf("0.3"), mp.mpf("0.6")):
            sig = {n: _gue_sigma(a, n, ctx) for n in range(0, 8)}
            for n in range(1, 7):
                gdiff.append(residual("GUE_DIFFERENCE", {"sigma_prev": sig[n - 1][0], "sigma": sig[n][0],
                                                         "sigma_next": sig[n + 1][0], "a": a, "n": n},
                                      ctx).relative)
                gode.append(residual("GUE_ODE", {"sigma": sig[n][0], "dsigma": sig[n][1], "d2sigma": sig[n][2],
                                                 "a": a, "n": n}, ctx).relative)
        exact = residual("PV_SIGMA", {"H": -mp.mpf("0.7"), "dH": -1, "d2H": 0, "t": mp.mpf("0.7"), "n": 1,
                                      "alpha": 0}, ctx).residual
    worst = {k: _worst(v) for k, v in (("PV", pv), ("PVI", pvi), ("GUE difference", gdiff), ("GUE ODE", gode))}
    ok = all(v <= 1e-6 for v in worst.values()) and exact == 0
    detail = ", ".join(f"{k} worst rel {_fmt(v)}" for k, v in worst.items())
    assert record("3", ok, f"{detail} (all <= 1e-6); symbolic PV point residual {_fmt(exact)} (== 0)")


# 4 -------------------------------------------------------------------------

def test_criterion_4_kernel_product_identity():
    ctx = PrecisionContext(128)
    start = time.perf_counter()
    res = []
    with ctx.workprec():
        half = mp.mpf(1) / 2
        for b in ("0.5", "1.0", "1.5", "2.0"):
            b = mp.mpf(b)
            sine = log_det_converged("sine", b, None, 1e-25, ctx)[0]
            minus = log_det_converged("bessel", b * b, -half, 1e-25, ctx)[0]
            plus = log_det_converged("bessel", b * b, half, 1e-25, ctx)[0]
            res.append(abs(sine - minus - plus))
    elapsed = time.perf_counter() - start
    ok = _worst(res) <= 1e-10 and elapsed < 60
    assert record("4", ok, f"product identity worst residual {_fmt(_worst(res))} (<= 1e-10), {elapsed:.1f}s (< 60s)")


# 5 -------------------------------------------------------------------------

def test_criterion_5_gue_large_gap():
    ctx = PrecisionContext(192)
    start = time.perf_counter()
    diffs = []
    with ctx.workprec():
        for b in (6, 8):
            value = log_det_converged("sine", b, None, 1e-20, ctx, start_order=32)[0]
            diffs.append(abs(value - series_eval("logP_gue", {}, 3, b, ctx)))
        constant = extracted_sine_constant(8, ctx)
        gap = abs(constant - widom_dyson(ctx))
    elapsed = time.perf_counter() - start
    ok = _worst(diffs) <= 5e-5 and gap <= 1e-4 and elapsed < 300
    assert record("5", ok, f"|log det - series| at b=6,8: {_fmt(diffs[0])}, {_fmt(diffs[1])} (<= 5e-5); "
                           f"extracted constant {mp.nstr(constant, 8)} vs {mp.nstr(widom_dyson(ctx), 8)}, "
                           f"gap {_fmt(gap)} (<= 1e-4); {elapsed:.1f}s (< 300s)")


# 6 -------------------------------------------------------------------------

def test_criterion_6_lue_expansion_constant():
    ctx = PrecisionContext(256)
    start = time.perf_counter()
    diffs = []
    with ctx.workprec():
        for al in (-mp.mpf(1) / 2, mp.mpf(1) / 2):
            for s in (100, 400):
                value = log_det_converged("bessel", s, al, 1e-15, ctx)[0]
                diffs.append(abs(value - series_eval("logP_lue", {"alpha": al}, 6, s, ctx)))
        c1_half = constant_c1(mp.mpf(1) / 2, ctx)
    elapsed = time.perf_counter() - start
    ok = _worst(diffs) <= 1e-4 and elapsed < 300
    assert record("6", ok, f"|log det_Bessel - series| worst {_fmt(_worst(diffs))} over alpha=+-1/2, s=100,400 "
                           f"(<= 1e-4) with c1(1/2)={mp.nstr(c1_half, 10)}; {elapsed:.1f}s (< 300s)")


# 7 -------------------------------------------------------------------------

def _loglog_slope(xs, ys):
    lx = [mp.log(x) for x in xs]
    ly = [mp.log(y) for y in ys]
    mx, my = mp.fsum(lx) / len(lx), mp.fsum(ly) / len(ly)
    return mp.fsum((a - mx) * (b - my) for a, b in zip(lx, ly)) / mp.fsum((a - mx) ** 2 for a in lx)


def test_criterion_7_series_ode_consistency():
    ctx = PrecisionContext(192)
    start = time.perf_counter()
    failures, slopes = [], {}
    with ctx.workprec():
        grid = [mp.mpf(10) ** (3 + mp.mpf(k) / 2) for k in range(7)]
        for al in (mp.mpf(1) / 2, mp.mpf(1), mp.mpf(2)):
            ser = AsymptoticSeries
            for J in range(1, 7):
                sigma = ser.build("sigma_of_s", al, J=J, ctx=ctx)
                rel = [residual("PIII_SIGMA", {"sigma": sigma(s), "dsigma": sigma(s, 1), "d2sigma": sigma(s, 2),
                                               "s": s, "alpha": al}, ctx).relative for s in grid]
                slope = _loglog_slope(grid, rel)
                slopes[(float(al), J)] = slope
                if not slope <= -mp.mpf(J + 1) / 2:
                    failures.append((float(al), J, slope))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10
    worst_margin = max(slopes[(a, J)] + mp.mpf(J + 1) / 2 for a, J in slopes)
    assert record("7", ok, f"{len(slopes)} (alpha, J) fits over s in [1e3, 1e6], every slope <= -(J+1)/2 "
                           f"(largest slope + (J+1)/2 = {_fmt(worst_margin)}); {elapsed:.1f}s (< 10s)")


# 8 -------------------------------------------------------------------------

def test_criterion_8a_endpoint_residuals():
    ctx = PrecisionContext(80)
    cubic, quartic = [], []
    for n in (5, 50, 200):
        for al in (-0.5, 0.5, 2.0):
            for t in (0.1, 1.0, 5.0):
                cubic.append(lue_cubic_residual(lue_endpoint(t, al, n, ctx), t, al, n))
            for t in (0.05, 0.3, 0.8):
                for be in (0.5, 1.0, 2.0):
                    quartic.append(jue_quartic_residual(jue_endpoint(t, al, be, n, ctx), t, al, be, n))
    ok = _worst(cubic) <= 1e-12 and _worst(quartic) <= 1e-12
    assert record("8a", ok, f"cubic worst rel residual {_fmt(_worst(cubic))}, quartic {_fmt(_worst(quartic))} "
                            f"(<= 1e-12)")


def test_criterion_8b_density_normalization():
    ctx = PrecisionContext(80)
    errs = []
    for n in (4, 8, 30):
        for al in (-0.5, 0.5, 1.5):
            errs.append(abs(density_normalization("lue", 0.2, al, n, ctx) - n) / n)
            errs.append(abs(density_normalization("jue", 0.2, al, n, ctx, beta=1.0) - n) / n)
    ok = _worst(errs) <= 1e-6
    assert record("8b", ok, f"|int rho - n|/n worst {_fmt(_worst(errs))} over {len(errs)} cases (<= 1e-6)")


@functools.lru_cache(maxsize=None)
def ratio_gap(n, s, al, bits=128):
    """log|P_n(0; s/4n)| - log|P_n(0; 0)| for the Laguerre weight, the first from the recurrence."""
    ctx = PrecisionContext(bits)
    with ctx.workprec():
        n, s, al = int(n), mp.mpf(s), mp.mpf(al)
        at_t = log_abs_pn_at_point(WeightSpec.deformed_laguerre(al, s / (4 * n)), n, 0, ctx)
        # (-1)^n P_n(0; 0) = Gamma(n + alpha + 1) / Gamma(alpha + 1)
        at_zero = mp.loggamma(n + al + 1) - mp.loggamma(al + 1)
        return at_t - at_zero


def test_criterion_8c_ratio_trend():
    ctx = PrecisionContext(128)
    start = time.perf_counter()
    s, al = 25, mp.mpf(1) / 2
    with ctx.workprec():
        limit = lue_ratio_limit(s, al, ctx)
        gaps = [abs(ratio_gap(n, s, al) - limit) for n in (50, 100, 200)]
    elapsed = time.perf_counter() - start
    ok = gaps[0] > gaps[1] > gaps[2] and elapsed < 120
    assert record("8c", ok, "|ratio - limit| at n=50,100,200: " + ", ".join(_fmt(g) for g in gaps)
                  + f" (must decrease); {elapsed:.1f}s (< 120s)")


def test_ratio_tends_to_fredholm_difference():
    # the n -> infinity value of the ratio is the exact Bessel determinant difference;
    # the closed-form limit above is only its large-s form
    ctx = PrecisionContext(128)
    s, al = 25, mp.mpf(1) / 2
    with ctx.workprec():
        exact = (log_det_converged("bessel", s, al + 1, 1e-20, ctx)[0]
                 - log_det_converged("bessel", s, al, 1e-20, ctx)[0])
        gaps = [abs(ratio_gap(n, s, al) - exact) for n in (50, 100, 200)]
        remainder = exact - lue_ratio_limit(s, al, ctx)
    print(f"|ratio - Fredholm difference| at n=50,100,200: {', '.join(_fmt(g) for g in gaps)}; "
          f"Fredholm difference minus closed-form limit at s=25: {_fmt(remainder)}")
    assert gaps[0] > gaps[1] > gaps[2]
    # O(1/n) approach
    assert gaps[2] < gaps[0] / 3


# 9 -------------------------------------------------------------------------

def test_criterion_9_jue_scaled_consistency():
    ctx = PrecisionContext(128)
    start = time.perf_counter()
    s, al, be = mp.mpf(4), mp.mpf(1) / 2, mp.mpf(1)
    rel = []
    with ctx.workprec():
        for n in (20, 40, 80):
            sg, d1, d2 = jue_scaled_sigma(s, n, al, be, ctx)
            rel.append(residual("PIII_SIGMA", {"sigma": sg, "dsigma": d1, "d2sigma": d2, "s": s, "alpha": al},
                                ctx).relative)
    elapsed = time.perf_counter() - start
    ok = rel[0] > rel[1] > rel[2]
    assert record("9", ok, "P_III relative residual from n x n Jacobi data at s=4, n=20,40,80: "
                  + ", ".join(_fmt(r) for r in rel) + f" (must decrease); {elapsed:.1f}s")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
