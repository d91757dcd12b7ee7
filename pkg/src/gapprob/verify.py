"""Self-check suites used by ``gapprob verify``.

Each suite returns a list of :class:`Check` records; a suite passes when every
record passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .coulomb import APPENDIX_IDENTITIES, appendix_identity_check
from .fredholm import log_det_converged
from .orthopoly import doubling_check
from .painleve import AsymptoticSeries, constant_c1, constant_c2, widom_dyson
from .specfun import PrecisionContext

__all__ = ["Check", "SUITES", "run_suite", "identities_suite", "constants_suite", "doubling_suite",
           "extracted_sine_constant"]


@dataclass(frozen=True)
class Check:
    name: str
    value: object
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.value) <= self.threshold)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: {mp.nstr(mp.mpf(self.value), 6)} (<= {self.threshold:g})"


def identities_suite(points=((0.1, 0.5), (0.2, 0.9)), threshold=1e-9):
    ctx = PrecisionContext(64)
    checks = []
    for a, b in points:
        for ident, (label, *_rest) in APPENDIX_IDENTITIES.items():
            rep = appendix_identity_check(ident, a, b, ctx)
            checks.append(Check(f"identity {ident} [{label}] a={a} b={b}", rep.residual, threshold))
    return checks


def extracted_sine_constant(b=8, ctx: PrecisionContext | None = None, tol=1e-20):
    """Constant of the sine-kernel large-gap expansion read off a Fredholm determinant.

    Returns log det + b^2/2 + (log b)/4 minus the b^(-2), b^(-4), b^(-6) tail.
    """
    ctx = ctx or PrecisionContext(192)
    with ctx.workprec():
        b = mp.mpf(b)
        value, _ = log_det_converged("sine", b, None, tol, ctx, start_order=32)
        tail = AsymptoticSeries.build("logP_gue", J=3, ctx=ctx).terms(b)
        tail_sum = mp.fsum(v for shape, v in tail.items() if shape[0] == "pow" and shape[1] < 0)
        return value + b * b / 2 + mp.log(b) / 4 - tail_sum


def constants_suite(ctx: PrecisionContext | None = None):
    ctx = ctx or PrecisionContext(192)
    with ctx.workprec():
        wd = widom_dyson(ctx)
        c1_sum = constant_c1(-mp.mpf(1) / 2, ctx) + constant_c1(mp.mpf(1) / 2, ctx)
        fredholm_const = extracted_sine_constant(8, ctx)
        checks = [
            Check("widom_dyson vs c1(-1/2)+c1(1/2)", wd - c1_sum, 1e-30),
            Check("widom_dyson vs Fredholm constant at b=8", wd - fredholm_const, 1e-4),
            Check("widom_dyson vs -0.43850", wd - mp.mpf("-0.43850"), 1e-5),
        ]
        for al, be in ((0.5, 1), (-0.5, 2.5), (1.25, 0.75)):
            al, be = mp.mpf(al), mp.mpf(be)
            lhs = constant_c2(al + 1, be, ctx) - constant_c2(al, be, ctx)
            rhs = mp.loggamma(al + 1) - mp.log(2 * mp.pi) / 2
            checks.append(Check(f"c2 alpha step at ({al}, {be})", lhs - rhs, 1e-30))
            lhs = constant_c2(al, be + 1, ctx) - constant_c2(al, be, ctx)
            rhs = mp.loggamma(be + 1) - mp.log(2 * mp.pi) / 2 + be - (be + mp.mpf(1) / 2) * mp.log(be)
            checks.append(Check(f"c2 beta step at ({al}, {be})", lhs - rhs, 1e-30))
    return checks


def doubling_suite(max_n=10, a_values=(0.3, 0.7), ctx: PrecisionContext | None = None, threshold=1e-8):
    ctx = ctx or PrecisionContext(256)
    checks = []
    for family in ("gue", "symjacobi"):
        for a in a_values:
            for n in range(1, max_n + 1):
                rep = doubling_check(family, a, n, ctx, beta=1)
                checks.append(Check(f"doubling {family} n={n} a={a}", rep.residual, threshold))
    return checks


SUITES = {
    "identities": identities_suite,
    "constants": constants_suite,
    "doubling": doubling_suite,
}


def run_suite(name):
    if name == "all":
        out = []
        for fn in SUITES.values():
            out.extend(fn())
        return out
    return SUITES[name]()
