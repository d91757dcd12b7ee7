"""Coulomb-fluid approximations for the Laguerre and Jacobi ensembles with a hard wall.

The eigenvalues of the weight restricted to [t, inf) (Laguerre) or [t, 1]
(Jacobi) are modelled by an equilibrium density on a single interval (t, b).
This module solves for the right endpoint b, evaluates the density, and gives
the large-n approximations of log |P_n| at x = 0 and x = 1 built from it.
It also checks the elementary integrals the derivations use.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .errors import DomainError
from .painleve import ResidualReport
from .quadrature import integrate_adaptive
from .specfun import DOUBLE, PrecisionContext

__all__ = [
    "FluidSupport",
    "lue_support",
    "jue_support",
    "lue_endpoint",
    "lue_endpoint_series",
    "lue_cubic_residual",
    "jue_endpoint",
    "jue_quartic_residual",
    "lue_density",
    "jue_density",
    "density_normalization",
    "approx_pn",
    "lue_ratio_limit",
    "APPENDIX_IDENTITIES",
    "appendix_identity_check",
]


@dataclass(frozen=True)
class FluidSupport:
    """Support (lower, upper) of an equilibrium density.

    ``positive`` records whether the sufficient positivity condition of the
    density holds (it is reported, not enforced).
    """

    lower: object
    upper: object
    ensemble: str
    alpha: object
    beta: object
    n: object
    positive: bool


def _check_common(alpha, n):
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    if not n >= 1:
        raise DomainError(f"n must be at least 1, got {n}")


def _bracketed_newton(g, dg, lo, hi, x0, rtol):
    """Root of g in [lo, hi] (g(lo) < 0 < g(hi)) by Newton, falling back to bisection."""
    x = x0 if lo < x0 < hi else (lo + hi) / 2
    for _ in range(400):
        gx = g(x)
        if gx == 0:
            return x
        if gx < 0:
            lo = x
        else:
            hi = x
        d = dg(x)
        step = gx / d if d != 0 else None
        nxt = x - step if step is not None else None
        if nxt is None or not lo < nxt < hi:
            nxt = (lo + hi) / 2
        if abs(nxt - x) <= rtol * abs(nxt) or hi - lo <= rtol * abs(hi):
            return nxt
        x = nxt
    return x


def _rtol(rtol, ctx):
    # default: converge to the working precision, never looser than 1e-14
    if rtol is None:
        return min(mp.mpf("1e-14"), mp.mpf(2) ** (4 - ctx.mantissa_bits))
    return mp.mpf(rtol)


# --------------------------------------------------------------- LUE

def lue_cubic_residual(b, t, alpha, n):
    """Relative residual of b (b - 2(2n+alpha) - t)^2 = 4 alpha^2 t, with 20 guard bits."""
    with mp.workprec(mp.mp.prec + 20):
        return _lue_cubic_residual(*(mp.mpf(v) for v in (b, t, alpha, n)))


def _lue_cubic_residual(b, t, alpha, n):
    lhs = b * (b - (4 * n + 2 * alpha + t)) ** 2
    rhs = 4 * alpha * alpha * t
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale else mp.mpf(0)


def lue_endpoint(t, alpha, n, ctx: PrecisionContext = DOUBLE, *, rtol=None):
    """Right endpoint b of the Laguerre fluid on (t, b).

    b is the root of the cubic that also satisfies the normalization
    b - c + 2 alpha sqrt(t/b) = 0 with c = 4n + 2 alpha + t. That root lies in
    (t, c) for alpha > 0 and just above c for alpha < 0; it is unique there
    and continuous with the large-n expansion. The offset d = b - c is solved
    for directly, since it is small and carries the information.
    """
    _check_common(alpha, n)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    with ctx.workprec():
        t, al, n = mp.mpf(t), mp.mpf(alpha), mp.mpf(n)
        c = 4 * n + 2 * al + t
        if t == 0 or al == 0:
            return c
        if not c > t:
            raise DomainError("no admissible fluid endpoint for these parameters")

        def g(d):
            return d + 2 * al * mp.sqrt(t / (c + d))

        def dg(d):
            return 1 - al * mp.sqrt(t) / (c + d) ** mp.mpf(1.5)

        if al > 0:
            lo, hi = t - c, mp.mpf(0)
        else:
            lo, hi = mp.mpf(0), 4 * abs(al) * mp.sqrt(t / c)
        if not (g(lo) < 0 < g(hi)):
            raise DomainError("no admissible fluid endpoint for these parameters")
        seed = lue_endpoint_series(t, al, n, ctx=ctx) - c
        return c + _bracketed_newton(g, dg, lo, hi, seed, _rtol(rtol, ctx))


_BT_TERMS = (
    # (power of n^(-1/2), coefficient as a function of (alpha, sqrt t))
    (1, lambda a, r: -a * r),
    (3, lambda a, r: (a * r ** 3 + 2 * a * a * r) / 8),
    (4, lambda a, r: -a * a * r * r / 8),
    (5, lambda a, r: -3 * (a * r ** 5 + 4 * a * a * r ** 3 + 4 * a ** 3 * r) / 128),
    (6, lambda a, r: (a * a * r ** 4 + 2 * a ** 3 * r * r) / 16),
)


def _bt_next(a, r):
    # n^(-7/2) coefficient, obtained by continuing the expansion of the cubic
    t = r * r
    return 5 * a * r * (8 * a ** 3 + 4 * a * a * t + 6 * a * t * t + t ** 3) / 1024


def lue_endpoint_series(t, alpha, n, scaled=False, ctx: PrecisionContext = DOUBLE, *, full_output=False):
    """Large-n expansion of the Laguerre fluid endpoint.

    Unscaled: through n^(-3) at fixed t. ``scaled``: with s = 4 n t held
    fixed, through n^(-3). With ``full_output`` the magnitude of the first
    omitted term (n^(-7/2), resp. n^(-4)) is returned as well.
    """
    with ctx.workprec():
        t, a, n = mp.mpf(t), mp.mpf(alpha), mp.mpf(n)
        if scaled:
            s = 4 * n * t
            r = mp.sqrt(s)
            value = (4 * n + 2 * a + (s / 4 - a * r / 2) / n + a * a * r / 8 / n ** 2
                     + (a * s * r / 64 - a * a * s / 32 - 3 * a ** 3 * r / 64) / n ** 3)
            nxt = a * a * (5 * a * a * r + 8 * a * s - 3 * s * r) / 256 / n ** 4
        else:
            r = mp.sqrt(t)
            inv = 1 / mp.sqrt(n)
            value = 4 * n + 2 * a + t + mp.fsum(f(a, r) * inv ** p for p, f in _BT_TERMS)
            nxt = _bt_next(a, r) * inv ** 7
        return (value, abs(nxt)) if full_output else value


def lue_support(t, alpha, n, ctx: PrecisionContext = DOUBLE) -> FluidSupport:
    b = lue_endpoint(t, alpha, n, ctx)
    with ctx.workprec():
        positive = alpha <= 0 or mp.sqrt(mp.mpf(t) * b) > alpha
    return FluidSupport(mp.mpf(t), b, "lue", alpha, None, n, bool(positive))


def lue_density(x, t, alpha, n, ctx: PrecisionContext = DOUBLE, *, endpoint=None):
    """Equilibrium density (1/2pi) sqrt((b-x)/(x-t)) (1 - (alpha/x) sqrt(t/b))."""
    with ctx.workprec():
        x, t, al = mp.mpf(x), mp.mpf(t), mp.mpf(alpha)
        b = lue_endpoint(t, al, n, ctx) if endpoint is None else mp.mpf(endpoint)
        if not t < x < b:
            raise DomainError(f"x={x} lies outside the support ({t}, {b})")
        return mp.sqrt((b - x) / (x - t)) * (1 - al / x * mp.sqrt(t / b)) / (2 * mp.pi)


# --------------------------------------------------------------- JUE

def jue_quartic_residual(b, t, alpha, beta, n):
    """Relative residual of the degree-four endpoint equation, with 20 guard bits."""
    with mp.workprec(mp.mp.prec + 20):
        return _jue_quartic_residual(*(mp.mpf(v) for v in (b, t, alpha, beta, n)))


def _jue_quartic_residual(b, t, alpha, beta, n):
    a2, b2 = alpha * alpha, beta * beta
    inner = (2 * n + alpha + beta) ** 2 * b * (1 - b) - a2 * t * (1 - b) - b2 * (1 - t) * b
    rhs = 4 * a2 * b2 * t * (1 - t) * b * (1 - b)
    lhs = inner * inner
    scale = max(abs(lhs), abs(rhs), ((2 * n + alpha + beta) ** 2 * b * (1 - b)) ** 2)
    return abs(lhs - rhs) / scale if scale else mp.mpf(0)


def jue_endpoint(t, alpha, beta, n, ctx: PrecisionContext = DOUBLE, *, rtol=None):
    """Right endpoint b of the Jacobi fluid on (t, b), t < b < 1.

    Solves the normalization alpha sqrt(t/b) + beta sqrt((1-t)/(1-b)) = 2n +
    alpha + beta, whose root in (t, 1) is unique, starting from
    1 - beta^2 (1-t)/(2n+alpha+beta)^2.
    """
    _check_common(alpha, n)
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not 0 <= t < 1:
        raise DomainError(f"t must lie in [0, 1), got {t}")
    with ctx.workprec():
        t, al, be, n = mp.mpf(t), mp.mpf(alpha), mp.mpf(beta), mp.mpf(n)
        total = 2 * n + al + be
        seed = 1 - be * be * (1 - t) / total ** 2
        if t == 0:
            return seed

        # in q = 1 - b the normalization is smoother near the root
        def g(q):
            return -(al * mp.sqrt(t / (1 - q)) + be * mp.sqrt((1 - t) / q) - total)

        def dg(q):
            return -(al * mp.sqrt(t) / (2 * (1 - q) ** mp.mpf(1.5)) - be * mp.sqrt(1 - t) / (2 * q ** mp.mpf(1.5)))

        # g(0+) = -inf, g(1-t) = 2n > 0
        lo, hi = mp.mpf(2) ** (-mp.mp.prec), 1 - t
        while not g(lo) < 0:
            lo /= 2
            if lo == 0:
                raise DomainError("no admissible fluid endpoint for these parameters")
        q = _bracketed_newton(g, dg, lo, hi, 1 - seed, _rtol(rtol, ctx))
        return 1 - q


def jue_support(t, alpha, beta, n, ctx: PrecisionContext = DOUBLE) -> FluidSupport:
    b = jue_endpoint(t, alpha, beta, n, ctx)
    with ctx.workprec():
        t = mp.mpf(t)
        positive = beta * mp.sqrt(t * b) > alpha * mp.sqrt((1 - t) * (1 - b))
    return FluidSupport(t, b, "jue", alpha, beta, n, bool(positive))


def jue_density(x, t, alpha, beta, n, ctx: PrecisionContext = DOUBLE, *, endpoint=None):
    with ctx.workprec():
        x, t, al, be = mp.mpf(x), mp.mpf(t), mp.mpf(alpha), mp.mpf(beta)
        b = jue_endpoint(t, al, be, n, ctx) if endpoint is None else mp.mpf(endpoint)
        if not t < x < b:
            raise DomainError(f"x={x} lies outside the support ({t}, {b})")
        bracket = -al / x * mp.sqrt(t / b) + be / (1 - x) * mp.sqrt((1 - t) / (1 - b))
        return mp.sqrt((b - x) / (x - t)) * bracket / (2 * mp.pi)


def density_normalization(ensemble, t, alpha, n, ctx: PrecisionContext = DOUBLE, *, beta=None, tol=1e-12):
    """Integral of the equilibrium density over its support (should equal n)."""
    ensemble = ensemble.lower()
    with ctx.workprec():
        if ensemble == "lue":
            b = lue_endpoint(t, alpha, n, ctx)
            f = lambda x: lue_density(x, t, alpha, n, ctx, endpoint=b)  # noqa: E731
        elif ensemble == "jue":
            b = jue_endpoint(t, alpha, beta, n, ctx)
            f = lambda x: jue_density(x, t, alpha, beta, n, ctx, endpoint=b)  # noqa: E731
        else:
            raise DomainError(f"unknown ensemble {ensemble!r}")
        return integrate_adaptive(f, t, b, tol, ctx)


# --------------------------------------------------------------- P_n approximations

def lue_ratio_limit(s, alpha, ctx: PrecisionContext = DOUBLE):
    """Large-n limit of log|P_n(0; s/4n)| - log|P_n(0; 0)| for the Laguerre weight."""
    with ctx.workprec():
        s, al = mp.mpf(s), mp.mpf(alpha)
        return mp.loggamma(1 + al) - mp.log(2 * mp.pi) / 2 + mp.sqrt(s) - (al / 2 + mp.mpf(1) / 4) * mp.log(s)


def _lue_fluid_log(t, al, n, ctx):
    b = lue_endpoint(t, al, n, ctx)
    q = (b / t) ** mp.mpf(0.25) + (t / b) ** mp.mpf(0.25)
    rb, rt = mp.sqrt(b), mp.sqrt(t)
    log_s1 = mp.log(q / 2)
    log_s2 = -(n + al) * mp.log(4) + 2 * n * mp.log(rb + rt) + 2 * al * mp.log(q) - ((rb - rt) / 2) ** 2
    return log_s1 + log_s2


def _jue_fluid_log(point, t, al, be, n, ctx):
    b = jue_endpoint(t, al, be, n, ctx)
    rt, rb = mp.sqrt(t), mp.sqrt(b)
    ct, cb = mp.sqrt(1 - t), mp.sqrt(1 - b)
    mixed = mp.log(1 - (rt * rb - ct * cb) ** 2)
    if point == 0:
        q = (b / t) ** mp.mpf(0.25) + (t / b) ** mp.mpf(0.25)
        return (mp.log(q / 2) - (2 * n + 2 * al + be) * mp.log(2) + (2 * n + 2 * al + be) * mp.log(rt + rb)
                - al / 2 * mp.log(t * b) - be / 2 * mixed + be * mp.log(ct + cb))
    q = ((1 - b) / (1 - t)) ** mp.mpf(0.25) + ((1 - t) / (1 - b)) ** mp.mpf(0.25)
    return (mp.log(q / 2) - (2 * n + al + 2 * be) * mp.log(2) + (2 * n + al + 2 * be) * mp.log(ct + cb)
            + al * mp.log(rt + rb) - al / 2 * mixed - be / 2 * mp.log((1 - t) * (1 - b)))


def approx_pn(ensemble, point, t, n, ctx: PrecisionContext = DOUBLE, *, alpha=0, beta=None, form="fixed"):
    """Leading-order Coulomb-fluid approximation of log |P_n(point)|.

    ``form`` selects the expression:

    ``"fluid"``
        exp(-S1 - S2) with the endpoint b solved exactly;
    ``"fixed"``
        its large-n form at fixed t;
    ``"scaled"``
        the double-scaled form, s = 4nt (Laguerre) or s = 4n^2 t (Jacobi).

    The sign of P_n(0) is (-1)^n; P_n(1) is positive. Point 1 exists only for
    the Jacobi weight.
    """
    ensemble = ensemble.lower()
    if point not in (0, 1):
        raise DomainError("point must be 0 or 1")
    if form not in ("fluid", "fixed", "scaled"):
        raise DomainError(f"unknown form {form!r}")
    with ctx.workprec():
        t, al, n = mp.mpf(t), mp.mpf(alpha), mp.mpf(n)
        if not t > 0:
            raise DomainError("the approximations need t > 0")
        if ensemble == "lue":
            if point != 0:
                raise DomainError("the Laguerre approximation is only available at x = 0")
            if form == "fluid":
                return _lue_fluid_log(t, al, n, ctx)
            if form == "fixed":
                return (-(al / 2 + mp.mpf(1) / 4) * mp.log(4 * t) + (n + al / 2 + mp.mpf(1) / 4) * mp.log(n)
                        - n + mp.sqrt(4 * n * t))
            s = 4 * n * t
            return -(al / 2 + mp.mpf(1) / 4) * mp.log(s) + (n + al + mp.mpf(1) / 2) * mp.log(n) - n + mp.sqrt(s)
        if ensemble != "jue":
            raise DomainError(f"unknown ensemble {ensemble!r}")
        if beta is None or not beta > 0:
            raise DomainError("the Jacobi approximation needs beta > 0")
        be = mp.mpf(beta)
        if not t < 1:
            raise DomainError("t must lie in (0, 1)")
        if form == "fluid":
            return _jue_fluid_log(point, t, al, be, n, ctx)
        log2 = mp.log(2)
        rt = mp.sqrt(t)
        if point == 0:
            if form == "fixed":
                return (-(2 * n + 2 * al + be + 1) * log2 + mp.log(t ** mp.mpf(-0.25) + t ** mp.mpf(0.25))
                        + (2 * n + 2 * al + be) * mp.log1p(rt) - al / 2 * mp.log(t))
            s = 4 * n * n * t
            return (-(2 * n + al + be + mp.mpf(1) / 2) * log2 + mp.sqrt(s) - (al / 2 + mp.mpf(1) / 4) * mp.log(s)
                    + (al + mp.mpf(1) / 2) * mp.log(n))
        common = (-(2 * n + al + be + mp.mpf(1) / 2) * log2 + (be + mp.mpf(1) / 2) * mp.log(n)
                  - (be + mp.mpf(1) / 2) * mp.log(be) + be)
        if form == "fixed":
            return common + n * mp.log1p(-t) + al * mp.log1p(rt)
        return common


# --------------------------------------------------------------- integral identities

def _c(a, b):
    return mp.sqrt((1 - a) * (1 - b))


def _mixed(a, b):
    return 1 - (mp.sqrt(a * b) - _c(a, b)) ** 2


# id -> (description, integrand numerator f(x), closed form F(a, b), needs b < 1)
APPENDIX_IDENTITIES = {
    1: ("1", lambda x: 1, lambda a, b: mp.pi, False),
    2: ("x", lambda x: x, lambda a, b: (a + b) * mp.pi / 2, False),
    3: ("1/x", lambda x: 1 / x, lambda a, b: mp.pi / mp.sqrt(a * b), False),
    4: ("1/x^2", lambda x: 1 / (x * x), lambda a, b: (a + b) * mp.pi / (2 * (a * b) ** mp.mpf(1.5)), False),
    5: ("1/(1-x)", lambda x: 1 / (1 - x), lambda a, b: mp.pi / _c(a, b), True),
    6: ("log(1-x)", lambda x: mp.log1p(-x),
        lambda a, b: 2 * mp.pi * mp.log((mp.sqrt(1 - a) + mp.sqrt(1 - b)) / 2), True),
    7: ("log(1-x)/x", lambda x: mp.log1p(-x) / x,
        lambda a, b: mp.pi / mp.sqrt(a * b) * mp.log(_mixed(a, b) / (mp.sqrt(a) + mp.sqrt(b)) ** 2), True),
    8: ("log(x)", lambda x: mp.log(x), lambda a, b: 2 * mp.pi * mp.log((mp.sqrt(a) + mp.sqrt(b)) / 2), False),
    9: ("log(x)/x", lambda x: mp.log(x) / x,
        lambda a, b: 2 * mp.pi / mp.sqrt(a * b) * mp.log(2 * mp.sqrt(a * b) / (mp.sqrt(a) + mp.sqrt(b))), False),
    10: ("log(x)/(x-1)", lambda x: mp.log(x) / (x - 1),
         lambda a, b: mp.pi * mp.log((mp.sqrt(1 - a) + mp.sqrt(1 - b)) ** 2 / _mixed(a, b)) / _c(a, b), True),
    11: ("log(1-x)/(x-1)", lambda x: mp.log1p(-x) / (x - 1),
         lambda a, b: 2 * mp.pi * mp.log(1 / (2 * mp.sqrt(1 - a)) + 1 / (2 * mp.sqrt(1 - b))) / _c(a, b), True),
}


def appendix_identity_check(identity, a, b, ctx: PrecisionContext = DOUBLE, *, tol=None) -> ResidualReport:
    """Compare int_a^b f(x) dx / sqrt((b-x)(x-a)) by quadrature with its closed form.

    With x = a + (b-a) sin^2(theta) the weight becomes 2 dtheta on (0, pi/2),
    so the quadrature sees a smooth integrand.
    """
    if identity not in APPENDIX_IDENTITIES:
        raise DomainError(f"identity must be one of {sorted(APPENDIX_IDENTITIES)}, got {identity}")
    label, f, closed, needs_unit = APPENDIX_IDENTITIES[identity]
    with ctx.workprec():
        a, b = mp.mpf(a), mp.mpf(b)
        if not 0 < a < b:
            raise DomainError(f"need 0 < a < b, got a={a}, b={b}")
        if needs_unit and not b < 1:
            raise DomainError(f"identity {identity} needs b < 1")
        width = b - a
        tol = ctx.tol if tol is None else mp.mpf(tol)
        quad = integrate_adaptive(lambda th: 2 * f(a + width * mp.sin(th) ** 2), 0, mp.pi / 2, tol, ctx,
                                  endpoint_substitution=False)
        exact = closed(a, b)
        return ResidualReport(f"APPENDIX_{identity}", {"integrand": label, "a": a, "b": b},
                              abs(quad - exact), max(abs(quad), abs(exact)))
