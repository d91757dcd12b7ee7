"""Gauss-Legendre rules and a panel-adaptive integrator at arbitrary precision."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import mpmath as mp

from .errors import ConvergenceError, DomainError
from .specfun import DOUBLE, PrecisionContext

__all__ = ["QuadRule", "gauss_legendre", "map_rule", "integrate_adaptive"]


@dataclass(frozen=True)
class QuadRule:
    nodes: tuple
    weights: tuple
    order: int
    interval: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise DomainError("nodes and weights differ in length")

    def apply(self, f):
        """Sum of weights times ``f(node)``."""
        return mp.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


_gl_cache: dict[tuple[int, int], QuadRule] = {}
_gl_lock = threading.Lock()


def _legendre_and_derivative(m, x):
    p0, p1 = mp.mpf(1), x
    for j in range(2, m + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    return p1, m * (x * p1 - p0) / (x * x - 1)


def _compute_gl(m, bits):
    if m == 1:
        return (mp.mpf(0),), (mp.mpf(2),)
    with mp.workprec(bits + 20):
        tiny = mp.mpf(2) ** (-bits - 10)
        half = (m + 1) // 2
        xs, ws = [None] * m, [None] * m
        for k in range(1, half + 1):
            x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (m + mp.mpf(1) / 2))
            for _ in range(200):
                p, dp = _legendre_and_derivative(m, x)
                dx = p / dp
                x -= dx
                if abs(dx) < tiny:
                    break
            _, dp = _legendre_and_derivative(m, x)
            w = 2 / ((1 - x * x) * dp * dp)
            # k-th largest root; store ascending and mirror
            xs[m - k], ws[m - k] = x, w
            xs[k - 1], ws[k - 1] = -x, w
        if m % 2 == 1:
            xs[half - 1] = mp.mpf(0)
    with mp.workprec(bits):
        return tuple(+x for x in xs), tuple(+w for w in ws)


def gauss_legendre(m: int, ctx: PrecisionContext = DOUBLE) -> QuadRule:
    """m-point Gauss-Legendre rule on (-1, 1), nodes by Newton iteration."""
    if int(m) != m or m < 1:
        raise DomainError(f"rule order must be a positive integer, got {m}")
    m = int(m)
    key = (m, ctx.mantissa_bits)
    with _gl_lock:
        rule = _gl_cache.get(key)
    if rule is None:
        xs, ws = _compute_gl(m, ctx.mantissa_bits)
        rule = QuadRule(xs, ws, m, (mp.mpf(-1), mp.mpf(1)))
        with _gl_lock:
            _gl_cache[key] = rule
    return rule


def map_rule(rule: QuadRule, lo, hi) -> QuadRule:
    """Affine image of ``rule`` onto (lo, hi)."""
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    if not (mp.isfinite(lo) and mp.isfinite(hi)) or not lo < hi:
        raise DomainError(f"need finite lo < hi, got ({lo}, {hi})")
    a, b = rule.interval
    scale = (hi - lo) / (b - a)
    nodes = tuple(lo + (x - a) * scale for x in rule.nodes)
    weights = tuple(w * scale for w in rule.weights)
    return QuadRule(nodes, weights, rule.order, (lo, hi))


def _panel(f, a, b, low, high):
    half, mid = (b - a) / 2, (a + b) / 2
    coarse = half * mp.fsum(w * f(mid + half * x) for x, w in zip(low.nodes, low.weights))
    fine = half * mp.fsum(w * f(mid + half * x) for x, w in zip(high.nodes, high.weights))
    return fine, abs(fine - coarse)


def integrate_adaptive(f, lo, hi, tol, ctx: PrecisionContext = DOUBLE, *, order=None,
                       endpoint_substitution=True, max_panels=4096, full_output=False):
    """Integrate ``f`` over (lo, hi); ``hi`` may be ``+inf``.

    The interval is first mapped to a finite parameter range: ``x = lo + u/(1-u)``
    when ``hi`` is infinite, then ``x = lo + (hi - lo) sin^2(theta)`` when
    ``endpoint_substitution`` is set, which removes inverse square-root endpoint
    behaviour. Panels are bisected, worst first, until the summed estimate
    ``|I_2m - I_m|`` falls below ``tol``.

    Returns the integral, or ``(value, error_estimate, panel_count)`` when
    ``full_output`` is true.

    Raises
    ------
    ConvergenceError
        When ``max_panels`` is reached; ``best`` and ``error`` are attached.
    """
    with ctx.workprec():
        lo = mp.mpf(lo)
        hi = mp.inf if hi == mp.inf or hi == float("inf") else mp.mpf(hi)
        tol = mp.mpf(tol)
        if not tol > 0:
            raise DomainError("tol must be positive")
        if not mp.isfinite(lo):
            raise DomainError("lower limit must be finite")
        if not hi > lo:
            raise DomainError(f"need lo < hi, got ({lo}, {hi})")

        g = f
        a0, b0 = lo, hi
        if hi == mp.inf:
            base = lo

            def g(u, _f=f):
                if u >= 1:
                    return mp.mpf(0)
                v = 1 - u
                return _f(base + u / v) / (v * v)

            a0, b0 = mp.mpf(0), mp.mpf(1)
        if endpoint_substitution:
            inner, left, width = g, a0, b0 - a0

            def g(theta, _g=inner):
                s, c = mp.sin(theta), mp.cos(theta)
                jac = 2 * width * s * c
                if jac == 0:
                    return mp.mpf(0)
                return _g(left + width * s * s) * jac

            a0, b0 = mp.mpf(0), mp.pi / 2

        m = order or max(10, ctx.mantissa_bits // 10)
        low, high = gauss_legendre(m, ctx), gauss_legendre(2 * m, ctx)

        panels = {}
        value, err = _panel(g, a0, b0, low, high)
        panels[(a0, b0)] = (value, err)
        while True:
            total_err = mp.fsum(e for _, e in panels.values())
            if total_err <= tol:
                break
            if len(panels) >= max_panels:
                best = mp.fsum(v for _, (v, _) in sorted(panels.items()))
                raise ConvergenceError(
                    f"adaptive quadrature exhausted {max_panels} panels (error estimate {mp.nstr(total_err, 3)})",
                    best=best, error=total_err)
            worst = max(panels, key=lambda k: panels[k][1])
            a, b = worst
            del panels[worst]
            mid = (a + b) / 2
            panels[(a, mid)] = _panel(g, a, mid, low, high)
            panels[(mid, b)] = _panel(g, mid, b, low, high)
        value = mp.fsum(v for _, (v, _) in sorted(panels.items()))
        if full_output:
            return value, total_err, len(panels)
        return value
