"""Finite-n engine: moments, Hankel determinants and recurrences for deformed weights.

Four weight families are supported:

* ``laguerre``: x^alpha e^{-x} on [t, inf)
* ``jacobi``: x^alpha (1-x)^beta on [t, 1]
* ``gap_hermite``: e^{-x^2} on the real line minus (-a, a)
* ``gap_sym_jacobi``: (1-x^2)^beta on [-1, 1] minus (-a, a)

Two independent routes reach the same Hankel determinant. The moment route
builds (mu_{i+j}) and factors it by Cholesky; its pivots are the squared norms
h_k. It loses roughly n^2 digits, so it is only usable for small n at raised
precision. The recurrence route runs a discretized Stieltjes procedure on a
panel Gauss-Legendre rule and accumulates log h_k directly; it stays stable for
n in the hundreds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .errors import ConsistencyError, DomainError, PrecisionInsufficientError, SingularityError
from .painleve import ResidualReport
from .quadrature import gauss_legendre
from .specfun import DOUBLE, PrecisionContext, beta_incomplete, gamma_upper, log_barnes_g

__all__ = [
    "WeightSpec",
    "RecurrenceTable",
    "HankelResult",
    "moments",
    "hankel_log_det",
    "baseline_log_det",
    "stieltjes_recurrence",
    "eval_monic",
    "log_abs_monic",
    "finite_probability",
    "pn_at_point",
    "log_abs_pn_at_point",
    "rn_quantity",
    "hn_quantity",
    "log_prob_derivatives",
    "gue_sigma_n",
    "lue_h_derivatives",
    "jue_sigma_n",
    "jue_scaled_sigma",
    "doubling_check",
    "recommended_bits",
]

FAMILIES = ("laguerre", "jacobi", "gap_hermite", "gap_sym_jacobi")


@dataclass(frozen=True)
class WeightSpec:
    """A weight family together with its gap parameter.

    Use the named constructors rather than calling this directly.
    ``gap`` is t for the one-sided families and a for the symmetric ones.
    """

    family: str
    alpha: object = None
    beta: object = None
    gap: object = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown weight family {self.family!r}")
        if self.family in ("laguerre", "jacobi") and not self.alpha > -1:
            raise DomainError(f"alpha must exceed -1, got {self.alpha}")
        if self.family in ("jacobi", "gap_sym_jacobi") and not self.beta > -1:
            raise DomainError(f"beta must exceed -1, got {self.beta}")
        if not self.gap >= 0:
            raise DomainError(f"gap parameter must be nonnegative, got {self.gap}")
        if self.family in ("jacobi", "gap_sym_jacobi") and not self.gap < 1:
            raise DomainError(f"gap parameter must be below 1 for Jacobi weights, got {self.gap}")

    @classmethod
    def deformed_laguerre(cls, alpha, t=0):
        return cls("laguerre", alpha, None, t)

    @classmethod
    def deformed_jacobi(cls, alpha, beta, t=0):
        return cls("jacobi", alpha, beta, t)

    @classmethod
    def gap_hermite(cls, a=0):
        return cls("gap_hermite", None, None, a)

    @classmethod
    def gap_symmetric_jacobi(cls, beta, a=0):
        return cls("gap_sym_jacobi", None, beta, a)

    @property
    def even(self) -> bool:
        return self.family in ("gap_hermite", "gap_sym_jacobi")

    def with_gap(self, gap) -> "WeightSpec":
        return WeightSpec(self.family, self.alpha, self.beta, gap)

    def with_params(self, alpha=None, beta=None) -> "WeightSpec":
        return WeightSpec(self.family,
                          self.alpha if alpha is None else alpha,
                          self.beta if beta is None else beta,
                          self.gap)

    def __call__(self, x):
        """Weight value at x (zero off the support)."""
        x = mp.mpf(x)
        g = mp.mpf(self.gap)
        if self.family == "laguerre":
            return x ** self.alpha * mp.exp(-x) if x >= g else mp.mpf(0)
        if self.family == "jacobi":
            return x ** self.alpha * (1 - x) ** self.beta if g <= x <= 1 else mp.mpf(0)
        if self.family == "gap_hermite":
            return mp.exp(-x * x) if abs(x) >= g else mp.mpf(0)
        return (1 - x * x) ** self.beta if g <= abs(x) <= 1 else mp.mpf(0)


@dataclass(frozen=True)
class RecurrenceTable:
    """Three-term recurrence data for the monic orthogonal polynomials of ``weight``.

    ``alpha[k]`` for k < max_degree; ``beta[k]`` with ``beta[0] = h_0`` by
    convention; ``log_h[k]`` the log squared norms; ``p[k]`` the sub-leading
    coefficients for k <= max_degree.
    """

    weight: WeightSpec
    max_degree: int
    alpha: tuple
    beta: tuple
    log_h: tuple
    p: tuple
    order: int = 0
    error: object = None
    bits: int = 53

    @property
    def h(self):
        with mp.workprec(self.bits):
            return tuple(mp.exp(v) for v in self.log_h)

    def log_det(self, n=None):
        """log of the n x n Hankel determinant, sum of log h_k."""
        n = self.max_degree if n is None else n
        with mp.workprec(self.bits):
            return mp.fsum(self.log_h[:n])


@dataclass(frozen=True)
class HankelResult:
    weight: WeightSpec
    n: int
    log_det: object
    ctx: PrecisionContext
    log_h: tuple = ()


def recommended_bits(n: int) -> int:
    """Rule-of-thumb precision for an n x n moment determinant."""
    return 53 + math.ceil(3.5 * n * n)


def _mp(v):
    return mp.mpf(v) if not isinstance(v, mp.mpf) else v


# ---------------------------------------------------------------- moments

def moments(w: WeightSpec, count: int, ctx: PrecisionContext = DOUBLE):
    """mu_0 .. mu_{count-1} of ``w``."""
    if count < 1:
        raise DomainError("count must be at least 1")
    with ctx.workprec():
        g = _mp(w.gap)
        out = []
        for k in range(count):
            if w.family == "laguerre":
                out.append(gamma_upper(k + _mp(w.alpha) + 1, g, ctx))
            elif w.family == "jacobi":
                out.append(beta_incomplete(k + _mp(w.alpha) + 1, _mp(w.beta) + 1, g, ctx))
            elif k % 2:
                out.append(mp.mpf(0))
            elif w.family == "gap_hermite":
                out.append(gamma_upper(mp.mpf(k // 2) + mp.mpf(1) / 2, g * g, ctx))
            else:
                out.append(beta_incomplete(mp.mpf(k // 2) + mp.mpf(1) / 2, _mp(w.beta) + 1, g * g, ctx))
        return out


def _cholesky_pivots(mom, n, shift_moments=None):
    # pivots of the Cholesky factorization of (mu_{i+j}); they equal h_0..h_{n-1}
    L = [[mp.mpf(0)] * n for _ in range(n)]
    pivots = []
    for j in range(n):
        d = mom[2 * j] - mp.fsum(L[j][k] ** 2 for k in range(j))
        if not d > 0:
            return pivots, False
        pivots.append(d)
        ljj = mp.sqrt(d)
        L[j][j] = ljj
        for i in range(j + 1, n):
            L[i][j] = (mom[i + j] - mp.fdot(L[i][:j], L[j][:j])) / ljj
    return pivots, True


# bits a Hankel result must keep before it is returned
MIN_GOOD_BITS = 24


def hankel_bits_lost(mom, pivots):
    """Estimated bits lost to cancellation in a moment Cholesky.

    Pivot j is mu_{2j} minus a sum of squares; log2(mu_{2j}/h_j) bits cancel
    there. Errors in earlier columns feed later ones, and measured losses stay
    below 1.5 times the worst single-pivot cancellation plus 8 bits.
    """
    if not pivots:
        return 0.0
    worst = max(float(mp.log(mom[2 * j] / p, 2)) for j, p in enumerate(pivots))
    return 1.5 * max(worst, 0.0) + 8


def _hankel_from_moments(mom, n, ctx, what="Hankel determinant"):
    pivots, ok = _cholesky_pivots(mom, n)
    lost = hankel_bits_lost(mom, pivots)
    if not ok or ctx.mantissa_bits - lost < MIN_GOOD_BITS:
        need = max(math.ceil(lost) + 53, recommended_bits(n) if not ok else 0, ctx.mantissa_bits + 1)
        reason = "lost positivity" if not ok else f"lost about {lost:.0f} bits to cancellation"
        raise PrecisionInsufficientError(
            f"{what} of size {n} {reason} at {ctx.mantissa_bits} bits; about {need} bits are needed",
            required_bits=need)
    return [mp.log(p) for p in pivots]


def hankel_log_det(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE, *, check=False) -> HankelResult:
    """log det(mu_{i+j})_{i,j<n} by Cholesky at context precision.

    With ``check`` the value is compared with the Stieltjes product of h_k and
    a :class:`ConsistencyError` is raised on disagreement.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    with ctx.workprec():
        log_h = _hankel_from_moments(moments(w, 2 * n - 1, ctx), n, ctx)
        value = mp.fsum(log_h)
        if check:
            other = stieltjes_recurrence(w, n, ctx).log_det()
            if abs(other - value) > mp.mpf(10) ** -8 * max(1, abs(value)):
                raise ConsistencyError(
                    f"moment determinant {mp.nstr(value, 15)} disagrees with recurrence {mp.nstr(other, 15)}")
        return HankelResult(w, n, value, ctx, tuple(log_h))


def _log_d0_laguerre(n, a):
    return mp.fsum(mp.loggamma(j + 1) + mp.loggamma(j + a + 1) for j in range(n))


def _log_d0_jacobi(n, a, b):
    return mp.fsum(mp.loggamma(j + 1) + mp.loggamma(j + a + 1) + mp.loggamma(j + b + 1)
                   - mp.loggamma(n + j + a + b + 1) for j in range(n))


def baseline_log_det(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE):
    """Closed-form log D_n for the weight with its gap removed."""
    with ctx.workprec():
        if w.family == "laguerre":
            return _log_d0_laguerre(n, _mp(w.alpha))
        if w.family == "jacobi":
            return _log_d0_jacobi(n, _mp(w.alpha), _mp(w.beta))
        if w.family == "gap_hermite":
            return n * mp.log(2 * mp.pi) / 2 - mp.mpf(n) ** 2 / 2 * mp.log(2) + log_barnes_g(n + 1, ctx)
        half = mp.mpf(1) / 2
        b = _mp(w.beta)
        k = n // 2
        return _log_d0_jacobi(n - k, -half, b) + _log_d0_jacobi(k, half, b)


# ------------------------------------------------------- discretization

def _geometric_edges(start, stop):
    edges = []
    e = start
    while e < stop:
        edges.append(e)
        e *= 2
    return edges


def _needs_grading(exponent):
    # integrand behaves like u^exponent at a mapped endpoint
    return mp.nint(exponent) != exponent


def _tail_length(n, bits):
    xi = (0.52 * bits) ** (2.0 / 3.0)
    return 3 * (2 * n) ** (1.0 / 3.0) * xi + 0.7 * bits + 30


def _panels_laguerre(w, n, layout_gap, bits):
    alpha = float(w.alpha)
    L = 4 * n + 2 * abs(alpha) + _tail_length(n, bits)
    top = mp.sqrt(mp.mpf(L))
    tl = mp.mpf(layout_gap)
    if tl > 0:
        h0 = mp.sqrt(tl) / 4
    elif _needs_grading(2 * _mp(w.alpha) + 1):
        h0 = mp.mpf(2) ** (-bits / (2 * alpha + 2) - 2)
    else:
        h0 = mp.mpf(1) / 4
    edges = [mp.mpf(0)] + _geometric_edges(min(h0, mp.mpf(1) / 4), mp.mpf(1))
    width = min(1.0, 12.0 / math.sqrt(n + 1))
    count = max(1, int(math.ceil(float(top - edges[-1]) / width)))
    edges += [edges[-1] + (top - edges[-1]) * k / count for k in range(1, count + 1)]
    return edges


def _panels_jacobi(alpha_exp, beta_exp, n, layout_gap, bits):
    # theta in (0, pi/2); grade toward either end where needed
    tl = mp.mpf(layout_gap)
    if tl > 0:
        left = _geometric_edges(mp.sqrt(tl) / 4, mp.mpf("0.2"))
    elif alpha_exp is not None and _needs_grading(2 * alpha_exp + 1):
        left = _geometric_edges(mp.mpf(2) ** (-bits / (2 * float(alpha_exp) + 2) - 2), mp.mpf("0.2"))
    else:
        left = []
    if _needs_grading(2 * beta_exp + 1):
        right = _geometric_edges(mp.mpf(2) ** (-bits / (2 * float(beta_exp) + 2) - 2), mp.mpf("0.2"))
    else:
        right = []
    lo = left[-1] * 2 if left else mp.mpf(0)
    hi = mp.pi / 2 - (right[-1] * 2 if right else 0)
    lo = min(lo, mp.mpf("0.2"))
    width = min(0.4, 6.0 / (n + 1))
    count = max(2, int(math.ceil(float(hi - lo) / width)))
    mid = [lo + (hi - lo) * k / count for k in range(count + 1)]
    edges = [mp.mpf(0)] + left + mid + [mp.pi / 2 - e for e in reversed(right)] + [mp.pi / 2]
    out = [edges[0]]
    for e in edges[1:]:
        if e > out[-1]:
            out.append(e)
    return out


def _panels_hermite(n, layout_gap, bits):
    top = mp.sqrt(mp.mpf(2 * n + 1 + _tail_length(n, bits) / 2)) + mp.mpf(layout_gap)
    width = min(0.5, 4.0 / math.sqrt(n + 1))
    lo = mp.mpf(layout_gap)
    count = max(2, int(math.ceil(float(top - lo) / width)))
    return [lo + (top - lo) * k / count for k in range(count + 1)]


def discretize(w: WeightSpec, n: int, order: int, ctx: PrecisionContext = DOUBLE, layout_gap=None):
    """Nodes and log-weights of a panel Gauss-Legendre rule for ``w``.

    ``layout_gap`` fixes the panel layout independently of the actual gap so
    that the rule varies smoothly with the gap (needed under finite
    differencing). Even weights are returned over both half-lines.
    """
    with ctx.workprec():
        g = _mp(w.gap)
        layout = g if layout_gap is None else _mp(layout_gap)
        rule = gauss_legendre(order, ctx)
        bits = ctx.mantissa_bits
        xs, lws = [], []

        def panels(edges):
            for a, b in zip(edges[:-1], edges[1:]):
                half, mid = (b - a) / 2, (a + b) / 2
                for u, wt in zip(rule.nodes, rule.weights):
                    yield mid + half * u, half * wt

        if w.family == "laguerre":
            al = _mp(w.alpha)
            for y, wt in panels(_panels_laguerre(w, n, layout, bits)):
                x = g + y * y
                xs.append(x)
                lws.append(al * mp.log(x) - x + mp.log(2 * y * wt))
        elif w.family == "jacobi":
            al, be = _mp(w.alpha), _mp(w.beta)
            for th, wt in panels(_panels_jacobi(al if g == 0 else None, be, n, layout, bits)):
                s, c = mp.sin(th), mp.cos(th)
                x = g + (1 - g) * s * s
                xs.append(x)
                lws.append(al * mp.log(x) + be * mp.log((1 - g) * c * c) + mp.log(2 * (1 - g) * s * c * wt))
        elif w.family == "gap_hermite":
            for x, wt in panels(_panels_hermite(n, layout, bits)):
                xs.append(x)
                lws.append(-x * x + mp.log(wt))
        else:
            be = _mp(w.beta)
            for th, wt in panels(_panels_jacobi(None, be, n, 0, bits)):
                s, c = mp.sin(th), mp.cos(th)
                x = g + (1 - g) * s * s
                xs.append(x)
                lws.append(be * mp.log((1 - g) * c * c * (1 + x)) + mp.log(2 * (1 - g) * s * c * wt))
        if w.even:
            xs = [-x for x in reversed(xs)] + xs
            lws = list(reversed(lws)) + lws
        return xs, lws


def _stieltjes_core(xs, lws, n, even):
    x = np.array(xs, dtype=object)
    shift = max(lws)
    sw = np.array([mp.exp((v - shift) / 2) for v in lws], dtype=object)
    norm2 = np.dot(sw, sw)
    log_h = [mp.log(norm2) + shift]
    q = sw / mp.sqrt(norm2)
    q_prev = None
    alphas, betas = [], [mp.exp(log_h[0])]
    for k in range(n):
        xq = x * q
        a_k = mp.mpf(0) if even else np.dot(xq, q)
        alphas.append(a_k)
        if k == n - 1:
            break
        r = xq if even else xq - a_k * q
        if k > 0:
            r = r - mp.sqrt(betas[k]) * q_prev
        b = np.dot(r, r)
        if not b > 0:
            raise PrecisionInsufficientError(f"recurrence lost positivity at degree {k + 1}")
        betas.append(b)
        log_h.append(log_h[-1] + mp.log(b))
        q_prev, q = q, r / mp.sqrt(b)
    return alphas, betas, log_h


def _table(w, n, alphas, betas, log_h, order, error):
    p = [mp.mpf(0)]
    for a in alphas:
        p.append(p[-1] - a)
    return RecurrenceTable(w, n, tuple(alphas), tuple(betas), tuple(log_h), tuple(p), order, error, mp.mp.prec)


def _table_distance(t1, t2):
    d = mp.mpf(0)
    for a1, a2 in zip(t1.alpha, t2.alpha):
        d = max(d, abs(a1 - a2) / (1 + abs(a2)))
    for l1, l2 in zip(t1.log_h, t2.log_h):
        d = max(d, abs(l1 - l2))
    return d


def stieltjes_recurrence(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE, *, order=None,
                         tol=None, layout_gap=None, max_order=512) -> RecurrenceTable:
    """Recurrence coefficients of degree < n by discretized Stieltjes.

    With a fixed ``order`` a single pass is made. Otherwise the per-panel
    order grows by half until alpha_k and log h_k settle to ``tol``
    (default ``2**(-0.75 * bits)``); the last change is kept in ``error``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    with ctx.workprec():
        if order is not None:
            xs, lws = discretize(w, n, order, ctx, layout_gap)
            return _table(w, n, *_stieltjes_core(xs, lws, n, w.even), order, None)
        tol = mp.mpf(2) ** (-0.75 * ctx.mantissa_bits) if tol is None else mp.mpf(tol)
        m = 16
        prev = None
        while True:
            xs, lws = discretize(w, n, m, ctx, layout_gap)
            cur = _table(w, n, *_stieltjes_core(xs, lws, n, w.even), m, None)
            if prev is not None:
                d = _table_distance(prev, cur)
                if d < tol:
                    return _table(w, n, cur.alpha, cur.beta, cur.log_h, m, d)
            if m >= max_order:
                from .errors import ConvergenceError
                raise ConvergenceError("Stieltjes discretization did not settle", best=cur,
                                       error=_table_distance(prev, cur) if prev else None)
            prev = cur
            m = min(max_order, (3 * m) // 2)


def eval_monic(table: RecurrenceTable, k: int, x):
    """P_k(x) by forward recurrence."""
    if not 0 <= k <= table.max_degree:
        raise DomainError(f"degree {k} outside 0..{table.max_degree}")
    x = _mp(x)
    p_prev, p = mp.mpf(0), mp.mpf(1)
    for j in range(k):
        p_prev, p = p, (x - table.alpha[j]) * p - (table.beta[j] * p_prev if j > 0 else 0)
    return p


def log_abs_monic(table: RecurrenceTable, k: int, z):
    """(log|P_k(z)|, sign) through ratios P_{j+1}/P_j, safe for large k."""
    if not 0 <= k <= table.max_degree:
        raise DomainError(f"degree {k} outside 0..{table.max_degree}")
    z = _mp(z)
    total, sign = mp.mpf(0), 1
    ratio = None
    for j in range(k):
        ratio = (z - table.alpha[j]) - (table.beta[j] / ratio if j > 0 else 0)
        if ratio == 0:
            return -mp.inf, 0
        total += mp.log(abs(ratio))
        sign *= 1 if ratio > 0 else -1
    return total, sign


# ------------------------------------------------------------ probabilities

def _auto_method(n, ctx):
    return "hankel" if ctx.mantissa_bits >= recommended_bits(n) else "recurrence"


def _log_det(w, n, ctx, method, order=None, layout_gap=None):
    if method == "hankel":
        return hankel_log_det(w, n, ctx).log_det
    return stieltjes_recurrence(w, n, ctx, order=order, layout_gap=layout_gap).log_det()


def finite_probability(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE, *, method="auto",
                       order=None, layout_gap=None):
    """log of the gap (or smallest-eigenvalue) probability D_n(w)/D_n(w at zero gap).

    ``method`` is ``'hankel'`` (moment determinant), ``'recurrence'``
    (Stieltjes) or ``'auto'`` (moments when the precision allows it).
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if method == "auto":
        method = _auto_method(n, ctx)
    if method not in ("hankel", "recurrence"):
        raise DomainError(f"unknown method {method!r}")
    with ctx.workprec():
        if w.gap == 0:
            return mp.mpf(0)
        return _log_det(w, n, ctx, method, order, layout_gap) - baseline_log_det(w, n, ctx)


def _shifted_weight(w, z):
    # (x - z) w for z = 0 is x w; (1 - x) w for z = 1
    if w.family == "laguerre":
        return w.with_params(alpha=_mp(w.alpha) + 1)
    if z == 0:
        return w.with_params(alpha=_mp(w.alpha) + 1)
    return w.with_params(beta=_mp(w.beta) + 1)


def pn_at_point(w: WeightSpec, n: int, z, ctx: PrecisionContext = DOUBLE, *, check=True, check_tol=1e-8,
                table=None):
    """P_n(z) for z in {0, 1}, monic and orthogonal for ``w``.

    The recurrence value is returned. With ``check`` it is compared with the
    exact ratio (-1)^n D_n(x w)/D_n(w) at z = 0, or D_n((1-x) w)/D_n(w) at z = 1.
    """
    if z not in (0, 1):
        raise DomainError("z must be 0 or 1")
    if z == 1 and w.family != "jacobi":
        raise DomainError("z = 1 is only meaningful for the Jacobi family")
    if w.family not in ("laguerre", "jacobi"):
        raise DomainError("pn_at_point applies to the Laguerre and Jacobi families")
    with ctx.workprec():
        table = table or stieltjes_recurrence(w, n, ctx)
        value = eval_monic(table, n, z)
        if check:
            ratio = mp.exp(hankel_log_det(_shifted_weight(w, z), n, ctx).log_det
                           - hankel_log_det(w, n, ctx).log_det)
            if z == 0 and n % 2:
                ratio = -ratio
            if abs(ratio - value) > check_tol * abs(ratio):
                raise ConsistencyError(
                    f"P_{n}({z}) recurrence {mp.nstr(value, 15)} vs determinant ratio {mp.nstr(ratio, 15)}")
        return value


def log_abs_pn_at_point(w: WeightSpec, n: int, z, ctx: PrecisionContext = DOUBLE, *, table=None):
    """log|P_n(z)| from the recurrence alone; intended for large n."""
    with ctx.workprec():
        table = table or stieltjes_recurrence(w, n, ctx)
        return log_abs_monic(table, n, z)[0]


def rn_quantity(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE, *, method="auto", order=None,
                layout_gap=None):
    """R_n(t) = P_n(t)^2 t^alpha e^{-t} / h_n for the deformed Laguerre weight."""
    if w.family != "laguerre":
        raise DomainError("R_n is defined for the deformed Laguerre weight")
    if not w.gap > 0:
        raise DomainError("R_n needs t > 0")
    if method == "auto":
        method = _auto_method(n + 1, ctx)
    with ctx.workprec():
        t, al = _mp(w.gap), _mp(w.alpha)
        prefactor = al * mp.log(t) - t
        if method == "hankel":
            mom = moments(w, 2 * n + 1, ctx)
            log_h = _hankel_from_moments(mom, n + 1, ctx)
            if n == 0:
                log_pn2 = mp.mpf(0)
            else:
                shifted = [mom[k + 1] - t * mom[k] for k in range(2 * n - 1)]
                log_shift = mp.fsum(_hankel_from_moments(shifted, n, ctx))
                log_pn2 = 2 * (log_shift - mp.fsum(log_h[:n]))
            return mp.exp(log_pn2 + prefactor - log_h[n])
        table = stieltjes_recurrence(w, n + 1, ctx, order=order, layout_gap=layout_gap)
        pn = eval_monic(table, n, t)
        return pn * pn * mp.exp(prefactor - table.log_h[n])


def _five_point(f, x, h):
    fm2, fm1, f0, f1, f2 = (f(x + k * h) for k in (-2, -1, 0, 1, 2))
    d1 = (fm2 - 8 * fm1 + 8 * f1 - f2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * f1 - f2) / (12 * h * h)
    d3 = (f2 - 2 * f1 + 2 * fm1 - fm2) / (2 * h ** 3)
    return f0, d1, d2, d3


def fd_step(x, ctx: PrecisionContext):
    return _mp(x) * mp.mpf(2) ** (-mp.mpf(ctx.mantissa_bits) / 5)


def _recurrence_order(w, n, ctx):
    # settle the per-panel order once, at the stencil centre
    return stieltjes_recurrence(w, n, ctx).order


def log_prob_derivatives(w: WeightSpec, n: int, ctx: PrecisionContext, *, method="auto", order=None):
    """(L, L', L'', L''') for L = log P as a function of the gap parameter.

    Five-point central differences with step ``gap * 2**(-bits/5)``. On the
    recurrence route the quadrature layout is frozen at the centre.
    """
    if method == "auto":
        method = _auto_method(n, ctx)
    with ctx.workprec():
        x0 = _mp(w.gap)
        if not x0 > 0:
            raise DomainError("derivatives need a positive gap parameter")
        if method == "recurrence" and order is None:
            order = _recurrence_order(w, n, ctx)

        def f(x):
            return finite_probability(w.with_gap(x), n, ctx, method=method, order=order, layout_gap=x0)

        return _five_point(f, x0, fd_step(x0, ctx))


def hn_quantity(w: WeightSpec, n: int, ctx: PrecisionContext = DOUBLE, *, route="auto", method="auto",
                check_tol=1e-6, pole_tol=1e-12):
    """H_n(t) = t d/dt log P for the deformed Laguerre weight.

    ``route='closed'`` uses the expression in R_n and R_n' (R_n' by finite
    differences); ``route='fd'`` differentiates log P directly; ``'auto'``
    uses the closed form, checks it against the direct route, and falls back
    to the direct route when R_n sits at a pole of the formula.
    """
    if w.family != "laguerre":
        raise DomainError("H_n is defined for the deformed Laguerre weight")
    with ctx.workprec():
        t, al = _mp(w.gap), _mp(w.alpha)
        if method == "auto":
            method = _auto_method(n + 1, ctx)

        def direct():
            _, d1, _, _ = log_prob_derivatives(w, n, ctx, method=method)
            return t * d1

        if route == "fd":
            return direct()
        order = _recurrence_order(w, n + 1, ctx) if method == "recurrence" else None
        r, dr, _, _ = _five_point(
            lambda x: rn_quantity(w.with_gap(x), n, ctx, method=method, order=order, layout_gap=t),
            t, fd_step(t, ctx))
        near_pole = abs(r) < pole_tol or abs(1 - r) < pole_tol
        if near_pole:
            if route == "closed":
                raise SingularityError(f"R_n = {mp.nstr(r, 15)} is at a pole of the H_n formula")
            return direct()
        closed = (t * t / 4 * dr * dr / (r * (r - 1)) + t * t / 4 * r * (1 - r)
                  - (n + al / 2) * t * r + al * al / 4 * r / (1 - r))
        if route == "closed":
            return closed
        other = direct()
        if abs(closed - other) > check_tol * max(1, abs(other)):
            raise ConsistencyError(f"H_n closed form {mp.nstr(closed, 15)} vs t dlogP/dt {mp.nstr(other, 15)}")
        return closed


def gue_sigma_n(a, n: int, ctx: PrecisionContext, *, method="auto"):
    """(sigma_n, sigma_n', sigma_n'') with sigma_n = a d/da log P(a, n) for the GUE gap (-a, a)."""
    with ctx.workprec():
        a = _mp(a)
        if not a > 0:
            raise DomainError("a must be positive")
        _, l1, l2, l3 = log_prob_derivatives(WeightSpec.gap_hermite(a), n, ctx, method=method)
        return a * l1, l1 + a * l2, 2 * l2 + a * l3


def lue_h_derivatives(t, n: int, alpha, ctx: PrecisionContext, *, method="auto"):
    """(H_n, H_n', H_n'') from finite differences of log P for the LUE."""
    with ctx.workprec():
        t = _mp(t)
        _, l1, l2, l3 = log_prob_derivatives(WeightSpec.deformed_laguerre(alpha, t), n, ctx, method=method)
        return t * l1, l1 + t * l2, 2 * l2 + t * l3


def jue_sigma_n(t, n: int, alpha, beta, ctx: PrecisionContext, *, method="auto"):
    """(sigma_n, sigma_n', sigma_n'') with sigma_n = t(t-1) d/dt log D_n + d1 t + d2."""
    with ctx.workprec():
        t, al, be = _mp(t), _mp(alpha), _mp(beta)
        _, l1, l2, l3 = log_prob_derivatives(WeightSpec.deformed_jacobi(al, be, t), n, ctx, method=method)
        d1 = -(2 * n + al + be) ** 2 / 4
        d2 = (2 * n * (n + al + be) + be * (al + be)) / 4
        sigma = t * (t - 1) * l1 + d1 * t + d2
        dsigma = (2 * t - 1) * l1 + t * (t - 1) * l2 + d1
        d2sigma = 2 * l1 + 2 * (2 * t - 1) * l2 + t * (t - 1) * l3
        return sigma, dsigma, d2sigma


def jue_scaled_sigma(s, n: int, alpha, beta, ctx: PrecisionContext, *, order=None):
    """(sigma, sigma', sigma'') in s for log P(s/(4 n^2)) of the n x n JUE, recurrence route."""
    with ctx.workprec():
        s = _mp(s)
        scale = 4 * mp.mpf(n) ** 2
        w0 = WeightSpec.deformed_jacobi(alpha, beta, s / scale)
        if order is None:
            order = _recurrence_order(w0, n, ctx)
        lay = s / scale

        def f(x):
            return finite_probability(w0.with_gap(x / scale), n, ctx, method="recurrence", order=order,
                                      layout_gap=lay)

        _, l1, l2, l3 = _five_point(f, s, fd_step(s, ctx))
        return s * l1, l1 + s * l2, 2 * l2 + s * l3


def doubling_check(family: str, a, n: int, ctx: PrecisionContext, *, beta=1, method="recurrence",
                   split_method="hankel") -> ResidualReport:
    """Compare log D_n(a) of a symmetric weight with its two half-line factors.

    ``family`` is ``'gue'`` or ``'symjacobi'``. The half-line weights carry
    x^{-1/2} and x^{+1/2} and live on [a^2, inf) or [a^2, 1]. The symmetric
    side uses ``method`` and the two factors use ``split_method``. With both
    on the Hankel route the identity holds by a permutation of the moment
    matrix, so the default puts the symmetric side on the recurrence.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    with ctx.workprec():
        a = _mp(a)
        k = n // 2
        big, small = n - k, k
        half = mp.mpf(1) / 2
        if family == "gue":
            full = WeightSpec.gap_hermite(a)
            tilde = WeightSpec.deformed_laguerre(-half, a * a)
            hat = WeightSpec.deformed_laguerre(half, a * a)
        elif family == "symjacobi":
            full = WeightSpec.gap_symmetric_jacobi(beta, a)
            tilde = WeightSpec.deformed_jacobi(-half, beta, a * a)
            hat = WeightSpec.deformed_jacobi(half, beta, a * a)
        else:
            raise DomainError(f"unknown family {family!r}")
        m = _auto_method(n, ctx) if method == "auto" else method
        sm = _auto_method(n, ctx) if split_method == "auto" else split_method
        lhs = _log_det(full, n, ctx, m)
        left = _log_det(tilde, big, ctx, sm)
        right = _log_det(hat, small, ctx, sm) if small else mp.mpf(0)
        return ResidualReport(
            f"DOUBLING_{family.upper()}",
            {"a": a, "n": n, "beta": _mp(beta) if family == "symjacobi" else None,
             "method": m, "split_method": sm},
            abs(lhs - left - right), max(abs(lhs), abs(left), abs(right)))
