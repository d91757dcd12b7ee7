"""Fredholm determinants of the sine and Bessel kernels by Nystrom discretization.

``log_det`` builds the symmetrized matrix ``sqrt(w_i) K(x_i, x_j) sqrt(w_j)``
on a mapped Gauss-Legendre rule and sums ``log(1 - lambda)`` over its
eigenvalues. A Cholesky factorization of ``I - M`` is available as an
independent second route.

The Bessel kernel on (0, s) is discretized in ``u = sqrt(x)``. The kernel and
the Jacobian ``2u`` are both smooth in u for every alpha > -1, so the rule
converges spectrally even when J_alpha(sqrt(x)) behaves like sqrt(x).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import mpmath as mp

from .errors import ConsistencyError, ConvergenceError, DomainError, PrecisionInsufficientError
from .quadrature import gauss_legendre, map_rule
from .specfun import DOUBLE, PrecisionContext

__all__ = [
    "KernelSpec",
    "nystrom_matrix",
    "log_det",
    "log_det_converged",
    "scaled_sigma",
    "bessel_kernel",
    "bessel_kernel_diagonal",
    "certify_bessel_diagonal",
]

KINDS = ("sine", "bessel")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel restricted to an interval, with a Nystrom order and precision.

    ``kind`` is ``"sine"`` or ``"bessel"``; ``alpha`` is the Bessel order and is
    ignored for the sine kernel.
    """

    kind: str
    interval: tuple
    quad_order: int = 32
    ctx: PrecisionContext = DOUBLE
    alpha: float = 0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise DomainError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        lo, hi = self.interval
        if not lo < hi:
            raise DomainError(f"interval must satisfy lo < hi, got {self.interval}")
        if kind == "bessel":
            if not self.alpha > -1:
                raise DomainError(f"Bessel order must exceed -1, got {self.alpha}")
            if lo < 0:
                raise DomainError("the Bessel kernel lives on the positive half-line")
        if int(self.quad_order) != self.quad_order or self.quad_order < 4:
            raise DomainError(f"quadrature order must be an integer >= 4, got {self.quad_order}")

    @classmethod
    def sine(cls, b, quad_order=32, ctx: PrecisionContext = DOUBLE):
        """Sine kernel on the symmetric interval (-b, b)."""
        return cls("sine", (-b, b), quad_order, ctx)

    @classmethod
    def bessel(cls, alpha, s, quad_order=32, ctx: PrecisionContext = DOUBLE):
        """Bessel kernel of order ``alpha`` on (0, s)."""
        return cls("bessel", (0, s), quad_order, ctx, alpha)

    def with_order(self, m):
        return KernelSpec(self.kind, self.interval, m, self.ctx, self.alpha)

    def with_endpoint(self, endpoint):
        if self.kind == "sine":
            return KernelSpec.sine(endpoint, self.quad_order, self.ctx)
        return KernelSpec.bessel(self.alpha, endpoint, self.quad_order, self.ctx)


# --------------------------------------------------------------- kernels

def sine_kernel(x, y):
    d = x - y
    if d == 0:
        return 1 / mp.pi
    return mp.sin(d) / (mp.pi * d)


def bessel_kernel(alpha, x, y):
    """Bessel kernel K(x, y) for x != y, from J_alpha and its derivative at sqrt(x), sqrt(y)."""
    u, v = mp.sqrt(x), mp.sqrt(y)
    ju, dju = mp.besselj(alpha, u), mp.besselj(alpha, u, derivative=1)
    jv, djv = mp.besselj(alpha, v), mp.besselj(alpha, v, derivative=1)
    return (ju * v * djv - jv * u * dju) / (2 * (x - y))


def _bessel_diag_from_values(alpha, u, j, dj):
    # l'Hopital on the off-diagonal form, with J'' eliminated by Bessel's equation
    return (dj * dj + (1 - alpha * alpha / (u * u)) * j * j) / 4


def bessel_kernel_diagonal(alpha, x):
    """Limit of the Bessel kernel at x = y, namely (J'^2 + (1 - alpha^2/x) J^2)/4 at sqrt(x)."""
    u = mp.sqrt(x)
    return _bessel_diag_from_values(alpha, u, mp.besselj(alpha, u), mp.besselj(alpha, u, derivative=1))


_certified: dict[tuple, object] = {}
_cert_lock = threading.Lock()


def certify_bessel_diagonal(alpha, ctx: PrecisionContext = DOUBLE, points=(0.5, 2, 7), agreement=1e-10):
    """Compare the diagonal formula with the symmetric limit of K(x, x +- eps).

    The comparison runs with 60 guard bits so the difference quotient is not
    limited by cancellation. Returns the largest relative discrepancy and
    raises ``ConsistencyError`` if it exceeds ``agreement``.
    """
    key = (mp.mpf(alpha), ctx.mantissa_bits, tuple(points), agreement)
    with _cert_lock:
        if key in _certified:
            return _certified[key]
    bits = ctx.mantissa_bits + 60
    with mp.workprec(bits):
        al = mp.mpf(alpha)
        worst = mp.mpf(0)
        for x in points:
            x = mp.mpf(x)
            eps = x * mp.mpf(2) ** (-bits // 3)
            limit = (bessel_kernel(al, x, x + eps) + bessel_kernel(al, x, x - eps)) / 2
            diag = bessel_kernel_diagonal(al, x)
            worst = max(worst, abs(limit - diag) / max(abs(diag), mp.mpf(2) ** -bits))
    if worst > agreement:
        raise ConsistencyError(f"Bessel diagonal formula disagrees with its limit ({mp.nstr(worst, 3)})")
    with _cert_lock:
        _certified[key] = worst
    return worst


# --------------------------------------------------------------- matrices

def nystrom_matrix(spec: KernelSpec):
    """Symmetrized Nystrom matrix of ``spec`` as an ``mpmath.matrix``."""
    ctx, m = spec.ctx, int(spec.quad_order)
    rule = gauss_legendre(m, ctx)
    with ctx.workprec():
        lo, hi = (mp.mpf(v) for v in spec.interval)
        M = mp.matrix(m, m)
        if spec.kind == "sine":
            mapped = map_rule(rule, lo, hi)
            x = mapped.nodes
            root_w = [mp.sqrt(w) for w in mapped.weights]
            for i in range(m):
                M[i, i] = root_w[i] ** 2 / mp.pi
                for j in range(i):
                    M[i, j] = M[j, i] = root_w[i] * root_w[j] * sine_kernel(x[i], x[j])
            return M

        al = mp.mpf(spec.alpha)
        certify_bessel_diagonal(al, ctx)
        mapped = map_rule(rule, mp.sqrt(lo), mp.sqrt(hi))
        u = mapped.nodes
        # dx = 2u du
        root_w = [mp.sqrt(2 * ui * wi) for ui, wi in zip(u, mapped.weights)]
        j = [mp.besselj(al, ui) for ui in u]
        dj = [mp.besselj(al, ui, derivative=1) for ui in u]
        for a in range(m):
            M[a, a] = root_w[a] ** 2 * _bessel_diag_from_values(al, u[a], j[a], dj[a])
            for b in range(a):
                k = (j[a] * u[b] * dj[b] - j[b] * u[a] * dj[a]) / (2 * (u[a] * u[a] - u[b] * u[b]))
                M[a, b] = M[b, a] = root_w[a] * root_w[b] * k
        return M


def _cholesky_log_det(A, n):
    # log det of a symmetric positive definite matrix given as nested access A[i, j]
    L = [[None] * n for _ in range(n)]
    total = []
    for c in range(n):
        d = A[c, c] - mp.fsum(L[c][k] ** 2 for k in range(c))
        if not d > 0:
            raise PrecisionInsufficientError(
                "I - K lost positive definiteness at working precision; raise mantissa_bits")
        root = mp.sqrt(d)
        L[c][c] = root
        total.append(mp.log(d))
        for r in range(c + 1, n):
            L[r][c] = (A[r, c] - mp.fdot(L[r][:c], L[c][:c])) / root
    return mp.fsum(total)


def log_det(spec: KernelSpec, method: str = "eigen"):
    """log det(I - K) on ``spec.interval``.

    ``method="eigen"`` sums log(1 - lambda) over the eigenvalues of the
    symmetric Nystrom matrix; ``method="cholesky"`` factors I - M instead.

    Raises
    ------
    PrecisionInsufficientError
        An eigenvalue reached 1 (or I - M stopped being positive definite).
    ConvergenceError
        The symmetric eigensolver did not converge.
    """
    ctx = spec.ctx
    M = nystrom_matrix(spec)
    m = int(spec.quad_order)
    with ctx.workprec():
        if method == "cholesky":
            A = mp.eye(m) - M
            return _cholesky_log_det(A, m)
        if method != "eigen":
            raise DomainError(f"unknown method {method!r}")
        try:
            lam = mp.eigsy(M, eigvals_only=True)
        except (ValueError, RuntimeError) as exc:  # mpmath signals non-convergence this way
            raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
        top = max(lam[k] for k in range(m))
        if top >= 1:
            raise PrecisionInsufficientError(
                f"Nystrom eigenvalue {mp.nstr(top, 10)} >= 1 at {ctx.mantissa_bits} bits",
                required_bits=2 * ctx.mantissa_bits)
        return mp.fsum(mp.log1p(-lam[k]) for k in range(m))


def _spec_for(kind, endpoint, alpha, m, ctx):
    if str(kind).lower() == "sine":
        return KernelSpec.sine(endpoint, m, ctx)
    if alpha is None:
        raise DomainError("the Bessel kernel needs alpha")
    return KernelSpec.bessel(alpha, endpoint, m, ctx)


def log_det_converged(kind, endpoint, alpha=None, tol=1e-12, ctx: PrecisionContext = DOUBLE, *,
                      start_order=16, max_order=1024, method="eigen", full_output=False):
    """Double the Nystrom order from ``start_order`` until successive values agree to ``tol``.

    Returns ``(value, achieved_error)``; with ``full_output`` also the final
    order and the list of ``(order, value)`` pairs visited. Orders too coarse
    to keep every Nystrom eigenvalue below 1 are recorded with value ``None``
    and skipped.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    with ctx.workprec():
        endpoint = mp.mpf(endpoint)
        if endpoint < 0:
            raise DomainError("endpoint must be nonnegative")
        if endpoint == 0:
            zero = mp.mpf(0)
            return (zero, zero, start_order, []) if full_output else (zero, zero)
        tol = mp.mpf(tol)
        trace = []
        m = start_order
        prev = None
        diff = mp.inf
        unresolved = None
        while m <= max_order:
            try:
                value = log_det(_spec_for(kind, endpoint, alpha, m, ctx), method)
            except PrecisionInsufficientError as exc:
                # a coarse rule can push an eigenvalue past 1; only a failure at a
                # resolved order (or at the last one) is a precision problem
                if prev is not None or m * 2 > max_order:
                    raise
                unresolved = exc
                trace.append((m, None))
                m *= 2
                continue
            trace.append((m, value))
            if prev is not None:
                diff = abs(value - prev)
                if diff < tol:
                    return (value, diff, m, trace) if full_output else (value, diff)
            prev = value
            m *= 2
        if prev is None and unresolved is not None:
            raise unresolved
        raise ConvergenceError(f"Nystrom order budget {max_order} exhausted (last change {mp.nstr(diff, 3)})",
                               best=prev, error=diff)


def scaled_sigma(kind, endpoint, alpha=None, ctx: PrecisionContext = DOUBLE, *, quad_order=None,
                 method="eigen"):
    """(sigma, sigma', sigma'') of the log-determinant by five-point differences.

    Bessel: sigma(s) = s d/ds log det on (0, s). Sine: sigma(tau) = tau d/dtau
    log det on (-b, b) with tau = 2b, derivatives taken in tau. The Nystrom
    order is fixed across the stencil; by default it is the order at which the
    centre value settles to ``2**(-0.6 * bits)``.
    """
    kind = str(kind).lower()
    with ctx.workprec():
        x0 = mp.mpf(endpoint)
        if not x0 > 0:
            raise DomainError("endpoint must be positive")
        if quad_order is None:
            tol = mp.mpf(2) ** (-mp.mpf(ctx.mantissa_bits) * 3 / 5)
            quad_order = log_det_converged(kind, x0, alpha, tol, ctx, method=method, full_output=True)[2]
        h = x0 * mp.mpf(2) ** (-mp.mpf(ctx.mantissa_bits) / 5)
        vals = [log_det(_spec_for(kind, x0 + k * h, alpha, quad_order, ctx), method) for k in (-2, -1, 1, 2)]
        fm2, fm1, f1, f2 = vals
        f0 = log_det(_spec_for(kind, x0, alpha, quad_order, ctx), method)
        d1 = (fm2 - 8 * fm1 + 8 * f1 - f2) / (12 * h)
        d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * f1 - f2) / (12 * h * h)
        d3 = (f2 - 2 * f1 + 2 * fm1 - fm2) / (2 * h ** 3)
        # sigma = x L', derivatives in x
        sigma = x0 * d1
        ds = d1 + x0 * d2
        d2s = 2 * d2 + x0 * d3
        if kind == "sine":
            # tau = 2b: sigma is unchanged, each tau-derivative halves
            return sigma, ds / 2, d2s / 4
        return sigma, ds, d2s
