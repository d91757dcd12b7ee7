"""Special functions at a chosen working precision.

Every routine takes a :class:`PrecisionContext` and evaluates with mpmath at
``ctx.mantissa_bits`` of binary precision. Results are ``mpmath.mpf`` values.

The log-Gamma, incomplete Gamma/Beta and Bessel routines delegate to mpmath.
The Barnes G-function and zeta'(-1) are computed here from their series, so
that mpmath's own ``barnesg``/``zeta`` remain available as independent checks.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import mpmath as mp

from .errors import DomainError

__all__ = [
    "PrecisionContext",
    "DOUBLE",
    "log_gamma",
    "gamma_upper",
    "beta_incomplete",
    "log_barnes_g",
    "zeta_prime_minus_one",
    "bessel_j",
]


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision and target accuracy for a computation.

    Parameters
    ----------
    mantissa_bits : int
        Binary precision of every intermediate (>= 53).
    target_tolerance : float, optional
        Accuracy goal; defaults to ``2**(-mantissa_bits + 8)``.
    """

    mantissa_bits: int = 53
    target_tolerance: float | None = None

    def __post_init__(self):
        if int(self.mantissa_bits) != self.mantissa_bits or self.mantissa_bits < 53:
            raise DomainError(f"mantissa_bits must be an integer >= 53, got {self.mantissa_bits}")
        tol = self.target_tolerance
        if tol is None:
            object.__setattr__(self, "target_tolerance", 2.0 ** (-self.mantissa_bits + 8))
        elif not tol > 0:
            raise DomainError("target_tolerance must be positive")
        elif tol < 2.0 ** (-self.mantissa_bits):
            raise DomainError(f"target_tolerance {tol!r} is below the resolution of {self.mantissa_bits} bits")

    @property
    def eps(self):
        return mp.mpf(2) ** (1 - self.mantissa_bits)

    @property
    def tol(self):
        with self.workprec():
            return mp.mpf(self.target_tolerance)

    def workprec(self):
        """Context manager that sets mpmath's working precision."""
        return mp.workprec(self.mantissa_bits)

    def with_bits(self, bits: int) -> "PrecisionContext":
        return PrecisionContext(bits)


DOUBLE = PrecisionContext(53)


def _positive(name, value):
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")


def log_gamma(z, ctx: PrecisionContext = DOUBLE):
    """log Gamma(z) for real z > 0."""
    with ctx.workprec():
        z = mp.mpf(z)
        _positive("z", z)
        return mp.loggamma(z)


def gamma_upper(a, x, ctx: PrecisionContext = DOUBLE):
    """Upper incomplete Gamma function Gamma(a, x) = int_x^inf u^(a-1) e^(-u) du."""
    with ctx.workprec():
        a, x = mp.mpf(a), mp.mpf(x)
        _positive("a", a)
        if x < 0:
            raise DomainError(f"x must be nonnegative, got {x}")
        if x == 0:
            return mp.gamma(a)
        return mp.gammainc(a, x)


def beta_incomplete(a, b, t, ctx: PrecisionContext = DOUBLE):
    """Tail of the Beta integral, int_t^1 x^(a-1) (1-x)^(b-1) dx."""
    with ctx.workprec():
        a, b, t = mp.mpf(a), mp.mpf(b), mp.mpf(t)
        _positive("a", a)
        _positive("b", b)
        if not 0 <= t <= 1:
            raise DomainError(f"t must lie in [0, 1], got {t}")
        if t == 0:
            return mp.beta(a, b)
        if t == 1:
            return mp.mpf(0)
        return mp.betainc(a, b, t, 1)


_zeta_cache: dict[int, list] = {}
_zeta_lock = threading.Lock()


def _zeta_values(bits: int):
    # zeta(k), k = 2..K, enough for |u| <= 1/2 at this precision
    with _zeta_lock:
        vals = _zeta_cache.get(bits)
        if vals is None:
            with mp.workprec(bits + 20):
                vals = [mp.zeta(k) for k in range(2, bits + 24)]
            _zeta_cache[bits] = vals
        return vals


def _log_barnes_g_near_one(u, bits):
    # log G(1+u) = u/2 log(2 pi) - (u + (1+gamma) u^2)/2 + sum_{k>=2} (-1)^k zeta(k) u^(k+1)/(k+1)
    total = u / 2 * mp.log(2 * mp.pi) - (u + (1 + mp.euler) * u * u) / 2
    power = u * u
    tiny = mp.mpf(2) ** (-bits - 10)
    for k, zk in enumerate(_zeta_values(bits), start=2):
        power *= u
        term = zk * power / (k + 1)
        total += term if k % 2 == 0 else -term
        if abs(term) < tiny:
            break
    return total


def log_barnes_g(z, ctx: PrecisionContext = DOUBLE):
    """log G(z) for real z > 0, where G(z+1) = Gamma(z) G(z) and G(1) = 1.

    The argument is shifted into [1/2, 3/2] with the functional relation and
    the Taylor series of log G(1+u) in zeta values is summed there.
    """
    with ctx.workprec():
        z = mp.mpf(z)
        _positive("z", z)
        with mp.workprec(ctx.mantissa_bits + 20):
            shift = int(mp.nint(z - 1))
            z0 = z - shift
            total = _log_barnes_g_near_one(z0 - 1, ctx.mantissa_bits)
            if shift > 0:
                total += mp.fsum(mp.loggamma(z0 + j) for j in range(shift))
            elif shift < 0:
                total -= mp.fsum(mp.loggamma(z0 - j) for j in range(1, -shift + 1))
        return +total


_zp_cache: dict[int, object] = {}
_zp_lock = threading.Lock()


def _zeta_prime_minus_one(bits):
    # Glaisher-Kinkelin: zeta'(-1) = 1/12 - log A, with log A from Euler-Maclaurin
    # applied to sum_{k<=N} k log k.
    with mp.workprec(bits + 30):
        n = max(16, bits // 6)
        N = mp.mpf(n)
        partial = mp.fsum(k * mp.log(k) for k in range(2, n + 1))
        log_a = partial - (N * N / 2 + N / 2 + mp.mpf(1) / 12) * mp.log(N) + N * N / 4
        tiny = mp.mpf(2) ** (-bits - 20)
        for j in range(2, 4 * n):
            term = mp.bernoulli(2 * j) / ((2 * j) * (2 * j - 1) * (2 * j - 2) * N ** (2 * j - 2))
            log_a += term
            if abs(term) < tiny:
                break
        return mp.mpf(1) / 12 - log_a


def zeta_prime_minus_one(ctx: PrecisionContext = DOUBLE):
    """zeta'(-1), cached per precision."""
    bits = ctx.mantissa_bits
    with _zp_lock:
        val = _zp_cache.get(bits)
        if val is None:
            val = _zeta_prime_minus_one(bits)
            _zp_cache[bits] = val
    with ctx.workprec():
        return +val


def bessel_j(alpha, x, ctx: PrecisionContext = DOUBLE):
    """Return ``(J_alpha(x), J_alpha'(x))`` for alpha > -1 and x >= 0.

    At x = 0 the limiting values are returned (possibly ``mpmath.inf``).
    """
    with ctx.workprec():
        alpha, x = mp.mpf(alpha), mp.mpf(x)
        if not alpha > -1:
            raise DomainError(f"Bessel order must exceed -1, got {alpha}")
        if x < 0:
            raise DomainError(f"x must be nonnegative, got {x}")
        if x == 0:
            if alpha == 0:
                return mp.mpf(1), mp.mpf(0)
            if alpha < 0:
                return mp.inf, -mp.inf
            value = mp.mpf(0)
            if alpha == 1:
                deriv = mp.mpf(1) / 2
            elif alpha < 1:
                deriv = mp.inf
            else:
                deriv = mp.mpf(0)
            return value, deriv
        return mp.besselj(alpha, x), mp.besselj(alpha, x, derivative=1)
