import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from gapprob.errors import DomainError
from gapprob.quadrature import integrate_adaptive
from gapprob.specfun import (DOUBLE, PrecisionContext, bessel_j, beta_incomplete, gamma_upper, log_barnes_g,
                             log_gamma, zeta_prime_minus_one)

from conftest import close


def test_precision_context_defaults_and_validation():
    ctx = PrecisionContext(100)
    assert ctx.target_tolerance == 2.0 ** -92
    with pytest.raises(DomainError):
        PrecisionContext(40)
    with pytest.raises(DomainError):
        PrecisionContext(53, 0.0)
    with pytest.raises(DomainError):
        PrecisionContext(53, 1e-30)


def test_workprec_restores_precision():
    before = mp.mp.prec
    with PrecisionContext(200).workprec():
        assert mp.mp.prec == 200
    assert mp.mp.prec == before


@pytest.mark.parametrize("z, expected", [(1, 0), (5, math.log(24)), (0.5, 0.5 * math.log(math.pi))])
def test_log_gamma_values(z, expected):
    assert close(log_gamma(z), expected, abs_=1e-15)


@pytest.mark.parametrize("bad", [0, -1.5])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


def test_gamma_upper_trivial():
    for t in (0.1, 1.0, 7.5):
        assert close(gamma_upper(1, t), math.exp(-t))
    assert close(gamma_upper(2.5, 0), mp.gamma(2.5))
    with pytest.raises(DomainError):
        gamma_upper(0, 1)
    with pytest.raises(DomainError):
        gamma_upper(1, -0.1)


def test_gamma_upper_against_quadrature():
    ctx = PrecisionContext(80)
    quad = integrate_adaptive(lambda u: u ** -0.5 * mp.exp(-u), 1, mp.inf, 1e-20, ctx)
    assert close(gamma_upper(0.5, 1, ctx), quad, rel=1e-18)


@given(a=st.floats(0.1, 12), x=st.floats(0.0, 30))
@settings(max_examples=40, deadline=None)
def test_gamma_upper_recurrence(a, x):
    ctx = PrecisionContext(80)
    with ctx.workprec():
        a, x = mp.mpf(a), mp.mpf(x)
        lhs = gamma_upper(a + 1, x, ctx)
        rhs = a * gamma_upper(a, x, ctx) + x ** a * mp.exp(-x)
        assert abs(lhs - rhs) <= 10 * ctx.tol * abs(lhs)


def test_beta_incomplete_values():
    for t in (0, 0.3, 0.99):
        assert close(beta_incomplete(1, 1, t), 1 - t)
    ctx = PrecisionContext(80)
    quad = integrate_adaptive(lambda x: mp.sqrt(x) * (1 - x), 0.25, 1, 1e-20, ctx)
    assert close(beta_incomplete(1.5, 2, 0.25, ctx), quad, rel=1e-18)
    with pytest.raises(DomainError):
        beta_incomplete(1, 1, 1.5)


@given(a=st.floats(0.2, 15), b=st.floats(0.2, 15))
@settings(max_examples=40, deadline=None)
def test_beta_incomplete_complete_case(a, b):
    ctx = PrecisionContext(80)
    with ctx.workprec():
        a, b = mp.mpf(a), mp.mpf(b)
        full = beta_incomplete(a, b, 0, ctx)
        closed = mp.exp(log_gamma(a, ctx) + log_gamma(b, ctx) - log_gamma(a + b, ctx))
        assert abs(full - closed) <= 10 * ctx.tol * closed


def test_barnes_g_values():
    assert abs(log_barnes_g(1)) < 1e-15
    assert abs(log_barnes_g(2)) < 1e-15
    assert close(log_barnes_g(4), math.log(2))
    ctx = PrecisionContext(128)
    with ctx.workprec():
        g_half = (mp.mpf(3) / 2 * zeta_prime_minus_one(ctx) - mp.log(mp.pi) / 4 + mp.log(2) / 24)
        assert abs(log_barnes_g(mp.mpf(1) / 2, ctx) - g_half) < 1e-35
    with pytest.raises(DomainError):
        log_barnes_g(0)


@pytest.mark.parametrize("z", [0.3, 0.7, 1.5, 2.5, 6.0])
def test_barnes_g_functional_relation(z):
    ctx = PrecisionContext(128)
    with ctx.workprec():
        z = mp.mpf(z)
        gap = log_barnes_g(z + 1, ctx) - log_gamma(z, ctx) - log_barnes_g(z, ctx)
        assert abs(gap) <= 10 * ctx.tol


def test_barnes_g_matches_mpmath():
    ctx = PrecisionContext(100)
    with ctx.workprec():
        for z in ("0.1", "0.5", "3.7", "11.25"):
            assert abs(log_barnes_g(mp.mpf(z), ctx) - mp.log(mp.barnesg(mp.mpf(z)))) < 1e-26


def test_zeta_prime_minus_one():
    # mpmath's own zeta derivative is an independent route
    assert abs(zeta_prime_minus_one(DOUBLE) - mp.zeta(-1, derivative=1)) < 1e-12
    ctx = PrecisionContext(192)
    with ctx.workprec():
        assert abs(zeta_prime_minus_one(ctx) - mp.zeta(-1, derivative=1)) < 1e-50
        wd = mp.log(2) / 12 + 3 * zeta_prime_minus_one(ctx)
        assert abs(wd - mp.mpf("-0.43850")) < 1e-5


def test_bessel_at_zero():
    assert bessel_j(0, 0) == (1, 0)
    v, d = bessel_j(1, 0)
    assert v == 0 and d == 0.5
    with pytest.raises(DomainError):
        bessel_j(-1, 1)
    with pytest.raises(DomainError):
        bessel_j(0.5, -1)


@pytest.mark.parametrize("x", [0.01, 0.7, 3.0, 25.0, 300.0])
def test_bessel_half_integer_closed_form(x):
    v, d = bessel_j(0.5, x)
    c = math.sqrt(2 / (math.pi * x))
    assert close(v, c * math.sin(x), abs_=1e-15)
    assert close(d, c * (math.cos(x) - math.sin(x) / (2 * x)), abs_=1e-15)


def test_bessel_first_zero():
    root = mp.findroot(lambda x: bessel_j(0, x)[0], 2.4)
    assert abs(root - 2.404825557695773) < 1e-14
    v, d = bessel_j(0, 2.404825557695773)
    assert abs(v) < 1e-15
    assert close(d, -mp.besselj(1, 2.404825557695773))


@given(alpha=st.floats(-0.9, 5), x=st.floats(0.1, 40))
@settings(max_examples=30, deadline=None)
def test_bessel_ode(alpha, x):
    ctx = PrecisionContext(80)
    with ctx.workprec():
        x = mp.mpf(x)
        h = x * mp.mpf(2) ** -20
        _, dp = bessel_j(alpha, x + h, ctx)
        _, dm = bessel_j(alpha, x - h, ctx)
        v, d = bessel_j(alpha, x, ctx)
        d2 = (dp - dm) / (2 * h)
        res = x * x * d2 + x * d + (x * x - mp.mpf(alpha) ** 2) * v
        assert abs(res) <= 1e-10 * max(1, x * x)
