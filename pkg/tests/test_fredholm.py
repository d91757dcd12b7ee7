import mpmath as mp
import pytest

from gapprob.errors import ConvergenceError, DomainError
from gapprob.fredholm import (KernelSpec, bessel_kernel, bessel_kernel_diagonal, certify_bessel_diagonal, log_det,
                              log_det_converged, nystrom_matrix, scaled_sigma, sine_kernel)
from gapprob.painleve import residual
from gapprob.specfun import PrecisionContext

CTX = PrecisionContext(128)


def test_kernelspec_validation():
    with pytest.raises(DomainError):
        KernelSpec.sine(1.0, quad_order=3)
    with pytest.raises(DomainError):
        KernelSpec.bessel(-1, 2.0)
    with pytest.raises(DomainError):
        KernelSpec("airy", (0, 1))
    spec = KernelSpec.sine(1.0, 16, CTX)
    assert spec.with_order(32).quad_order == 32
    assert spec.with_endpoint(2.0).interval[1] == 2


def test_sine_kernel_diagonal():
    assert sine_kernel(0.3, 0.3) == 1 / mp.pi
    assert abs(sine_kernel(0.3, 0.3 + 1e-9) - 1 / mp.pi) < 1e-15


def test_bessel_diagonal_is_limit_of_kernel():
    ctx = PrecisionContext(160)
    with ctx.workprec():
        for al in (mp.mpf(-0.5), mp.mpf(0.5), mp.mpf(2)):
            for x in (mp.mpf("0.3"), mp.mpf(5)):
                eps = x * mp.mpf(2) ** -50
                limit = (bessel_kernel(al, x, x + eps) + bessel_kernel(al, x, x - eps)) / 2
                assert abs(limit - bessel_kernel_diagonal(al, x)) < 1e-20
    assert certify_bessel_diagonal(0.5, CTX)


def test_trivial_limits():
    assert log_det_converged("sine", 0)[0] == 0
    assert log_det_converged("bessel", 0, 0.5)[0] == 0
    tiny = log_det(KernelSpec.sine(1e-8, 16, CTX))
    assert abs(tiny) < 1e-7


def test_trace_formula_small_b():
    with CTX.workprec():
        b = mp.mpf("1e-4")
        value = log_det(KernelSpec.sine(b, 16, CTX))
        assert abs(value - mp.log(1 - 2 * b / mp.pi)) < 1e-8 * b


def test_nystrom_matrix_symmetric():
    M = nystrom_matrix(KernelSpec.bessel(0.5, 3.0, 12, CTX))
    with CTX.workprec():
        assert max(abs(M[i, j] - M[j, i]) for i in range(12) for j in range(12)) < 1e-35


def test_convergence_orders():
    _, diff, m, _ = log_det_converged("sine", 2, None, 1e-12, CTX, full_output=True)
    assert m <= 128 and diff < 1e-12
    _, diff, m, _ = log_det_converged("bessel", 4, 0.5, 1e-12, CTX, full_output=True)
    assert m <= 128 and diff < 1e-12


def test_convergence_budget():
    with pytest.raises(ConvergenceError) as info:
        log_det_converged("sine", 6, None, 1e-30, CTX, max_order=32)
    assert info.value.best is not None


def test_self_convergence_monotone_past_32():
    with CTX.workprec():
        vals = [log_det(KernelSpec.sine(3, m, CTX)) for m in (32, 64, 128)]
        d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
        assert d2 <= d1


@pytest.mark.parametrize("kind, alpha, grid", [("sine", None, (0.2, 0.6, 1.0, 1.6, 2.5)),
                                               ("bessel", 0.5, (0.5, 2, 5, 10, 20)),
                                               ("bessel", -0.5, (0.5, 2, 5, 10))])
def test_determinant_in_unit_interval_and_decreasing(kind, alpha, grid):
    vals = [log_det_converged(kind, x, alpha, 1e-14, CTX)[0] for x in grid]
    assert all(v < 0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_sine_translation_invariance():
    with CTX.workprec():
        half, c = mp.mpf("1.2"), mp.mpf("4.5")
        centred = log_det(KernelSpec("sine", (-half, half), 48, CTX))
        shifted = log_det(KernelSpec("sine", (c - half, c + half), 48, CTX))
        assert abs(centred - shifted) < 1e-30


@pytest.mark.parametrize("b", [0.5, 1.0, 1.5, 2.0])
def test_product_identity(b):
    with CTX.workprec():
        b = mp.mpf(b)
        sine, _ = log_det_converged("sine", b, None, 1e-25, CTX)
        minus, _ = log_det_converged("bessel", b * b, -mp.mpf(1) / 2, 1e-25, CTX)
        plus, _ = log_det_converged("bessel", b * b, mp.mpf(1) / 2, 1e-25, CTX)
        assert abs(sine - minus - plus) <= 1e-10


def test_eigen_and_cholesky_agree():
    spec = KernelSpec.bessel(1.5, 6.0, 40, CTX)
    with CTX.workprec():
        assert abs(log_det(spec) - log_det(spec, method="cholesky")) < 1e-30
    with pytest.raises(DomainError):
        log_det(spec, method="lu")


def test_scaled_sigma_small_endpoint():
    sigma, _, _ = scaled_sigma("bessel", 1e-6, 0.5, CTX)
    assert abs(sigma) < 1e-5


def test_jmms_residual_at_tau_4():
    sigma, d1, d2 = scaled_sigma("sine", 2, None, CTX)
    rep = residual("JMMS", {"sigma": sigma, "dsigma": d1, "d2sigma": d2, "tau": 4}, CTX)
    assert rep.relative <= 1e-6


@pytest.mark.slow
def test_bessel_sigma_matches_series_at_100():
    from gapprob.painleve import series_eval

    with CTX.workprec():
        sigma, _, _ = scaled_sigma("bessel", 100, 0.5, CTX)
        assert abs(sigma - series_eval("sigma_of_s", {"alpha": 0.5}, None, 100, CTX)) < 1e-5
