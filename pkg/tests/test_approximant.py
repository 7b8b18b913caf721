import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infostab.approximant import (H1, H2, INCONCLUSIVE, LOG_CONSTANT, SATISFIED, VIOLATED,
                                  FitError, LogParams, PowerParams, bound_constant,
                                  certify, closed_defect, default_u_grid, eval_approximant,
                                  eval_approximant_array, extend_boundary, fit_log_params,
                                  fit_params, fit_power_params, noise_residual_bound)
from infostab.domain import DomainError, make_interior_grid
from infostab.equation import (COMB, LogForm, Perturbed, Pointwise, PowerForm,
                               residual_sup, supplied_epsilon)


def exact_K(alpha: int) -> Fraction:
    t = Fraction(2)**alpha
    return (8 + 6 * t + 1 / t) / (2 / t - 1)


def test_bound_constant_examples():
    assert exact_K(-1) == Fraction(13, 3)
    assert bound_constant(-1) == pytest.approx(13 / 3, rel=1e-15)
    assert bound_constant(-3) == pytest.approx(float(exact_K(-3)), rel=1e-15)
    assert bound_constant(0) == 63.0
    assert bound_constant(-1e-9) == pytest.approx(15.0, abs=1e-6)


def test_bound_constant_below_sup():
    for a in (-10, -5, -2, -1, -0.5, -0.1, -0.01):
        assert bound_constant(a) <= 15.0
    assert bound_constant(-0.01) >= 14.5
    ks = [bound_constant(a) for a in np.linspace(-10, -1e-4, 200)]
    assert all(np.diff(ks) > 0)


def test_power_params_consistency():
    assert PowerParams(2.0, -1.0).c == -3.0
    with pytest.raises(DomainError):
        PowerParams(2.0, -1.0, 0.0)


@pytest.mark.parametrize("a, b, alpha, c", [(2.0, -1.0, -0.5, -3.0), (1.0, 0.0, -1.0, -1.0),
                                            (0.0, 0.0, -2.0, 0.0)])
def test_fit_power_examples(a, b, alpha, c):
    p = fit_power_params(PowerForm(a, b), alpha)
    assert abs(p.a - a) <= 1e-9 and abs(p.b - b) <= 1e-9 and abs(p.c - c) <= 1e-9


def test_fit_power_rejects_zero_alpha():
    with pytest.raises(FitError):
        fit_power_params(PowerForm(1, 0), 0)


@settings(max_examples=80, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-5, -0.1))
def test_power_round_trip(a, b, alpha):
    p = fit_power_params(PowerForm(a, b), alpha)
    assert abs(p.a - a) <= 1e-9 and abs(p.b - b) <= 1e-9
    assert abs(p.c - (p.b - p.a)) <= 1e-12 * max(1.0, abs(p.a), abs(p.b))


def test_fit_power_uses_pointwise():
    f = Pointwise(lambda x: 2 * x**-0.5 - (1 - x)**-0.5 + 1)
    p = fit_power_params(f, -0.5)
    assert p.a == pytest.approx(2.0, abs=1e-12) and p.b == pytest.approx(-1.0, abs=1e-12)


def test_default_u_grid():
    u = default_u_grid(1e-3)
    assert 2.0 in u and 0.5 in u and 1.0 not in u
    assert np.all(1 / (1 + u) >= 1e-3) and np.all(u / (1 + u) >= 1e-3)
    with pytest.raises(DomainError):
        default_u_grid(0.7)


def test_fit_log_examples():
    p = fit_log_params(LogForm(2.0, -1.0))
    assert abs(p.lam - 2) <= 1e-6 and abs(p.c + 1) <= 1e-6
    assert fit_log_params(Pointwise(lambda x: 4.25)) == LogParams(0.0, 4.25)
    with pytest.raises(FitError):
        fit_log_params(LogForm(1, 0), [1.0])


@pytest.mark.parametrize("kind", ["uniform", COMB])
def test_fit_log_perturbed(kind):
    g = make_interior_grid(1e-3, 200)
    delta = 1e-3
    f = Perturbed(LogForm(1.0, 0.0), delta, 5, kind)
    eps = noise_residual_bound(delta, 0, g).value
    assert eps == pytest.approx(4 * delta)
    p = fit_log_params(f, default_u_grid(1e-3))
    assert abs(p.lam - 1) <= 6 * eps / math.log(2)


def test_fit_params_dispatch():
    assert isinstance(fit_params(PowerForm(1, 0), -1), PowerParams)
    assert isinstance(fit_params(LogForm(1, 0), 0), LogParams)


def test_eval_approximant_examples():
    assert eval_approximant(PowerParams(1, 0), -1, 0.2) == pytest.approx(5.0, rel=1e-15)
    assert eval_approximant(LogParams(2, -1), 0, 0.5) == pytest.approx(-2.386294, abs=1e-6)
    for a, b, al in [(2, -1, -0.5), (3.5, 1.25, -2.0), (-1, 7, -0.1)]:
        v = eval_approximant(PowerParams(a, b), al, 0.5)
        assert v == pytest.approx((a + b) * 2**-al - b, rel=1e-14)
    with pytest.raises(DomainError):
        eval_approximant(PowerParams(1, 0), -1, 0.0)
    with pytest.raises(DomainError):
        eval_approximant(PowerParams(1, 0), 0, 0.5)
    with pytest.raises(DomainError):
        eval_approximant(LogParams(1, 0), -1, 0.5)


def test_eval_approximant_matches_mpfr():
    xs = np.linspace(1e-3, 1 - 1e-3, 57)
    got = eval_approximant_array(PowerParams(1.5, -2.25), -3.3, xs)
    with gmpy2.context(gmpy2.get_context(), precision=160):
        al = gmpy2.mpfr(-3.3)
        for x, v in zip(xs, got):
            X = gmpy2.mpfr(x)
            ex = 1.5 * X**al - 2.25 * (1 - X)**al + 2.25
            assert abs(v - float(ex)) <= 2.3e-16 * abs(float(ex))


def test_noise_residual_bound_examples():
    g = make_interior_grid(1e-3, 200)
    assert noise_residual_bound(0.0, -1, g).value == 0.0
    assert noise_residual_bound(1e-3, 0, g).value == pytest.approx(4e-3, rel=1e-15)
    brute = max(2 + 1 / (1 - x) + 1 / (1 - y) for x, y in g.points)
    b = noise_residual_bound(1e-3, -1, g)
    assert b.value == pytest.approx(1e-3 * brute, rel=1e-14)
    assert b.provenance == "derived-from-noise-bound"
    with pytest.raises(DomainError):
        noise_residual_bound(-1.0, -1, g)


@pytest.mark.parametrize("alpha", [-5.0, -2.0, -1.0, -0.5, -0.1])
def test_certify_exact(alpha, default_grid):
    spec = PowerForm(2.5, -1.75)
    c = certify(spec, alpha, default_grid, residual_sup(spec, alpha, default_grid))
    assert c.satisfied and c.status == SATISFIED
    assert c.sup_deviation <= 1e-9
    assert c.bound_constant == bound_constant(alpha) and c.theorem_constant == 15.0


def test_certify_exact_with_zero_epsilon(default_grid):
    # the general solution on the open triangle is recovered
    for spec, al in [(PowerForm(-4.0, 9.5), -2.0), (LogForm(3.0, -2.0), 0.0)]:
        c = certify(spec, al, default_grid, supplied_epsilon(0.0))
        assert c.satisfied and c.sup_deviation <= 1e-9


def test_certify_comb_noise_bound(default_grid):
    f = Perturbed(PowerForm(1.0, 0.0), 1e-3, 0, COMB)
    eps = noise_residual_bound(1e-3, -1, default_grid)
    c = certify(f, -1, default_grid, eps)
    assert c.satisfied and c.sup_deviation <= bound_constant(-1) * eps.value


def test_certify_log_noise_bound(default_grid):
    f = Perturbed(LogForm(1.0, 0.0), 1e-3, 8)
    eps = noise_residual_bound(1e-3, 0, default_grid)
    c = certify(f, 0, default_grid, eps)
    assert c.satisfied and c.sup_deviation <= LOG_CONSTANT * eps.value
    assert c.notes and c.theorem_constant == 63.0


@pytest.mark.parametrize("delta", [1e-4, 1e-3, 1e-2])
@pytest.mark.parametrize("kind", ["uniform", COMB])
@pytest.mark.parametrize("alpha, base", [(-5.0, PowerForm(1.0, -2.0)), (-1.0, PowerForm(3.0, 2.0)),
                                         (-0.1, PowerForm(-1.0, 4.0)), (0.0, LogForm(2.0, 1.0))])
def test_certificate_soundness(delta, kind, alpha, base, default_grid):
    f = Perturbed(base, delta, 99, kind)
    eps = noise_residual_bound(delta, alpha, default_grid)
    c = certify(f, alpha, default_grid, eps)
    assert c.sup_deviation <= bound_constant(alpha) * eps.value
    assert c.status == SATISFIED


def test_status_levels(coarse_grid):
    f = Perturbed(PowerForm(1.0, 0.0), 1e-2, 4)
    est = residual_sup(f, -1, coarse_grid)
    tiny = noise_residual_bound(1e-9, -1, coarse_grid)
    assert certify(f, -1, coarse_grid, tiny).status == VIOLATED
    weak = certify(f, -1, coarse_grid, est.__class__(1e-9, est.provenance, est.argmax, est.grid))
    assert weak.status == INCONCLUSIVE and not weak.satisfied


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-4, 1e-1), st.sampled_from([-3.0, -1.0, -0.25, 0.0]))
def test_satisfied_iff_within_bound(eps, alpha):
    g = make_interior_grid(1e-2, 30)
    base = LogForm(1.0, 2.0) if alpha == 0 else PowerForm(1.0, 2.0)
    c = certify(Perturbed(base, 1e-2, 1), alpha, g, supplied_epsilon(eps))
    assert c.satisfied == (c.sup_deviation <= c.bound_value + c.rounding_allowance)


def test_certify_errors(coarse_grid):
    with pytest.raises(DomainError):
        certify(PowerForm(1, 0), -1, coarse_grid, supplied_epsilon(0.0), f0_value=0.0)


def test_extend_boundary_examples():
    r = extend_boundary(PowerParams(1.0, 0.0), -1)
    assert isinstance(r.extension, H1)
    assert r.extension(0.0, -1) == 0.0 and r.extension(1.0, -1) == 1.0
    r = extend_boundary(LogParams(0.0, 3.0), 0, 5.0, -2.0)
    assert r.extension == H2(5.0, -2.0, 3.0)
    with pytest.raises(DomainError):
        extend_boundary(LogParams(0.0, 3.0), 0, 5.0)
    with pytest.raises(DomainError):
        extend_boundary(LogParams(0.0, 3.0), -1)


def test_extend_boundary_exact_zero_slack():
    a, b = 2.0, -1.0
    r = extend_boundary(PowerParams(a, b), -0.5, 0.0, a - b, epsilon=0.0)
    assert r.passed
    assert all(c["value"] == 0.0 and c["bound"] == 0.0 for c in r.checks.values())
    r = extend_boundary(PowerParams(a, b), -0.5, 0.1, a - b, epsilon=0.0)
    assert not r.passed


def test_certify_closed_domain(default_grid):
    spec = PowerForm(2.0, -1.0)
    c = certify(spec, -0.5, default_grid, supplied_epsilon(0.0), closed_domain=True,
                f0_value=0.0, f1_value=3.0)
    assert c.satisfied and c.boundary.passed
    c = certify(LogForm(0.0, 3.0), 0, default_grid, supplied_epsilon(0.0), closed_domain=True,
                f0_value=5.0, f1_value=-2.0)
    assert c.satisfied and set(c.boundary.checks) == {"rigidity", "interior"}
    # a genuine logarithm is unbounded on the closed domain
    c = certify(LogForm(1.0, 0.0), 0, default_grid, supplied_epsilon(1e-6), closed_domain=True,
                f0_value=0.0, f1_value=0.0)
    assert not c.satisfied and not c.boundary.checks["rigidity"]["passed"]


CLOSED_POINTS = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.3, 0.7), (0.0, 1.0 - 2**-52),
                 (0.25, 0.75), (1e-3, 0.999), (0.2, 0.3), (1e-300, 0.5), (0.999, 0.0)]


@pytest.mark.parametrize("x, y", CLOSED_POINTS)
@pytest.mark.parametrize("h, alpha", [(H1(1.0, 0.0), -1.0), (H1(2.5, -3.0), -2.5),
                                      (H1(-1.0, 4.0), -0.3), (H2(5.0, -2.0, 3.0), 0.0),
                                      (H2(0.0, 0.0, 1.0), 0.0)])
def test_boundary_extensions_solve_closed(h, alpha, x, y):
    assert abs(closed_defect(h, alpha, x, y)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 0.999), st.floats(0, 1), st.floats(-4, -0.05))
def test_h1_closed_property(x, y, alpha):
    y = min(y, 1.0 - x)
    if Fraction(x) + Fraction(y) > 1 or y >= 1.0:
        y = float(np.nextafter(y, 0.0))
    assert abs(closed_defect(H1(1.5, -0.5), alpha, x, y)) <= 1e-12


def test_closed_defect_rejects_outside():
    with pytest.raises(DomainError):
        closed_defect(H1(1, 0), -1, 0.6, 0.6)
    with pytest.raises(DomainError):
        closed_defect(H1(1, 0), -1, 1.0, 0.0)
