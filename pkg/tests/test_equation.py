import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infostab.approximant import noise_residual_bound
from infostab.domain import DomainError, make_interior_grid
from infostab.equation import (ESTIMATED, EvaluationError, LogForm, Perturbed, Pointwise,
                               PowerForm, Tabulated, cocycle_defect, defect, defect_array,
                               eval_array, eval_f, residual_sup, transform_F, transform_g,
                               transform_G)
from infostab.generators import sample_points


def fraction_defect(f, alpha: int, x: Fraction, y: Fraction) -> Fraction:
    """Exact rational defect for integer alpha."""
    return f(x) + (1 - x)**alpha * f(y / (1 - x)) - f(y) - (1 - y)**alpha * f(x / (1 - y))


def identity_table():
    xs = sample_points(4097, 1e-3, "uniform")
    return Tabulated(xs, xs)


def test_eval_examples():
    assert eval_f(PowerForm(1, 0), -1, 0.25) == 4.0
    assert eval_f(LogForm(2, -1), 0, 0.5) == pytest.approx(2 * math.log(0.5) - 1, abs=1e-15)
    assert eval_f(LogForm(2, -1), 0, 0.5) == pytest.approx(-2.386294, abs=1e-6)
    assert eval_f(PowerForm(1, 2), -0.5, 0.25) == pytest.approx(2 + 2 * math.sqrt(4 / 3) - 2,
                                                                 rel=1e-15)
    assert eval_f(PowerForm(1, 2), -0.5, 0.25) == pytest.approx(2.309401, abs=1e-6)


def test_eval_errors():
    with pytest.raises(EvaluationError):
        eval_f(PowerForm(1, 0), -1, 0.0)
    t = Tabulated([0.1, 0.5, 0.9], [1.0, 2.0, 3.0])
    with pytest.raises(EvaluationError) as exc:
        eval_f(t, -1, 0.95)
    assert exc.value.point == 0.95
    assert eval_f(t, -1, 0.3) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        Tabulated([0.5, 0.1], [1.0, 2.0])
    with pytest.raises(DomainError):
        Tabulated([0.0, 0.5], [1.0, 2.0])


def test_defect_identity_example():
    exact = fraction_defect(lambda t: t, -1, Fraction(1, 2), Fraction(1, 4))
    assert exact == Fraction(13, 36)
    assert defect(identity_table(), -1, 0.5, 0.25) == pytest.approx(13 / 36, abs=1e-12)


def test_defect_matches_fraction_oracle():
    f = lambda t: 3 * t * t - t  # noqa: E731
    xs = sample_points(8193, 1e-3, "uniform")
    tab = Tabulated(xs, 3 * xs * xs - xs)
    for x, y in [(0.1, 0.2), (0.3, 0.6), (0.05, 0.9)]:
        ex = fraction_defect(f, -2, Fraction(x), Fraction(y))
        # linear interpolation of a quadratic: error <= max|f''| h^2 / 8 per term
        assert defect(tab, -2, x, y) == pytest.approx(float(ex), abs=5e-5)


def test_defect_rejects_outside():
    for x, y in [(0.0, 0.5), (0.6, 0.4), (0.5, 0.7)]:
        with pytest.raises(DomainError):
            defect(PowerForm(1, 0), -1, x, y)


def test_exact_solutions_zero_defect():
    g = make_interior_grid(1e-3, 80)
    assert np.max(np.abs(defect_array(PowerForm(1, 0), -1, g.x, g.y))) <= 1e-12
    assert np.max(np.abs(defect_array(PowerForm(2.5, -3), -2.5, g.x, g.y))) <= 1e-12
    assert np.max(np.abs(defect_array(LogForm(1.7, 0.3), 0, g.x, g.y))) <= 1e-12


SPECS = [
    (PowerForm(2.0, -1.0), -0.5),
    (Perturbed(PowerForm(1.0, 1.0), 1e-3, 3), -1.0),
    (Perturbed(LogForm(1.0, 0.0), 1e-3, 3, "deterministic-comb"), 0.0),
    (Tabulated(sample_points(300, 1e-3), np.cos(sample_points(300, 1e-3))), -2.0),
    (Pointwise(lambda t: t**3, "cube"), -1.0),
]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SPECS), st.floats(2e-3, 0.6), st.floats(2e-3, 0.6))
def test_antisymmetry_and_diagonal(spec_alpha, x, y):
    spec, alpha = spec_alpha
    if x + y >= 0.998:
        return
    d1, d2 = defect(spec, alpha, x, y), defect(spec, alpha, y, x)
    assert d1 == -d2
    if 2 * x < 1:
        assert defect(spec, alpha, x, x) == 0.0


def test_residual_sup_examples(default_grid):
    r = residual_sup(PowerForm(2.0, -1.0), -0.5, default_grid)
    assert r.value <= 1e-9 and r.provenance == ESTIMATED
    assert residual_sup(LogForm(1, 0), 0, default_grid).value <= 1e-12

    g = make_interior_grid(1e-3, 100)
    noisy = Perturbed(PowerForm(1.0, 0.0), 1e-3, 11)
    r = residual_sup(noisy, -1, g)
    bound = noise_residual_bound(1e-3, -1, g)
    assert r.value <= bound.value
    # pointwise triangle inequality
    d = np.abs(defect_array(noisy, -1, g.x, g.y))
    assert np.all(d <= 1e-3 * (2 + (1 - g.x)**-1 + (1 - g.y)**-1) * (1 + 1e-12))
    assert r.value == np.max(d)
    assert r.argmax in set(g.points)


def test_residual_sup_reports_bad_point():
    t = Tabulated([0.2, 0.8], [0.0, 1.0])
    with pytest.raises(EvaluationError) as exc:
        residual_sup(t, -1, make_interior_grid(0.01, 10))
    assert exc.value.point is not None


def test_transform_F_examples():
    f = PowerForm(1.0, 0.0)
    assert transform_F(f, -1, 2.0, 1.0) == pytest.approx(1.0, rel=1e-15)
    assert transform_F(f, -1, 2, 2) == pytest.approx(0.5 * transform_F(f, -1, 1, 1), rel=1e-12)
    with pytest.raises(DomainError):
        transform_F(f, -1, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(SPECS[:3]), st.floats(0.05, 20), st.floats(0.05, 20),
       st.sampled_from([0.5, 2.0, 10.0]))
def test_homogeneity(spec_alpha, u, v, t):
    spec, alpha = spec_alpha
    if isinstance(spec, Perturbed):
        spec = spec.base  # noise is not homogeneous
    lhs = transform_F(spec, alpha, t * u, t * v)
    rhs = t**alpha * transform_F(spec, alpha, u, v)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(SPECS), st.floats(0.01, 0.99))
def test_F_reproduces_f(spec_alpha, x):
    spec, alpha = spec_alpha
    assert transform_F(spec, alpha, 1 - x, x) == pytest.approx(eval_f(spec, alpha, x),
                                                               rel=1e-12, abs=1e-12)


def test_transform_g_examples():
    f = PowerForm(1.0, 0.0)
    assert transform_g(f, -1, 1.0) == 0.0
    assert transform_g(f, -1, 2.0) == pytest.approx(0.5, rel=1e-14)
    for u in (0.3, 2.0, 7.0):
        assert transform_g(LogForm(1.3, 0.4), 0, u) == pytest.approx(1.3 * math.log(u), rel=1e-12)


@pytest.mark.parametrize("a, b, alpha", [(1, 0, -1), (2, -1, -0.5), (-3, 4, -2.3)])
def test_g_power_identities(a, b, alpha):
    f = PowerForm(a, b)
    g = lambda u: transform_g(f, alpha, u)  # noqa: E731
    for u in (0.5, 2.0, 3.0):
        assert g(u) == pytest.approx((b - a) * (u**alpha - 1), abs=1e-10)
        for v in (0.5, 2.0, 3.0):
            assert g(u * v) == pytest.approx(g(u) * v**alpha + g(v), abs=1e-10)


def test_transform_G():
    f = PowerForm(1.0, 0.0)
    assert transform_G(f, -1, 1, 2) == pytest.approx(1.0, rel=1e-14)
    for u, v in [(1, 2), (0.3, 5), (4, 0.2)]:
        assert transform_G(PowerForm(2, -1), -0.5, u, v) == pytest.approx(
            transform_G(PowerForm(2, -1), -0.5, v, u), abs=1e-10)


def test_G_asymmetry_and_cocycle_under_noise():
    # at alpha = 0 the noise bound is 4 delta on the whole open triangle
    delta = 1e-3
    f = Perturbed(LogForm(1.0, 0.5), delta, 21)
    eps = 4 * delta
    for u, v, w in [(1, 2, 3), (0.2, 0.7, 1.1), (5, 1, 0.5)]:
        assert abs(transform_G(f, 0, u, v) - transform_G(f, 0, v, u)) <= 3 * eps
        assert abs(cocycle_defect(f, 0, u, v, w)) <= eps


def test_cocycle_exact():
    assert abs(cocycle_defect(PowerForm(1, 1), -1, 1, 1, 1)) <= 1e-12
    assert abs(cocycle_defect(PowerForm(1, 1), -1, 1, 2, 2)) <= 1e-12
    with pytest.raises(DomainError):
        cocycle_defect(PowerForm(1, 1), -1, 1, -2, 2)


def test_eval_array_pointwise_matches():
    p = Pointwise(lambda t: 2 * t)
    assert np.allclose(eval_array(p, -1, [0.1, 0.2]), [0.2, 0.4])
