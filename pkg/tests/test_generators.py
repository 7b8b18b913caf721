import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infostab.approximant import certify
from infostab.domain import DomainError, DomainGrid, make_interior_grid
from infostab.equation import (COMB, LogForm, Perturbed, PowerForm, Tabulated, defect,
                               defect_array, eval_array, eval_f, residual_sup,
                               supplied_epsilon)
from infostab.generators import (PerturbationPlan, family_noise, family_noise_epsilons,
                                 make_canonical_family, make_exact_log, make_exact_power,
                                 oracle_defect, oracle_defect_scan,
                                 oracle_residual_bound_coefficient, perturb, perturb_family,
                                 sample_points, tabulate, tabulate_family)
from infostab.infomeasure import (LogFamily, PowerFamily, certify_family, merge_first,
                                  recursivity_residual, semisymmetry_residual, split_pair,
                                  swap_last)


def test_exact_power_examples(default_grid):
    f = make_exact_power(1, 0, -1)
    assert eval_f(f, -1, 0.25) == 4.0
    g = make_interior_grid(1e-3, 60)
    # zero up to double-double rounding
    assert np.max(np.abs(defect_array(make_exact_power(0, 3.5, -1.7), -1.7, g.x, g.y))) <= 1e-15
    assert residual_sup(make_exact_power(2, -1, -0.5), -0.5, default_grid).value <= 1e-9
    with pytest.raises(DomainError, match="make_exact_log"):
        make_exact_power(1, 0, 0)


def test_exact_log_examples(default_grid):
    g = make_interior_grid(1e-3, 60)
    assert np.all(defect_array(make_exact_log(0, 2.5), 0, g.x, g.y) == 0.0)
    assert residual_sup(make_exact_log(1, 0), 0, default_grid).value <= 1e-12
    c = certify(make_exact_log(2, -1), 0, default_grid, supplied_epsilon(0.0))
    assert abs(c.params.lam - 2) <= 1e-6 and abs(c.params.c + 1) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.sampled_from([-5.0, -1.3, -0.1, 0.0]))
def test_exact_always_certify(a, b, alpha):
    g = make_interior_grid(1e-2, 30)
    f = make_exact_log(a, b) if alpha == 0 else make_exact_power(a, b, alpha)
    c = certify(f, alpha, g, supplied_epsilon(0.0))
    assert c.satisfied and c.status == "satisfied"


def test_perturbation_plan():
    with pytest.raises(DomainError):
        PerturbationPlan(-1.0)
    with pytest.raises(DomainError):
        PerturbationPlan(1e-3, 0, "gaussian")
    base = make_exact_power(1, 2, -1)
    xs = sample_points(500)
    assert np.array_equal(eval_array(perturb(base, PerturbationPlan(0.0)), -1, xs),
                          eval_array(base, -1, xs))
    p = PerturbationPlan(1e-3, 1)
    a = eval_array(perturb(base, p), -1, xs)
    b = eval_array(perturb(base, p), -1, xs)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a - eval_array(base, -1, xs))) <= 1e-3 * (1 + 1e-9)
    c = eval_array(perturb(base, PerturbationPlan(1e-3, 2)), -1, xs)
    assert not np.array_equal(a, c)


def test_comb_alternates():
    f = perturb(make_exact_log(0, 0), PerturbationPlan(1e-3, 0, COMB))
    xs = (np.arange(40) + 0.5) / 1024
    assert eval_array(f, 0, xs).tolist() == [1e-3, -1e-3] * 20


def test_sample_points():
    xs = sample_points(200, 1e-3)
    assert xs[0] == 1e-3 and xs[-1] == 1 - 1e-3 and np.all(np.diff(xs) > 0)
    u = sample_points(11, 0.1, "uniform")
    assert np.allclose(np.diff(u), 0.08)
    # graded points crowd the ends
    assert xs[1] - xs[0] < u[1] - u[0]
    for bad in [(1, 1e-3, "graded"), (10, 0.5, "graded"), (10, 1e-3, "cosine")]:
        with pytest.raises(DomainError):
            sample_points(*bad)


def test_tabulate_interpolates():
    f = make_exact_power(1.0, 1.0, -0.5)
    t = tabulate(f, -0.5, sample_points(4000, 1e-3))
    x = np.linspace(0.01, 0.99, 50)
    assert np.max(np.abs(eval_array(t, -0.5, x) - eval_array(f, -0.5, x))) <= 1e-4


def test_canonical_family_examples():
    fam = make_canonical_family(PowerFamily(1, 0), -1, 4)
    assert fam((0.5, 0.5)) == pytest.approx(1.0)
    log3 = make_canonical_family(LogFamily(1, 0), 0, 3)
    assert log3((0.2, 0.3, 0.5)) == 2.0 and log3((0.6, 0.3, 0.1)) == 2.0
    two = make_canonical_family(PowerFamily(1, 0), -1, 2)
    with pytest.raises(DomainError):
        recursivity_residual(two, -1, 3, [(0.2, 0.3, 0.5)])
    assert fam.metadata["kind"] == "canonical"


def test_family_noise_bounded_and_deterministic():
    ps = [(0.3, 0.7), (0.2, 0.3, 0.5), (0.1, 0.2, 0.3, 0.4)]
    for p in ps:
        v = family_noise(1e-3, 5, p)
        assert abs(v) <= 1e-3 and v == family_noise(1e-3, 5, p)
        assert v != family_noise(1e-3, 6, p)
    assert family_noise(0.0, 5, ps[0]) == 0.0


def test_perturb_family_examples():
    fam = make_canonical_family(PowerFamily(2.0, 1.0), -1, 4)
    same = perturb_family(fam, [0.0, 0.0, 0.0], 1)
    pts = [(0.2, 0.3, 0.5), (0.1, 0.6, 0.3)]
    assert recursivity_residual(same, -1, 3, pts) == recursivity_residual(fam, -1, 3, pts)
    deltas = [1e-3] * 3
    eps = family_noise_epsilons(deltas, -1, 4)
    for seed in (1, 2):
        noisy = perturb_family(fam, deltas, seed)
        assert recursivity_residual(noisy, -1, 3, pts) <= eps[1]
        assert semisymmetry_residual(noisy, pts) <= eps[0]
    assert perturb_family(fam, deltas, 1)(pts[0]) != perturb_family(fam, deltas, 2)(pts[0])
    with pytest.raises(DomainError):
        perturb_family(fam, [1e-3], 1)


def test_family_noise_epsilons():
    eps = family_noise_epsilons([1e-3, 2e-3, 3e-3], 0, 4)
    assert eps == pytest.approx([4e-3, 3e-3 + 1e-3, 3e-3 + 2e-3 + 1e-3])
    assert len(family_noise_epsilons([1e-3, 1e-3], -1, 2)) == 2
    with pytest.raises(DomainError):
        family_noise_epsilons([1e-3], -1, 3)


def test_tabulated_family_closed_and_certifies():
    fam = perturb_family(make_canonical_family(PowerFamily(1.0, 0.5), -1, 5), [1e-3] * 4, 2)
    tab = tabulate_family(fam, -1, 5, 12, seed=4)
    for n in range(3, 6):
        for p in tab.vectors(n):
            assert merge_first(p.p) in tab.table and split_pair(p.p) in tab.table
    for p in tab.vectors(3):
        assert swap_last(p.p) in tab.table
    cert = certify_family(tab, -1, 5, epsilons=family_noise_epsilons([1e-3] * 4, -1, 5),
                          epsilon_provenance="derived-from-noise-bound")
    assert cert.satisfied
    est = certify_family(tab, -1, 5)
    assert est.satisfied


def test_tabulate_family_deterministic():
    fam = make_canonical_family(LogFamily(1.0, -1.0), 0, 4)
    a = tabulate_family(fam, 0, 4, 5, seed=1)
    b = tabulate_family(fam, 0, 4, 5, seed=1)
    assert a.table == b.table
    with pytest.raises(DomainError):
        tabulate_family(fam, 0, 5, 5)


def test_oracle_identity_value():
    # f(x) = x as a two-knot linear table, exact at every point
    ident = Tabulated([1e-3, 1 - 1e-3], [1e-3, 1 - 1e-3])
    assert oracle_defect(ident, -1, 0.5, 0.25) == pytest.approx(13 / 36, abs=1e-15)


ORACLE_SPECS = [
    (PowerForm(2.0, -1.0), -0.5), (PowerForm(-7.5, 3.25), -5.0), (LogForm(1.5, 2.0), 0.0),
    (Perturbed(PowerForm(1.0, 1.0), 1e-3, 3), -1.0),
    (Perturbed(LogForm(1.0, 0.0), 1e-2, 3, COMB), 0.0),
    (tabulate(PowerForm(1.0, -1.0), -2.0, sample_points(300, 1e-3)), -2.0),
]


@pytest.mark.parametrize("spec, alpha", ORACLE_SPECS)
def test_oracle_matches_kernel(spec, alpha):
    g = make_interior_grid(1e-3, 30)
    fast = defect_array(spec, alpha, g.x, g.y)
    slow = oracle_defect_scan(spec, alpha, g).values
    scale = max(1.0, float(np.max(np.abs(eval_array(spec, alpha, g.coordinates())))))
    assert np.max(np.abs(fast - slow)) <= 1e-13 * scale


def test_oracle_exact_solutions_zero():
    g = make_interior_grid(1e-2, 12)
    for spec, al in ORACLE_SPECS[:3]:
        assert oracle_defect_scan(spec, al, g).max_abs()[0] <= 1e-13


def test_oracle_point_and_errors():
    f = Perturbed(PowerForm(1.0, 1.0), 1e-3, 3)
    assert oracle_defect(f, -1, 0.2, 0.3) == pytest.approx(defect(f, -1, 0.2, 0.3), abs=1e-13)
    with pytest.raises(DomainError):
        oracle_defect_scan(f, -1, DomainGrid(0.01, 0, np.empty(0), np.empty(0)))


def test_oracle_coefficient():
    g = make_interior_grid(1e-2, 50)
    assert oracle_residual_bound_coefficient(0, g) == 4.0
    brute = oracle_residual_bound_coefficient(-1, g)
    assert brute == pytest.approx(max(2 + 1 / (1 - x) + 1 / (1 - y) for x, y in g.points))
    assert math.isfinite(brute)
