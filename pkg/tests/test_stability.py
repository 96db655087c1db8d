import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multicubic import equation as eq
from multicubic import stability as stab
from multicubic.errors import DivergenceError, DomainError, UnsupportedExponentError
from multicubic.mappings import add_power_noise, eval as evaluate, make_multicubic_monomial

from conftest import poly

rationals = st.fractions(min_value=-10, max_value=10, max_denominator=17)


def S(x1, x2):
    return eq.EquationSample(tuple(x1), tuple(x2))


# -- controls ------------------------------------------------------------------------

def test_power_control_values():
    phi = stab.power_control(Fraction(1, 2), 2)
    assert phi((1, 2), (3, 0)) == Fraction(1, 2) * (1 + 4 + 9)
    with pytest.raises(DomainError):
        stab.power_control(-1, 2)


def test_product_control_values():
    phi = stab.product_control(2, ((1, 1), (2, 1)))
    assert phi((1, 2), (3, 1)) == 2 * 1 * 2 * 9 * 1
    assert phi((1, 2), (0, 1)) == 0
    assert phi.exponent_sum == 5
    with pytest.raises(DomainError):
        stab.product_control(1, ((1, 0), (1, 1)))
    with pytest.raises(DomainError):
        stab.product_control(1, ((1, 1),))


def test_empirical_control_lookup():
    phi = stab.empirical_control({S((1,), (2,)): Fraction(3)})
    assert phi((1,), (2,)) == 3
    with pytest.raises(DomainError):
        phi((1,), (3,))


# -- generic engine -------------------------------------------------------------------

def test_iterate_operator_fixed_point_and_sum():
    # T f(x) = f(2x)/8 on f = x^3 + 1; Lambda theta(x) = theta(2x)/8 on theta = 1/4
    desc = stab.rescaling_descriptor(1, 1)
    f = lambda x: x[0] ** 3 + 1  # noqa: E731
    theta = lambda x: Fraction(1, 4)  # noqa: E731
    res = stab.iterate_operator(desc, f, theta, (Fraction(1),), 40)
    assert res.value == 1 + Fraction(1, 8) ** 40
    assert res.theta_star == sum(Fraction(1, 4) * Fraction(1, 8) ** l for l in range(41))
    assert res.converged and not res.diverged


def test_iterate_operator_divergence():
    desc = stab.OperatorDescriptor(((lambda x: x, lambda x: 8),))
    res = stab.iterate_operator(desc, lambda x: 1, lambda x: 1, (1,), 20)
    assert res.diverged and res.value is None


def test_iterate_operator_with_two_summands():
    half = Fraction(1, 2)
    desc = stab.OperatorDescriptor(((lambda x: x, lambda x: half / 2), (lambda x: x, lambda x: half / 2)))
    res = stab.iterate_operator(desc, lambda x: 1, lambda x: 1, (0,), 10)
    assert res.theta_star == sum(half ** l for l in range(11))
    assert len(res.terms) == 11


def test_iterate_reproduces_apply_T_pow():
    f = poly(1, ((3,), 2), ((2,), 1), ((1,), -3))
    for beta in (1, -1):
        desc = stab.rescaling_descriptor(1, beta)
        for l in (0, 1, 5):
            res = stab.iterate_operator(desc, lambda x: f(x)[0], lambda x: 0, (Fraction(3, 2),), l)
            assert res.value == stab.apply_T_pow(f, beta, l, (Fraction(3, 2),))[0]


def test_empty_descriptor_rejected():
    with pytest.raises(DomainError):
        stab.OperatorDescriptor(())


# -- rescaling --------------------------------------------------------------------------

def test_choose_beta():
    assert stab.choose_beta(1, 1) == 1
    assert stab.choose_beta(5, 1) == -1
    assert stab.choose_beta(Fraction(17, 3), 2) == 1
    with pytest.raises(UnsupportedExponentError):
        stab.choose_beta(3, 1)
    with pytest.raises(UnsupportedExponentError):
        stab.choose_beta(6, 2)


def test_apply_T_pow_examples():
    f = poly(1, ((1,), 1))
    assert stab.apply_T_pow(f, 1, 1, (1,)) == (Fraction(2, 8),)
    assert stab.apply_T_pow(f, -1, 2, (1,)) == (Fraction(64, 4),)
    with pytest.raises(DomainError):
        stab.apply_T_pow(f, 2, 1, (1,))
    with pytest.raises(DomainError):
        stab.apply_T_pow(f, 1, -1, (1,))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), rationals, st.integers(0, 40), st.sampled_from([1, -1]), st.data())
def test_multicubic_is_fixed_by_T(n, c, l, beta, data):
    f = make_multicubic_monomial(n, c)
    x = tuple(data.draw(st.lists(rationals, min_size=n, max_size=n)))
    assert stab.apply_T_pow(f, beta, l, x) == f(x)
    assert stab.TPowMapping(f, beta, l)(x) == f(x)


def test_contraction_residual_examples(cube):
    assert stab.contraction_residual(cube, (Fraction(5, 3),)) == (0,)
    lin = poly(1, ((1,), 1))
    assert stab.contraction_residual(lin, (1,)) == (2 - 8,)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_one_step_contraction_bound(data):
    # D f(x, 0) = 2^n f(2x) - 2^(4n) f(x), so the residual is 2^-n ||D f(x, 0)||
    n = data.draw(st.integers(1, 2))
    c = data.draw(rationals)
    eps = data.draw(st.fractions(min_value=0, max_value=1, max_denominator=50))
    f = poly(n, ((3,) * n, c), ((1,) * n, eps))
    grid = [S(x, (0,) * n) for x in [(Fraction(k),) * n for k in range(1, 4)]]
    delta = stab.fit_delta(f, 1, grid)
    phi = stab.power_control(delta, 1)
    for s in grid:
        lhs = max(abs(v) for v in stab.contraction_residual(f, s.x1))
        assert lhs <= Fraction(1, 2 ** n) * phi(s.x1, s.x2)


# -- the bound series ----------------------------------------------------------------------

def test_phi_series_below_critical_exponent():
    phi = stab.power_control(1, 1)
    res = stab.phi_series((Fraction(2),), phi, 1, 1)
    assert res.total == Fraction(1, 6)
    assert not res.diverged and res.ratio == Fraction(1, 4)


def test_phi_series_above_critical_exponent():
    phi = stab.power_control(1, 5)
    res = stab.phi_series((Fraction(1),), phi, -1, 1)
    assert res.total == Fraction(1, 48)
    assert res.total == stab.phi_closed_form((1,), 1, 5, 1, "series")
    assert stab.phi_closed_form((1,), 1, 5, 1, "paper") == Fraction(2, 3)


def test_phi_series_diverges_with_wrong_beta():
    phi = stab.power_control(1, 1)
    res = stab.phi_series((Fraction(1),), phi, -1, 1)
    assert res.diverged and res.total == math.inf


def test_phi_series_with_empirical_control_extrapolates():
    phi = stab.empirical_control(lambda x1, x2: sum(abs(c) for c in x1))
    res = stab.phi_series((Fraction(1),), phi, 1, 1, terms=30)
    assert res.total == pytest.approx(float(stab.phi_closed_form((1,), 1, 1, 1)), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 12), st.data())
def test_series_matches_closed_form(n, alpha, data):
    if alpha == 3 * n:
        alpha += 1
    x = tuple(data.draw(st.lists(rationals, min_size=n, max_size=n)))
    delta = data.draw(st.fractions(min_value=0, max_value=5, max_denominator=9))
    beta = stab.choose_beta(alpha, n)
    series = stab.phi_series(x, stab.power_control(delta, alpha), beta, n)
    assert series.total == stab.phi_closed_form(x, delta, alpha, n, "series")
    if alpha < 3 * n:
        assert series.total == stab.phi_closed_form(x, delta, alpha, n, "paper")
    else:
        assert series.total <= stab.phi_closed_form(x, delta, alpha, n, "paper")


def test_series_at_alpha_zero_counts_the_zero_argument():
    # ||0||^0 = 1, so phi(x, 0) = 2 n delta while the closed form sums only over x
    phi = stab.power_control(1, 0)
    res = stab.phi_series((Fraction(3),), phi, 1, 1)
    assert float(res.total) == pytest.approx(2 / 14, rel=1e-12)
    assert stab.phi_closed_form((3,), 1, 0, 1) == Fraction(1, 14)


def test_closed_form_rejections():
    with pytest.raises(UnsupportedExponentError):
        stab.phi_closed_form((1,), 1, 3, 1)
    with pytest.raises(DomainError):
        stab.phi_closed_form((1,), 1, 1, 1, "other")


# -- hypothesis fitting ---------------------------------------------------------------------

def test_fit_delta_examples(cube):
    assert stab.fit_delta(cube, 1, eq.integer_grid(1)) == 0
    square = poly(1, ((2,), 1))
    # |D(x^2)(1, 1)| = 10 over 1 + 1
    assert stab.fit_delta(square, 1, [S((1,), (1,))]) == 5
    assert stab.fit_delta(square, 1, [S((0,), (0,)), S((1,), (1,))]) == 5
    const = poly(1, ((0,), 1))
    assert stab.fit_delta(const, 1, [S((0,), (0,))]) == math.inf


def test_check_hypothesis():
    square = poly(1, ((2,), 1))
    grid = [S((1,), (1,)), S((2,), (0,))]
    assert stab.check_hypothesis(square, stab.power_control(100, 2), grid).certified
    res = stab.check_hypothesis(square, stab.power_control(1, 1), grid)
    assert not res.certified and res.violations == 2 and res.first_violation == grid[0]


def test_decay_check_holds_for_noisy_cube():
    f = add_power_noise(make_multicubic_monomial(1, 5), Fraction(1, 100), 1, seed=3)
    grid = eq.integer_grid(1, -2, 2)
    scaled = [s.scaled(Fraction(2) ** l) for l in range(4) for s in grid]
    phi = stab.power_control(stab.fit_delta(f, 1, scaled), 1)
    rep = stab.dpow_decay_check(f, phi, 1, grid, 3)
    assert rep.holds and rep.hypothesis_ok and rep.checked == 4 * len(grid)
    assert rep.worst_ratio <= 1


def test_decay_check_reports_hypothesis_failures_separately():
    f = poly(1, ((2,), 1))
    rep = stab.dpow_decay_check(f, stab.power_control(0, 1), 1, [S((1,), (1,))], 2)
    assert not rep.hypothesis_ok and rep.holds
    assert len(rep.hypothesis_failures) == 3


# -- stabilization ---------------------------------------------------------------------------

def _points(k=9):
    return tuple((Fraction(-2) + Fraction(4 * i, k - 1),) for i in range(k))


def test_stabilize_recovers_cube_exactly():
    core = make_multicubic_monomial(1, 5)
    f = add_power_noise(core, Fraction(1, 2000), 1, seed=1)
    phi = stab.power_control(Fraction(1, 100), 1)
    cfg = stab.StabilizationConfig(points=_points(), grid=tuple(eq.default_grid(1)))
    rep = stab.stabilize(f, phi, cfg)
    assert rep.beta == 1 and rep.hypothesis.certified
    assert rep.converged and rep.bound_satisfied
    for row in rep.rows:
        assert abs(row.C[0] - core(row.x)[0]) <= abs(row.x[0]) / 1200 + Fraction(1, 10 ** 9)
        assert row.phi_series == row.phi_paper
    assert abs(rep.recovered_coefficient[0] - 5) <= Fraction(1, 1200)


def test_stabilize_beta_minus_one():
    core = make_multicubic_monomial(1, 2)
    f = add_power_noise(core, Fraction(1, 1000), 5, seed=2)
    cfg = stab.StabilizationConfig(points=((Fraction(1),), (Fraction(3, 2),)), mode="float")
    rep = stab.stabilize(f, stab.power_control(Fraction(1, 10), 5), cfg)
    assert rep.beta == -1 and rep.mode == "float"
    assert rep.hypothesis is None
    for row in rep.rows:
        assert row.phi_series <= row.phi_paper
        assert row.C[0] == pytest.approx(evaluate(core, row.x)[0], abs=1e-9)


def test_stabilize_non_cubic_not_certified():
    f = poly(1, ((3,), 1), ((1,), 1))
    phi = stab.power_control(Fraction(1, 10), 1)
    cfg = stab.StabilizationConfig(points=_points(5), grid=tuple(eq.integer_grid(1)))
    rep = stab.stabilize(f, phi, cfg)
    assert not rep.hypothesis.certified
    assert not rep.bound_satisfied


def test_stabilize_singular_points():
    # phi(x, 0) contains ||0||^alpha, so a negative alpha is singular everywhere
    f = make_multicubic_monomial(1, 1)
    cfg = stab.StabilizationConfig(points=((Fraction(0),), (Fraction(1),)))
    rep = stab.stabilize(f, stab.power_control(1, -1), cfg)
    assert rep.singular_points == [(Fraction(0),), (Fraction(1),)]
    assert not rep.bound_satisfied
    assert all(r.note == "singular" for r in rep.rows)


def test_stabilize_divergent_series_raises():
    f = make_multicubic_monomial(1, 1)
    cfg = stab.StabilizationConfig(beta=-1, points=((Fraction(1),),))
    with pytest.raises(DivergenceError, match="hypothesis"):
        stab.stabilize(f, stab.power_control(1, 1), cfg)


def test_stabilize_product_control_pathway():
    f = make_multicubic_monomial(2, 5)
    cfg = stab.StabilizationConfig(points=((1, 1),), grid=tuple(eq.integer_grid(2, -1, 1)))
    rep = stab.stabilize(f, stab.product_control(1, ((1, 1), (1, 1))), cfg)
    assert rep.pathway == "hyperstability" and rep.hyperstability.ok
    assert rep.rows[0].C == rep.rows[0].f and rep.bound_satisfied


def test_config_validation():
    with pytest.raises(DomainError):
        stab.StabilizationConfig(iterations=0)
    with pytest.raises(DomainError):
        stab.StabilizationConfig(beta=0)
    with pytest.raises(DomainError):
        stab.StabilizationConfig(tolerance=0)


# -- hyperstability and uniqueness ------------------------------------------------------------

def test_hyperstability_examples():
    phi = stab.product_control(1, ((1, 1), (1, 1)))
    grid = eq.default_grid(2)
    assert stab.hyperstability_check(make_multicubic_monomial(2, 5), phi, grid).ok
    bad = poly(2, ((3, 3), 5), ((1, 0), Fraction(1, 10)))
    v = stab.hyperstability_check(bad, phi, grid)
    assert v.kind == stab.HYPOTHESIS_VIOLATED
    assert v.bound == 0 and v.residual != (0,)


def test_hyperstability_violation_at_vanishing_control():
    phi = stab.product_control(1, ((1,), (1,)))
    bad = poly(1, ((3,), 5), ((1,), Fraction(1, 10)))
    v = stab.hyperstability_check(bad, phi, eq.default_grid(1))
    assert v.kind == stab.HYPOTHESIS_VIOLATED and v.bound == 0


def test_hyperstability_counterexample_flag():
    # a grid too coarse to expose the violation lets the classifier decide
    phi = stab.product_control(100, ((1,), (1,)))
    bad = poly(1, ((3,), 1), ((1,), 1))
    v = stab.hyperstability_check(bad, phi, [S((1,), (1,))])
    assert v.counterexample and v.classification.kind == eq.EQUATION_FAILS


def test_hyperstability_rejections():
    f = make_multicubic_monomial(1, 1)
    with pytest.raises(UnsupportedExponentError):
        stab.hyperstability_check(f, stab.product_control(1, ((1,), (2,))), eq.integer_grid(1))
    with pytest.raises(DomainError):
        stab.hyperstability_check(f, stab.power_control(1, 1), eq.integer_grid(1))


def test_uniqueness_same_core_different_seeds():
    core = make_multicubic_monomial(1, 5)
    f1 = add_power_noise(core, Fraction(1, 2000), 1, seed=1)
    f2 = add_power_noise(core, Fraction(1, 2000), 1, seed=2)
    cfg = stab.StabilizationConfig(points=_points(), mode="float")
    rep = stab.uniqueness_check(f1, f2, stab.power_control(Fraction(1, 100), 1), cfg)
    assert rep.max_disagreement <= 1e-9


def test_uniqueness_different_cores_disagree():
    f1 = make_multicubic_monomial(1, 5)
    f2 = make_multicubic_monomial(1, 7)
    cfg = stab.StabilizationConfig(points=_points())
    rep = stab.uniqueness_check(f1, f2, stab.power_control(Fraction(1, 100), 1), cfg)
    assert rep.max_disagreement == 2 * 8
    assert abs(rep.worst_point[0]) == 2
