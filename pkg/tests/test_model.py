from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from pmdpsynth.model import (AffineExpr, ModelError, PMDP, Specification,
                             UnboundParameterError, check_well_defined,
                             instantiate, well_definedness_is_universal)

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=64)


def affine_exprs(names=("x", "y", "z")):
    return st.builds(
        lambda c, coeffs: AffineExpr.make(c, coeffs),
        rationals,
        st.dictionaries(st.sampled_from(list(names)), rationals, max_size=3),
    )


def test_make_drops_zero_coefficients():
    e = AffineExpr.make(1, {"v": Fraction(0), "w": Fraction(2)})
    assert e.coefficients == (("w", Fraction(2)),)
    assert e.parameters() == {"w"}


def test_expression_equality_is_semantic():
    a = AffineExpr.var("v") + AffineExpr.var("v", -1)
    assert a == AffineExpr.const(0)


@given(affine_exprs(), affine_exprs(),
       st.dictionaries(st.sampled_from(["x", "y", "z"]), rationals,
                       min_size=3, max_size=3))
def test_addition_commutes_with_evaluation(a, b, u):
    assert (a + b).evaluate(u) == a.evaluate(u) + b.evaluate(u)


@given(affine_exprs(), rationals,
       st.dictionaries(st.sampled_from(["x", "y", "z"]), rationals,
                       min_size=3, max_size=3))
def test_scaling_commutes_with_evaluation(a, f, u):
    assert a.scale(f).evaluate(u) == f * a.evaluate(u)


@given(affine_exprs(),
       st.dictionaries(st.sampled_from(["x", "y", "z"]),
                       st.tuples(rationals, rationals), min_size=3, max_size=3),
       st.dictionaries(st.sampled_from(["x", "y", "z"]),
                       st.fractions(min_value=0, max_value=1, max_denominator=32),
                       min_size=3, max_size=3))
def test_box_minimum_is_a_lower_bound(a, raw_box, frac):
    box = {k: (min(lo, hi), max(lo, hi)) for k, (lo, hi) in raw_box.items()}
    point = {k: lo + frac[k] * (hi - lo) for k, (lo, hi) in box.items()}
    assert a.box_minimum(box) <= a.evaluate(point)


def test_evaluate_missing_parameter_raises():
    with pytest.raises(UnboundParameterError):
        AffineExpr.var("v").evaluate({})


def _tiny_pmdp(row):
    return PMDP(
        state_names=("s", "t"),
        initial=0,
        params=("v",),
        param_bounds={"v": (Fraction(1, 10), Fraction(9, 10))},
        actions=(("a",), ("a",)),
        transitions={(0, 0): row, (1, 0): ((1, AffineExpr.const(1)),)},
        targets=frozenset({1}),
    )


def test_row_sum_must_be_identically_one():
    bad = ((1, AffineExpr.var("v")), (0, AffineExpr.var("v", -1)))
    with pytest.raises(ModelError, match="sums to"):
        _tiny_pmdp(bad)


def test_duplicate_successor_rejected():
    dup = ((1, AffineExpr.var("v")),
           (1, AffineExpr.make(1, {"v": Fraction(-1)})))
    with pytest.raises(ModelError, match="duplicate"):
        _tiny_pmdp(dup)


def test_undeclared_parameter_rejected():
    row = ((1, AffineExpr.var("w")), (0, AffineExpr.make(1, {"w": -1})))
    with pytest.raises(ModelError, match="undeclared"):
        _tiny_pmdp(row)


def test_instantiate_is_exact(fig1):
    u = {"v": Fraction(1, 3)}
    mdp = instantiate(fig1, u)
    s1 = fig1.state_index("s1")
    row = dict(mdp.transitions[(fig1.initial, 0)])
    assert row[s1] == Fraction(1, 3)
    for (s, a), row in mdp.transitions.items():
        assert sum(p for _, p in row) == 1


def test_check_well_defined_interior_and_boundary(fig1):
    eps = Fraction(1, 100_000)
    assert check_well_defined(fig1, {"v": Fraction(1, 2)}, eps).ok
    bad = check_well_defined(fig1, {"v": Fraction(0)}, eps)
    assert not bad.ok
    assert any("outside" in v for v in bad.violations)


def test_well_definedness_universal_on_fig1(fig1):
    assert well_definedness_is_universal(fig1, Fraction(1, 100_000))
    # a tighter floor than the box permits is not universal
    assert not well_definedness_is_universal(fig1, Fraction(1, 10))


def test_specification_validation():
    with pytest.raises(ModelError):
        Specification("reach", "at-most", Fraction(3, 2))
    with pytest.raises(ModelError):
        Specification("cost", "at-least", Fraction(-1))
    s = Specification("cost", "at-most", Fraction(7))
    assert str(s) == "E<=7"
