from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmdpsynth import bench, instantiate, parse_model, parse_spec
from pmdpsynth.mc import (Checker, brute_force_oracle, extremal_cost,
                          extremal_reach)
from pmdpsynth.model import Specification

TOL = 1e-9


def test_fig1_value_is_v_squared_times_one_minus_v(fig1):
    checker = Checker(fig1)
    for v in (0.1, 0.5, 2 / 3, 0.9):
        checker.set_valuation({"v": v})
        res = checker.reach_values("max", TOL)
        assert res.values[fig1.initial] == pytest.approx(v * v * (1 - v), abs=1e-8)


def test_fig1_exact_oracle(fig1):
    mdp = instantiate(fig1, {"v": Fraction(1, 2)})
    assert brute_force_oracle(mdp, parse_spec("P<=0.3")) == Fraction(1, 8)


def test_check_verdicts(fig1):
    checker = Checker(fig1)
    holds, value = checker.check({"v": 0.1}, parse_spec("P<=0.1"))
    assert holds and value == pytest.approx(0.009, abs=1e-8)
    holds, value = checker.check({"v": 0.5}, parse_spec("P<=0.1"))
    assert not holds and value == pytest.approx(0.125, abs=1e-8)


def test_strategy_extraction_picks_extremal_action():
    m = parse_model("""@type pmdp
@parameters v [1/10,9/10]
@initial s0
@targets goal
s0 low goal 3/10
s0 low sink 7/10
s0 high goal 6/10
s0 high sink 4/10
goal stay goal 1
sink stay sink 1
""")
    checker = Checker(m)
    checker.set_valuation({"v": 0.5})
    hi = checker.reach_values("max", TOL)
    lo = checker.reach_values("min", TOL)
    assert hi.values[0] == pytest.approx(0.6)
    assert lo.values[0] == pytest.approx(0.3)
    assert m.actions[0][hi.strategy[0]] == "high"
    assert m.actions[0][lo.strategy[0]] == "low"


def test_certified_agrees_with_value_iteration(fig1):
    checker = Checker(fig1)
    checker.set_valuation({"v": 0.37})
    vi = checker.reach_values("max", 1e-10)
    exact = checker.certified_values("reach", "max")
    assert np.max(np.abs(vi.values - exact.values)) < 1e-7


def test_cost_values_closed_form():
    # single retry loop: expected steps to the goal is 1/v
    m = parse_model("""@type pmc
@parameters v [1/10,9/10]
@initial s0
@targets goal
s0 goal v
s0 s0 1-v
goal goal 1
@costs
s0 a 1
""")
    checker = Checker(m)
    for v in (0.2, 0.5, 0.8):
        checker.set_valuation({"v": v})
        res = checker.certified_values("cost", "max")
        assert res.values[0] == pytest.approx(1 / v, rel=1e-7)


def test_chain_value_is_product_of_parameters():
    m = bench.chain(4, nparams=2)
    checker = Checker(m)
    u = {"v0": 0.7, "v1": 0.4}
    checker.set_valuation(u)
    res = checker.reach_values("max", TOL)
    assert res.values[m.initial] == pytest.approx((0.7 * 0.4) ** 2, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_reach_matches_exact_oracle(seed, a, b):
    rng = np.random.default_rng(seed)
    m = bench.random_pmdp(rng, max_states=6, max_actions=2, nparams=2)
    u = {"v0": Fraction(a).limit_denominator(64),
         "v1": Fraction(b).limit_denominator(64)}
    mdp = instantiate(m, u)
    for direction, opt in (("at-most", "max"), ("at-least", "min")):
        spec = Specification("reach", direction, Fraction(1, 2))
        exact = brute_force_oracle(mdp, spec)
        got = extremal_reach(mdp, m.targets, opt, 1e-10).values[m.initial]
        assert got == pytest.approx(float(exact), abs=1e-6)


def test_monotone_in_chain_parameter():
    m = bench.chain(3, nparams=1)
    checker = Checker(m)
    vals = []
    for v in np.linspace(0.1, 0.9, 9):
        checker.set_valuation({"v0": v})
        vals.append(checker.reach_values("max", TOL).values[m.initial])
    assert all(x < y for x, y in zip(vals, vals[1:]))
