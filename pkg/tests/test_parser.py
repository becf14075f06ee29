from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmdpsynth import bench, parse_model, parse_spec, serialize_model
from pmdpsynth.model import AffineExpr
from pmdpsynth.parser import (ParseError, parse_affine, parse_valuation,
                              serialize_valuation)


def test_affine_terms():
    e = parse_affine("1 - 2*v + 1/4*w")
    assert e.constant == 1
    assert e.coefficient("v") == -2
    assert e.coefficient("w") == Fraction(1, 4)


def test_affine_decimal_and_scientific():
    assert parse_affine("0.25").constant == Fraction(1, 4)
    assert parse_affine("1e-5").constant == Fraction(1, 100_000)


@pytest.mark.parametrize("bad", ["", "v +", "* v", "v w", "2 ** v", "v + + w"])
def test_affine_rejects_malformed(bad):
    with pytest.raises(ParseError):
        parse_affine(bad)


def test_model_round_trip(fig1, fig1_text):
    again = parse_model(serialize_model(fig1))
    assert again == fig1


def test_pmc_files_may_omit_actions(fig1):
    assert fig1.is_pmc()
    assert all(acts == ("a",) for acts in fig1.actions)


def test_state_order_is_first_mention(fig1):
    assert fig1.state_names[0] == "s0"
    assert fig1.initial == 0


@pytest.mark.parametrize("mutant, message", [
    ("@initial s0\ns0 s1 1", "missing @type"),
    ("@type pmc\ns0 s1 1", "missing @initial"),
    ("@type pmc\n@initial s0\ns0 s1 1/2", "sums to"),
    ("@type pmc\n@initial s0\ns0 s1 1\ns0 s1 0", "duplicate transition"),
    ("@type pmc\n@initial s0\n@targets zz\ns0 s0 1", "does not occur"),
    ("@type pmc\n@initial s0\ns0 s0 v", "undeclared parameter"),
])
def test_model_errors(mutant, message):
    with pytest.raises(ParseError, match=message):
        parse_model(mutant)


def test_parse_spec_forms():
    s = parse_spec("P<=0.3")
    assert (s.kind, s.direction, s.threshold) == ("reach", "at-most", Fraction(3, 10))
    s = parse_spec("E >= 14")
    assert (s.kind, s.direction, s.threshold) == ("cost", "at-least", 14)
    with pytest.raises(ParseError):
        parse_spec("P < 0.3")
    with pytest.raises(ParseError):
        parse_spec("P<=2")


def test_valuation_round_trip():
    u = {"v0": 0.24722221901004512, "v1": 1e-05}
    text = serialize_valuation(u, ["v0", "v1"])
    back = parse_valuation(text)
    assert float(back["v0"]) == u["v0"]
    assert float(back["v1"]) == u["v1"]


def test_costs_section_round_trip():
    text = """@type pmc
@parameters v [1/10,9/10]
@initial s0
@targets goal
s0 goal v
s0 s0 1-v
goal goal 1
@costs
s0 a 3/2
"""
    m = parse_model(text)
    assert m.costs == {(0, 0): Fraction(3, 2)}
    assert parse_model(serialize_model(m)) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_random_models_round_trip(seed):
    rng = np.random.default_rng(seed)
    m = bench.random_pmdp(rng)
    assert parse_model(serialize_model(m)) == m
