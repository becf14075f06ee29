from fractions import Fraction

import pytest

from pmdpsynth import analyze, parse_model, parse_spec
from pmdpsynth.graph import InfeasibleCostError, prob1_universal
from pmdpsynth.model import Specification


def test_fig1_prob_sets(fig1, spec_03):
    g = analyze(fig1, spec_03)
    assert g.prob0 == {fig1.state_index("s4")}
    assert g.prob1 == {fig1.state_index("s3")}
    assert g.reachable == set(range(5))


def test_fixed_values(fig1, spec_03):
    g = analyze(fig1, spec_03)
    assert g.fixed_value(fig1.state_index("s4"), spec_03) == 0.0
    assert g.fixed_value(fig1.state_index("s3"), spec_03) == 1.0
    assert g.fixed_value(fig1.initial, spec_03) is None


MDP_TEXT = """@type pmdp
@parameters v [1/10,9/10]
@initial s0
@targets goal
s0 go s1 v
s0 go sink 1-v
s0 wait s0 1
s1 go goal 1
goal stay goal 1
sink stay sink 1
"""


def test_at_least_prob0_uses_controllable_avoidance():
    # the 'wait' self loop lets a minimizing adversary avoid the target
    # forever, so s0 has value 0 in the at-least direction but not at-most
    m = parse_model(MDP_TEXT)
    g_most = analyze(m, parse_spec("P<=0.5"))
    g_least = analyze(m, parse_spec("P>=0.5"))
    assert m.initial not in g_most.prob0
    assert m.initial in g_least.prob0


def test_prob1_universal_requires_all_strategies():
    m = parse_model(MDP_TEXT)
    p1 = prob1_universal(m, set(m.targets))
    # s1 reaches the goal surely; s0 does not because of the wait loop
    assert m.state_index("s1") in p1
    assert m.initial not in p1


def test_cost_spec_rejected_when_goal_not_almost_sure(fig1):
    with pytest.raises(InfeasibleCostError):
        analyze(fig1, Specification("cost", "at-most", Fraction(10)))


def test_cost_spec_accepted_on_almost_sure_model():
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
    g = analyze(m, Specification("cost", "at-most", Fraction(10)))
    assert g.prob1 == m.targets
    assert g.prob0 == frozenset()
