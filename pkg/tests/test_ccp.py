import io
import re
from fractions import Fraction

import numpy as np
import pytest

from pmdpsynth import CcpConfig, parse_model, parse_spec, synthesize
from pmdpsynth.ccp import initial_anchor
from pmdpsynth.encode import build_nlp
from pmdpsynth.graph import analyze
from pmdpsynth.mc import Checker
from pmdpsynth.model import check_well_defined

EPS = Fraction(1, 100_000)


def _certified(m, res, spec):
    assert res.status == "feasible"
    u = {k: Fraction(v) for k, v in res.instantiation.items()}
    assert check_well_defined(m, u, EPS).ok
    holds, value = Checker(m).check(res.instantiation, spec, certified=True)
    assert holds
    return value


def test_fig1_feasible(fig1, spec_03):
    res = synthesize(fig1, spec_03, CcpConfig(seed=0))
    value = _certified(fig1, res, spec_03)
    v = res.instantiation["v"]
    assert value == pytest.approx(v * v * (1 - v), abs=1e-6)
    assert value <= 0.3 + 1e-6
    assert res.iterations <= 20


@pytest.mark.parametrize("split", ["bilinear", "eigen"])
def test_both_splits_solve(fig1, spec_03, split):
    res = synthesize(fig1, spec_03, CcpConfig(seed=0, split=split))
    _certified(fig1, res, spec_03)


def test_at_least_direction(fig1):
    spec = parse_spec("P>=0.1")
    res = synthesize(fig1, spec, CcpConfig(seed=0))
    value = _certified(fig1, res, spec)
    assert value >= 0.1 - 1e-6


def test_unattainable_threshold_exhausts(fig1):
    # max of v^2 (1 - v) over the box is 4/27 < 0.2
    res = synthesize(fig1, parse_spec("P>=0.2"),
                     CcpConfig(seed=0, max_iters=15, restarts=1))
    assert res.status == "exhausted"
    assert res.instantiation is None


def test_trivial_threshold_one_iteration(fig1):
    res = synthesize(fig1, parse_spec("P<=1"), CcpConfig(seed=0))
    assert res.status == "feasible"
    assert res.iterations == 1


def test_plain_penalty_ccp_is_still_sound(fig1, spec_03):
    res = synthesize(fig1, spec_03, CcpConfig(seed=0, mc_feedback=False))
    _certified(fig1, res, spec_03)


def test_cost_specification():
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
    spec = parse_spec("E<=4")   # expected steps 1/v <= 4 needs v >= 1/4
    res = synthesize(m, spec, CcpConfig(seed=0))
    value = _certified(m, res, spec)
    assert res.instantiation["v"] >= 0.25 - 1e-6
    assert value == pytest.approx(1 / res.instantiation["v"], rel=1e-6)


def test_cost_infeasible_instance(fig1):
    res = synthesize(fig1, parse_spec("E<=10"), CcpConfig(seed=0))
    assert res.status == "infeasible-instance"


def test_progress_stream_reports_tau_nondecreasing(fig1):
    buf = io.StringIO()
    synthesize(fig1, parse_spec("P>=0.2"),
               CcpConfig(seed=0, max_iters=10, restarts=0, progress=buf))
    taus = [float(m.group(1))
            for m in re.finditer(r"tau=([0-9.eE+-]+)", buf.getvalue())]
    assert len(taus) == 10
    assert all(a <= b for a, b in zip(taus, taus[1:]))


def test_initial_anchor_center_and_threshold(fig1, spec_03):
    nlp = build_nlp(fig1, spec_03, analyze(fig1, spec_03), EPS)
    anchor = initial_anchor(fig1, spec_03, nlp)
    assert anchor[:3] == pytest.approx([0.3, 0.3, 0.3])
    assert anchor[3] == pytest.approx(0.5)


def test_restart_anchor_stays_in_box(fig1, spec_03):
    nlp = build_nlp(fig1, spec_03, analyze(fig1, spec_03), EPS)
    rng = np.random.default_rng(0)
    prev = initial_anchor(fig1, spec_03, nlp)
    for _ in range(50):
        prev = initial_anchor(fig1, spec_03, nlp, rng, prev)
        j = nlp.space.param_of["v"]
        assert nlp.space.lb[j] <= prev[j] <= nlp.space.ub[j]


def test_solver_seam_is_used(fig1, spec_03):
    from pmdpsynth import qp
    calls = []

    def counting(prog, warm=None, tols=None):
        calls.append(warm is not None)
        return qp.solve(prog, warm, tols)

    res = synthesize(fig1, spec_03, CcpConfig(seed=0, solver=counting))
    assert res.status == "feasible"
    assert len(calls) == res.iterations
