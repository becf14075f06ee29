"""Parameter synthesis for affine parametric MDPs.

Find a well-defined parameter valuation so that the instantiated MDP
satisfies a reachability or expected-cost specification under all
strategies, via a penalty convex-concave procedure interleaved with a
probabilistic model checker, plus a particle-swarm baseline.
"""

from .model import (AffineExpr, ConcreteMDP, Instantiation, PMDP,
                    Specification, check_well_defined, evaluate_affine,
                    instantiate, well_definedness_is_universal)
from .parser import parse_model, parse_spec, serialize_model
from .graph import GraphAnalysis, analyze
from .ccp import CcpConfig, SynthesisResult, synthesize
from .pso import PsoConfig, synthesize_pso

__all__ = [
    "AffineExpr", "ConcreteMDP", "Instantiation", "PMDP", "Specification",
    "check_well_defined", "evaluate_affine", "instantiate",
    "well_definedness_is_universal", "parse_model", "parse_spec",
    "serialize_model", "GraphAnalysis", "analyze", "CcpConfig",
    "SynthesisResult", "synthesize", "PsoConfig", "synthesize_pso",
]
