"""Intersection cuts for submodular and submodular-supermodular objectives.

The pipeline: oracles evaluate set functions, envelope builds their convex
extension from greedy vertices, sfree wraps the extension (and splits,
reverse linearizations, chain covers) into free sets, simplex supplies LP
optima with corner relaxations, cuts turns corner + free set into valid
inequalities, models builds the lifted LPs, and harness runs the root-node
experiments.
"""

from .cuts import IntersectionCut, gradient_cut, intersection_cut, step_length
from .envelope import envelope_eval, greedy_vertex, sort_permutation
from .errors import CapacityError, ModelError, NumericError, SeparationBudget
from .harness import RootNodeReport, RunConfig, root_loop, run_instance
from .models import BmpInstance, LiftMap, build_maxcut_model, build_mubo_model
from .oracles import (
    Graph,
    MultilinearFunction,
    SSFunction,
    SubmodularOracle,
    cut_oracle,
    is_submodular_bruteforce,
    modular_oracle,
    multilinear_oracle,
    ss_decompose,
    zero_oracle,
)
from .sfree import (
    CoverRelaxation,
    EnvelopeEpigraph,
    LiftedSplit,
    ReverseLinearized,
    build_reverse_linearized,
    interiority,
)
from .simplex import LpModel, LpSolution, corner, solve

__version__ = "0.1.0"

__all__ = [
    "BmpInstance",
    "CapacityError",
    "CoverRelaxation",
    "EnvelopeEpigraph",
    "Graph",
    "IntersectionCut",
    "LiftMap",
    "LiftedSplit",
    "LpModel",
    "LpSolution",
    "ModelError",
    "MultilinearFunction",
    "NumericError",
    "ReverseLinearized",
    "RootNodeReport",
    "RunConfig",
    "SSFunction",
    "SeparationBudget",
    "SubmodularOracle",
    "build_maxcut_model",
    "build_mubo_model",
    "build_reverse_linearized",
    "corner",
    "cut_oracle",
    "envelope_eval",
    "gradient_cut",
    "greedy_vertex",
    "interiority",
    "intersection_cut",
    "is_submodular_bruteforce",
    "modular_oracle",
    "multilinear_oracle",
    "root_loop",
    "run_instance",
    "solve",
    "sort_permutation",
    "ss_decompose",
    "step_length",
    "zero_oracle",
]
