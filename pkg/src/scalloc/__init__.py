"""Stochastic-computing neuron models, error profiling and hardware allocation."""

from scalloc.allocator import (
    AllocationProblem,
    AllocationSolution,
    Budget,
    ImplementationSpec,
    OptimizerParams,
    ScoreWeights,
    exhaustive_search,
    minimum_feasible_solution,
    optimize,
    score,
)
from scalloc.kernels import BACKEND
from scalloc.stream import Coding, GeneratorSpec, StochasticStream, decode, generate_stream

__version__ = "0.1.0"

__all__ = [
    "AllocationProblem",
    "AllocationSolution",
    "BACKEND",
    "Budget",
    "Coding",
    "GeneratorSpec",
    "ImplementationSpec",
    "OptimizerParams",
    "ScoreWeights",
    "StochasticStream",
    "decode",
    "exhaustive_search",
    "generate_stream",
    "minimum_feasible_solution",
    "optimize",
    "score",
]
