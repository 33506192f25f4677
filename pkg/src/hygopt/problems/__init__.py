from .benchmarks import (BENCHMARKS, BenchmarkFunction, DomainError,
                         eval_benchmark, get_benchmark)
from .landau import (LandauConfig, LandauCostEvaluator, default_landau_layout,
                     landau_components, landau_cost, simulate_landau)
from .external import (ExternalEvaluationError, ExternalEvaluator,
                       IndexMismatchError, MalformedResponseError,
                       ResponseTimeoutError)

__all__ = [
    "BENCHMARKS", "BenchmarkFunction", "DomainError", "eval_benchmark",
    "get_benchmark", "LandauConfig", "LandauCostEvaluator",
    "default_landau_layout", "landau_components", "landau_cost",
    "simulate_landau", "ExternalEvaluationError", "ExternalEvaluator",
    "IndexMismatchError", "MalformedResponseError", "ResponseTimeoutError",
]
