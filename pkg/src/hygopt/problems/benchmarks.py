"""Analytical benchmark functions and their search domains.

Fifteen classical test landscapes; a few are dimension-scalable, the rest
are two-dimensional.  Each carries its known global optima so a run can be
checked for exact grid convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..space import ParameterSpace


class DomainError(ValueError):
    """Input outside the function's search domain."""


def _ackley(x):
    n = x.size
    return (-20.0 * math.exp(-0.2 * math.sqrt(np.sum(x * x) / n))
            - math.exp(np.sum(np.cos(2 * math.pi * x)) / n) + math.e + 20.0)


def _beale(x):
    x1, x2 = x
    return ((1.5 - x1 + x1 * x2) ** 2 + (2.25 - x1 + x1 * x2 ** 2) ** 2
            + (2.625 - x1 + x1 * x2 ** 3) ** 2)


def _booth(x):
    x1, x2 = x
    return (x1 + 2 * x2 - 7) ** 2 + (2 * x1 + x2 - 5) ** 2


def _bukin6(x):
    x1, x2 = x
    return 100.0 * math.sqrt(abs(x2 - 0.01 * x1 ** 2)) + 0.01 * abs(x1 + 10.0)


def _easom(x):
    x1, x2 = x
    return (-math.cos(x1) * math.cos(x2)
            * math.exp(-((x1 - math.pi) ** 2 + (x2 - math.pi) ** 2)))


def _eggholder(x):
    x1, x2 = x
    return (-(x2 + 47.0) * math.sin(math.sqrt(abs(x1 / 2.0 + x2 + 47.0)))
            - x1 * math.sin(math.sqrt(abs(x1 - (x2 + 47.0)))))


def _goldstein_price(x):
    x1, x2 = x
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1 ** 2 - 14 * x2
                                  + 6 * x1 * x2 + 3 * x2 ** 2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1 ** 2 + 48 * x2
                                       - 36 * x1 * x2 + 27 * x2 ** 2)
    return a * b


def _himmelblau(x):
    x1, x2 = x
    return (x1 ** 2 + x2 - 11) ** 2 + (x1 + x2 ** 2 - 7) ** 2


def _holder_table(x):
    x1, x2 = x
    return -abs(math.sin(x1) * math.cos(x2)
                * math.exp(abs(1 - math.sqrt(x1 ** 2 + x2 ** 2) / math.pi)))


def _levi13(x):
    x1, x2 = x
    return (math.sin(3 * math.pi * x1) ** 2
            + (x1 - 1) ** 2 * (1 + math.sin(3 * math.pi * x2) ** 2)
            + (x2 - 1) ** 2 * (1 + math.sin(2 * math.pi * x2) ** 2))


def _matyas(x):
    x1, x2 = x
    return 0.26 * (x1 ** 2 + x2 ** 2) - 0.48 * x1 * x2


def _sphere(x):
    return float(np.sum(x * x))


def _rastrigin(x):
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2 * math.pi * x)))


def _rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2
                        + (x[:-1] - 1.0) ** 2))


def _styblinski_tang(x):
    return float(0.5 * np.sum(x ** 4 - 16.0 * x ** 2 + 5.0 * x))


_ST_X = -2.9035340495775602      # per-dimension Styblinski-Tang minimizer
_HOLDER_X = (8.05502347605272, 9.664590028909654)


# module-level optimum constructors keep BenchmarkFunction picklable
def _origin_point(n):
    return np.zeros(n)


def _ones_point(n):
    return np.ones(n)


def _st_point(n):
    return np.full(n, _ST_X)


@dataclass(frozen=True)
class BenchmarkFunction:
    """One benchmark: evaluator, domain and known optima."""

    name: str
    func: Callable[[np.ndarray], float]
    low: float | tuple
    high: float | tuple
    scalable: bool = False
    optima: tuple = ()          # fixed-dimension optima, as tuples
    optimum_point: Callable | None = None   # scalable: ndim -> point

    def domain(self, ndim: int) -> tuple[np.ndarray, np.ndarray]:
        if not self.scalable and ndim != 2:
            raise DomainError(f"{self.name} is a 2-D function")
        if isinstance(self.low, tuple):
            return np.asarray(self.low, float), np.asarray(self.high, float)
        return np.full(ndim, float(self.low)), np.full(ndim, float(self.high))

    def space(self, ndim: int = 2, bits: int = 12) -> ParameterSpace:
        lows, highs = self.domain(ndim)
        return ParameterSpace(lows, highs, np.full(ndim, bits, np.int64))

    def optima_points(self, ndim: int = 2) -> list[np.ndarray]:
        if self.scalable and self.optimum_point is not None:
            return [np.asarray(self.optimum_point(ndim), float)]
        return [np.asarray(p, float) for p in self.optima]

    def optimum_cost(self, ndim: int = 2) -> float:
        return min(self(np.asarray(p)) for p in self.optima_points(ndim))

    def grid_optima(self, space: ParameterSpace) -> list[np.ndarray]:
        """Cost-minimal grid point near each known optimum.

        The nearest grid point to an off-grid optimum is not always the
        best one on the grid, so coordinate descent over neighboring grid
        points refines the snap until no single-step move improves.  An
        optimum exactly halfway between grid points yields cost ties, so
        tied neighbors of the descent endpoint are included as well.
        """
        out = []
        for p in self.optima_points(space.ndim):
            best = space.snap(p)
            best_cost = self(best)
            improved = True
            while improved:
                improved = False
                for d in range(space.ndim):
                    for delta in (-space.steps[d], space.steps[d]):
                        cand = space.snap(np.clip(best + delta
                                                  * np.eye(space.ndim)[d],
                                                  space.lows, space.highs))
                        cost = self(cand)
                        if cost < best_cost:
                            best, best_cost = cand, cost
                            improved = True
            out.append(best)
            tol = best_cost + 1e-9 * max(abs(best_cost), 1e-30)
            for d in range(space.ndim):
                for delta in (-space.steps[d], space.steps[d]):
                    cand = space.snap(np.clip(best + delta
                                              * np.eye(space.ndim)[d],
                                              space.lows, space.highs))
                    if not np.array_equal(cand, best) and self(cand) <= tol:
                        out.append(cand)
        return out

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        lows, highs = self.domain(x.size)
        if np.any(x < lows) or np.any(x > highs):
            raise DomainError(f"{self.name}: input outside the search domain")
        return float(self.func(x))


BENCHMARKS: dict[str, BenchmarkFunction] = {f.name: f for f in [
    BenchmarkFunction("ackley", _ackley, -5, 5, scalable=True,
                      optimum_point=_origin_point),
    BenchmarkFunction("beale", _beale, -4.5, 4.5, optima=((3.0, 0.5),)),
    BenchmarkFunction("booth", _booth, -10, 10, optima=((1.0, 3.0),)),
    BenchmarkFunction("bukin6", _bukin6, (-15.0, -3.0), (-5.0, 3.0),
                      optima=((-10.0, 1.0),)),
    BenchmarkFunction("easom", _easom, -100, 100,
                      optima=((math.pi, math.pi),)),
    BenchmarkFunction("eggholder", _eggholder, -512, 512,
                      optima=((512.0, 404.2318058008512),)),
    BenchmarkFunction("goldstein_price", _goldstein_price, -2, 2,
                      optima=((0.0, -1.0),)),
    BenchmarkFunction("himmelblau", _himmelblau, -6, 6,
                      optima=((3.0, 2.0),
                              (-2.805118086952745, 3.1313125182505729),
                              (-3.7793102533777469, -3.2831859912861694),
                              (3.5844283403304917, -1.8481265269644537))),
    BenchmarkFunction("holder_table", _holder_table, -10, 10,
                      optima=((_HOLDER_X[0], _HOLDER_X[1]),
                              (-_HOLDER_X[0], _HOLDER_X[1]),
                              (_HOLDER_X[0], -_HOLDER_X[1]),
                              (-_HOLDER_X[0], -_HOLDER_X[1]))),
    BenchmarkFunction("levi13", _levi13, -10, 10, optima=((1.0, 1.0),)),
    BenchmarkFunction("matyas", _matyas, -10, 10, optima=((0.0, 0.0),)),
    BenchmarkFunction("sphere", _sphere, 0, 2, scalable=True,
                      optimum_point=_origin_point),
    BenchmarkFunction("rastrigin", _rastrigin, -5.12, 5.12, scalable=True,
                      optimum_point=_origin_point),
    BenchmarkFunction("rosenbrock", _rosenbrock, -5, 5, scalable=True,
                      optimum_point=_ones_point),
    BenchmarkFunction("styblinski_tang", _styblinski_tang, -5, 5,
                      scalable=True, optimum_point=_st_point),
]}


def get_benchmark(name: str) -> BenchmarkFunction:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; "
                       f"known: {sorted(BENCHMARKS)}") from None


def eval_benchmark(name: str, x) -> float:
    """Evaluate a named benchmark at x (raises DomainError outside Ω)."""
    return get_benchmark(name)(x)
