"""Built-in objective functions, looked up by name.

The registry ships a convex bowl, an ill-conditioned quadratic, the banana
valley, and a staircase plateau whose flat regions force search steps to
come up empty.
"""
from __future__ import annotations

from typing import Callable, Dict, List

import numpy as np

__all__ = ["UnknownObjectiveError", "make_objective", "objective_names"]

Objective = Callable[[np.ndarray], float]


class UnknownObjectiveError(KeyError):
    """Objective name not present in the registry."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return (
            f"unknown objective {self.name!r}; available: "
            f"{', '.join(objective_names())}"
        )


def _sphere(n: int) -> Objective:
    def f(x: np.ndarray) -> float:
        return float(np.dot(x, x))

    return f


def _quadratic100(n: int) -> Objective:
    # Diagonal quadratic with condition number 100.
    if n == 1:
        weights = np.array([1.0])
    else:
        weights = np.geomspace(1.0, 100.0, n)

    def f(x: np.ndarray) -> float:
        return float(np.dot(weights, np.asarray(x) ** 2))

    return f


def _rosenbrock(n: int) -> Objective:
    if n != 2:
        raise ValueError("rosenbrock is defined here for n = 2 only")

    def f(x: np.ndarray) -> float:
        return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)

    return f


def _step(n: int) -> Objective:
    # Staircase plateau: constant inside unit cells, so search steps over a
    # fine mesh find no strict improvement (t = 0).
    def f(x: np.ndarray) -> float:
        return float(np.sum(np.floor(np.abs(x))))

    return f


_REGISTRY: Dict[str, Callable[[int], Objective]] = {
    "sphere": _sphere,
    "quadratic100": _quadratic100,
    "rosenbrock": _rosenbrock,
    "step": _step,
}


def objective_names() -> List[str]:
    return sorted(_REGISTRY)


def make_objective(name: str, dimension: int) -> Objective:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnknownObjectiveError(name) from None
    return factory(dimension)
