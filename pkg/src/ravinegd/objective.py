"""Objective wrapper and finite-difference utilities.

An :class:`Objective` bundles a smooth function with its analytic gradient
over a flat vector variable.  Matrix problems flatten their variables
(row-major) so that a single optimizer code path serves every problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Objective:
    """A smooth objective with analytic gradient over R^dim.

    Attributes
    ----------
    dim : ambient dimension of the (flattened) decision variable.
    eval : point -> value.
    grad : point -> gradient vector of length ``dim``.
    f_star : known minimal value, if any.
    p_growth : growth exponent p of the value away from the solution set.
    dist_solution : point -> distance (or proxy) to the minimizer set.
    value_and_grad : optional fused evaluation returning ``(value, grad)``,
        used by the steppers to avoid recomputing shared intermediates.
    name : short identifier used in traces and manifests.
    """

    dim: int
    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    f_star: Optional[float] = None
    p_growth: Optional[float] = None
    dist_solution: Optional[Callable[[np.ndarray], float]] = None
    value_and_grad: Optional[Callable[[np.ndarray], tuple]] = None
    name: str = ""

    def both(self, x: np.ndarray) -> tuple:
        """Value and gradient at ``x`` in one call."""
        if self.value_and_grad is not None:
            return self.value_and_grad(x)
        return self.eval(x), self.grad(x)


def central_difference_gradient(func, x, h=None):
    """Central finite-difference gradient of ``func`` at ``x``.

    Step defaults to 1e-5 * (1 + ||x||), matching the scale used by the
    gradient-consistency checks.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (func(x + e) - func(x - e)) / (2.0 * h)
    return g


def max_relative_gradient_error(obj: Objective, points) -> float:
    """Worst relative disagreement between analytic and FD gradients.

    The error at a point is ``||g_analytic - g_fd|| / max(1e-12, ||g_analytic||)``
    unless the analytic gradient is tiny, in which case the absolute error
    is used.
    """
    worst = 0.0
    for x in points:
        g = np.asarray(obj.grad(np.asarray(x, dtype=float)))
        fd = central_difference_gradient(obj.eval, x)
        gn = np.linalg.norm(g)
        err = np.linalg.norm(g - fd)
        worst = max(worst, err / gn if gn > 1e-8 else err)
    return worst


def unit_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A uniformly random unit vector in R^dim."""
    while True:
        d = rng.standard_normal(dim)
        n = np.linalg.norm(d)
        if n > 1e-12:
            return d / n
