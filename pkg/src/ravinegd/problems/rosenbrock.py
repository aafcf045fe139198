"""Quartic Rosenbrock variant f(x, y) = x^4 + 10 (y - x^2)^2.

Minimized at the origin with quartic growth along the parabola y = x^2,
which is the ravine; the retraction simply drops a point vertically onto
the parabola, R(x, y) = (x, x^2).
"""

from __future__ import annotations

import numpy as np

from ..objective import Objective
from ..ravine import RavineDescriptor


def rosenbrock_eval(x: float, y: float):
    """Value and gradient of x^4 + 10 (y - x^2)^2.

    Computed in float64 so that divergent iterates overflow to inf instead
    of raising.
    """
    x, y = np.float64(x), np.float64(y)
    t = y - x * x
    x3 = x * x * x
    value = float(x3 * x + 10.0 * t * t)
    grad = np.array([4.0 * x3 - 40.0 * x * t, 20.0 * t])
    return value, grad


def _eval(z):
    return rosenbrock_eval(z[0], z[1])[0]


def _grad(z):
    return rosenbrock_eval(z[0], z[1])[1]


def _both(z):
    return rosenbrock_eval(z[0], z[1])


def objective() -> Objective:
    return Objective(
        dim=2,
        eval=_eval,
        grad=_grad,
        f_star=0.0,
        p_growth=4.0,
        dist_solution=lambda z: float(np.linalg.norm(z)),
        value_and_grad=_both,
        name="rosenbrock",
    )


def _retract(z):
    x = float(z[0])
    return np.array([x, x * x])


def ravine_descriptor(tol: float = 1e-8) -> RavineDescriptor:
    return RavineDescriptor(
        retract=_retract,
        on_manifold=lambda z: abs(float(z[1]) - float(z[0]) ** 2)
        <= tol * (1.0 + float(z[0]) ** 2),
        project_solution=lambda z: np.zeros(2),
        p_growth=4.0,
        sample_solution=lambda rng: np.zeros(2),
        name="rosenbrock",
    )


def base_solution() -> np.ndarray:
    return np.zeros(2)
