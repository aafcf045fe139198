"""Circle objective f(z) = (||z|| - 1)^2 + ||z/||z|| - e2||^4 on R^2.

Minimized at (0, 1).  The unit circle is a ravine whose retraction is the
radial projection z / ||z||; the ravine-defining gap is exact there:
f(z) - f(z/||z||) = (||z|| - 1)^2 = ||z - z/||z||||^2.  The Morse ravine
at (0, 1) is a different curve, the zero set of the vertical gradient
component; see :func:`morse_implicit_residual`.
"""

from __future__ import annotations

import numpy as np

from ..errors import OriginSingularity
from ..objective import Objective
from ..ravine import RavineDescriptor

_MINIMIZER = np.array([0.0, 1.0])
_ORIGIN_TOL = 1e-6


def _norm_or_raise(z):
    n = float(np.hypot(float(z[0]), float(z[1])))
    if n < _ORIGIN_TOL:
        raise OriginSingularity(f"||z|| = {n:.2e} below {_ORIGIN_TOL:.0e}")
    return n


def circle_eval(z):
    """Value and gradient; raises OriginSingularity near the origin.

    With n = ||z||, the direction term simplifies to
    ||z/n - e2||^2 = 2 - 2 y / n, so f = (n - 1)^2 + (2 - 2 y / n)^2.
    """
    z = np.asarray(z, dtype=float)
    x, y = float(z[0]), float(z[1])
    n = _norm_or_raise(z)
    w = 2.0 - 2.0 * y / n
    value = (n - 1.0) ** 2 + w * w
    # d(y/n)/dx = -xy/n^3, d(y/n)/dy = x^2/n^3.
    gx = 2.0 * (n - 1.0) * x / n + 2.0 * w * (2.0 * x * y / n ** 3)
    gy = 2.0 * (n - 1.0) * y / n - 2.0 * w * (2.0 * x * x / n ** 3)
    return value, np.array([gx, gy])


def _eval(z):
    return circle_eval(z)[0]


def _grad(z):
    return circle_eval(z)[1]


def objective() -> Objective:
    return Objective(
        dim=2,
        eval=_eval,
        grad=_grad,
        f_star=0.0,
        p_growth=4.0,
        dist_solution=lambda z: float(np.linalg.norm(np.asarray(z, float)
                                                     - _MINIMIZER)),
        value_and_grad=circle_eval,
        name="circle",
    )


def _retract(z):
    z = np.asarray(z, dtype=float)
    return z / _norm_or_raise(z)


def ravine_descriptor(tol: float = 1e-8) -> RavineDescriptor:
    return RavineDescriptor(
        retract=_retract,
        on_manifold=lambda z: abs(float(np.hypot(*z)) - 1.0) <= tol,
        project_solution=lambda z: _MINIMIZER.copy(),
        p_growth=4.0,
        sample_solution=lambda rng: _MINIMIZER.copy(),
        name="circle",
    )


def morse_implicit_residual(z) -> float:
    """Residual of the Morse-ravine equation near (0, 1) in polynomial form.

    The Morse ravine is the zero set of the vertical gradient component;
    clearing denominators in df/dy = 2y(n-1)/n - 8x^2(n-y)/n^4 = 0 gives

        y n^4 - y n^3 - 4 x^2 n + 4 x^2 y = 0,   n = ||z||.
    """
    x, y = float(z[0]), float(z[1])
    n = float(np.hypot(x, y))
    return y * n ** 4 - y * n ** 3 - 4.0 * x * x * n + 4.0 * x * x * y


def base_solution() -> np.ndarray:
    return _MINIMIZER.copy()
