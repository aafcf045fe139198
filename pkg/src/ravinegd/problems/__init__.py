"""Benchmark problems with analytic gradients and ravine data.

``build`` assembles a :class:`ProblemBundle` (objective, ravine descriptor
where a closed form exists, instance, base solution) from a problem name
and parameters.  ``sample_init`` draws initial points at an exact distance
from a known solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..objective import Objective, unit_direction
from ..ravine import RavineDescriptor
from . import circle, factorization, neuron, quartic, rosenbrock, sensing
from .serialize import instance_from_dict, instance_to_dict

PROBLEM_NAMES = ("quartic1d", "rosenbrock", "circle", "factorization",
                 "sensing", "neuron")

__all__ = [
    "PROBLEM_NAMES", "ProblemBundle", "build", "sample_init",
    "dist_to_solution", "instance_to_dict", "instance_from_dict",
    "quartic", "rosenbrock", "circle", "factorization", "sensing", "neuron",
]


@dataclass
class ProblemBundle:
    """Everything the harness needs to run and diagnose one problem."""

    name: str
    objective: Objective
    descriptor: Optional[RavineDescriptor]
    instance: object
    base_solution: np.ndarray
    params: dict

    def sample_solution(self, rng: np.random.Generator) -> np.ndarray:
        if self.descriptor is not None:
            return self.descriptor.sample_solution(rng)
        if self.name == "sensing":
            return sensing.sample_solution(self.instance, rng)
        return self.base_solution.copy()


def build(name: str, params: Optional[dict] = None) -> ProblemBundle:
    """Construct a problem bundle by name.

    ``params`` may carry dimensions (d, r, k, m, v_norm) and the instance
    seed (``instance_seed``, default 0) for the randomized families.
    """
    params = dict(params or {})
    seed = int(params.get("instance_seed", 0))
    if name == "quartic1d":
        return ProblemBundle(name, quartic.objective(),
                             quartic.ravine_descriptor(), None,
                             quartic.base_solution(), params)
    if name == "rosenbrock":
        return ProblemBundle(name, rosenbrock.objective(),
                             rosenbrock.ravine_descriptor(), None,
                             rosenbrock.base_solution(), params)
    if name == "circle":
        return ProblemBundle(name, circle.objective(),
                             circle.ravine_descriptor(), None,
                             circle.base_solution(), params)
    if name == "factorization":
        d = int(params.get("d", 5))
        r = int(params.get("r", 2))
        k = int(params.get("k", 3))
        inst = factorization.random_instance(d, r, k, seed)
        return ProblemBundle(name, factorization.objective(inst),
                             factorization.ravine_descriptor(inst), inst,
                             factorization.base_solution(inst), params)
    if name == "sensing":
        d = int(params.get("d", 20))
        r = int(params.get("r", 2))
        k = int(params.get("k", 4))
        m = int(params.get("m", 10 * d * k))
        inst = sensing.make_sensing_instance(d, r, k, m, seed)
        # No closed-form ravine: only the Morse ravine exists here.
        return ProblemBundle(name, sensing.objective(inst), None, inst,
                             sensing.base_solution(inst), params)
    if name == "neuron":
        d = int(params.get("d", 10))
        v_norm = float(params.get("v_norm", 1.0))
        inst = neuron.make_neuron_instance(d, seed, v_norm=v_norm)
        return ProblemBundle(name, neuron.objective(inst),
                             neuron.ravine_descriptor(inst), inst,
                             neuron.base_solution(inst), params)
    raise ValueError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")


def sample_init(bundle: ProblemBundle, radius: float, seed: int) -> np.ndarray:
    """Known solution plus a random direction scaled to exactly ``radius``."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    rng = np.random.default_rng(seed)
    base = np.asarray(bundle.base_solution, dtype=float)
    return base + radius * unit_direction(rng, bundle.objective.dim)


def dist_to_solution(point, bundle: ProblemBundle) -> float:
    """Distance (or proxy) from a flattened point to the solution set."""
    if bundle.objective.dist_solution is None:
        raise ValueError(f"{bundle.name} has no solution-distance oracle")
    return float(bundle.objective.dist_solution(np.asarray(point, dtype=float)))
