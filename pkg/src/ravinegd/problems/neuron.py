"""Two-neuron student fitting a single ReLU teacher in population loss.

The objective is the Gaussian expectation
f(w) = E_x [ (relu(w1.x) + relu(w2.x) - relu(v.x))^2 / 2 ], which has the
closed form (with t12 the angle between w1 and w2, and ti between wi and v)

  f = ||w1 + w2 - v||^2 / 4
      + (1/2pi) [ (sin t12 - t12 cos t12) ||w1|| ||w2||
                  - sum_i (sin ti - ti cos ti) ||wi|| ||v|| ].

Minimal value 0, attained on aligned splits w1 + w2 = v; the affine plane
{w : w1 + w2 = v} is the ravine and the growth along it is cubic.
:func:`monte_carlo_value` estimates the defining expectation directly and
serves as an independent oracle for the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ShapeMismatch, ZeroNeuron
from ..objective import Objective
from ..ravine import RavineDescriptor

NORM_FLOOR = 1e-8


@dataclass(frozen=True)
class NeuronInstance:
    """Teacher weight for the two-neuron student problem."""

    d: int
    v: np.ndarray
    n: int = 2                    # student width; the closed form is for n = 2
    seed: Optional[int] = None

    @property
    def dim(self) -> int:
        return 2 * self.d


def make_neuron_instance(d: int, seed: int,
                         v_norm: float = 1.0) -> NeuronInstance:
    """Random unit teacher direction scaled to ``v_norm``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d)
    v = v / np.linalg.norm(v) * v_norm
    return NeuronInstance(d=d, v=v, seed=seed)


def _angle(a, b, na, nb):
    return float(np.arccos(np.clip((a @ b) / (na * nb), -1.0, 1.0)))


def _norms(w1, w2, inst):
    n1 = float(np.linalg.norm(w1))
    n2 = float(np.linalg.norm(w2))
    nv = float(np.linalg.norm(inst.v))
    if min(n1, n2, nv) < NORM_FLOOR:
        raise ZeroNeuron(
            f"norms ({n1:.2e}, {n2:.2e}, {nv:.2e}) below {NORM_FLOOR:.0e}")
    return n1, n2, nv


def neuron_eval(w1, w2, inst: NeuronInstance):
    """Closed-form value and gradient; gradient stacked as (grad_w1, grad_w2)."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w1.shape != (inst.d,) or w2.shape != (inst.d,):
        raise ShapeMismatch(f"weights must have shape ({inst.d},)")
    v = inst.v
    n1, n2, nv = _norms(w1, w2, inst)
    t12 = _angle(w1, w2, n1, n2)
    t1 = _angle(w1, v, n1, nv)
    t2 = _angle(w2, v, n2, nv)

    misfit = w1 + w2 - v
    value = 0.25 * float(misfit @ misfit)
    value += (1.0 / (2.0 * np.pi)) * (
        (np.sin(t12) - t12 * np.cos(t12)) * n1 * n2
        - (np.sin(t1) - t1 * np.cos(t1)) * n1 * nv
        - (np.sin(t2) - t2 * np.cos(t2)) * n2 * nv)

    base = 0.5 * misfit
    g1 = base + (1.0 / (2.0 * np.pi)) * (
        (n2 * np.sin(t12) - nv * np.sin(t1)) * (w1 / n1) - t12 * w2 + t1 * v)
    g2 = base + (1.0 / (2.0 * np.pi)) * (
        (n1 * np.sin(t12) - nv * np.sin(t2)) * (w2 / n2) - t12 * w1 + t2 * v)
    return value, np.concatenate([g1, g2])


def neuron_dist_proxy(w1, w2, inst: NeuronInstance) -> float:
    """||w1 + w2 - v|| plus the norms of the components orthogonal to v.

    Vanishes exactly on aligned splits of the teacher; proportional to the
    distance to the solution set near it.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    _norms(w1, w2, inst)
    v = inst.v
    vv = float(v @ v)
    perp1 = w1 - (w1 @ v) / vv * v
    perp2 = w2 - (w2 @ v) / vv * v
    return (float(np.linalg.norm(w1 + w2 - v))
            + float(np.linalg.norm(perp1)) + float(np.linalg.norm(perp2)))


def monte_carlo_value(w1, w2, inst: NeuronInstance, n_samples: int,
                      seed: int):
    """Sample estimate of the defining expectation: (estimate, std_error)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, inst.d))
    s = (np.maximum(x @ np.asarray(w1, float), 0.0)
         + np.maximum(x @ np.asarray(w2, float), 0.0)
         - np.maximum(x @ inst.v, 0.0))
    vals = 0.5 * s * s
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


def _split(x, inst):
    x = np.asarray(x, dtype=float)
    if x.size != 2 * inst.d:
        raise ShapeMismatch(f"expected {2 * inst.d} entries, got {x.size}")
    return x[:inst.d], x[inst.d:]


def objective(inst: NeuronInstance) -> Objective:
    def _both(x):
        w1, w2 = _split(x, inst)
        return neuron_eval(w1, w2, inst)

    return Objective(
        dim=2 * inst.d,
        eval=lambda x: _both(x)[0],
        grad=lambda x: _both(x)[1],
        f_star=0.0,
        p_growth=3.0,
        dist_solution=lambda x: neuron_dist_proxy(*_split(x, inst), inst),
        value_and_grad=_both,
        name="neuron",
    )


def _retract(x, inst):
    # The ravine {w1 + w2 = v} is affine; the orthogonal projection shifts
    # each neuron by half the constraint violation.
    w1, w2 = _split(x, inst)
    shift = 0.5 * (w1 + w2 - inst.v)
    return np.concatenate([w1 - shift, w2 - shift])


def _project_solution(x, inst):
    on_m = _retract(x, inst)
    w1, w2 = on_m[:inst.d], on_m[inst.d:]
    v = inst.v
    vv = float(v @ v)
    return np.concatenate([(w1 @ v) / vv * v, (w2 @ v) / vv * v])


def ravine_descriptor(inst: NeuronInstance,
                      tol: float = 1e-8) -> RavineDescriptor:
    scale = 1.0 + float(np.linalg.norm(inst.v))

    def _sample_solution(rng):
        c = rng.uniform(0.25, 0.75)
        return np.concatenate([c * inst.v, (1.0 - c) * inst.v])

    return RavineDescriptor(
        retract=lambda x: _retract(x, inst),
        on_manifold=lambda x: float(np.linalg.norm(
            x[:inst.d] + x[inst.d:] - inst.v)) <= tol * scale,
        project_solution=lambda x: _project_solution(x, inst),
        p_growth=3.0,
        sample_solution=_sample_solution,
        name="neuron",
    )


def base_solution(inst: NeuronInstance) -> np.ndarray:
    """The balanced split (v/2, v/2), flattened."""
    return np.concatenate([inst.v / 2.0, inst.v / 2.0])
