"""Quadratic matrix sensing f(B) = (1/m) sum_i (y_i - <A_i, B B^T>)^2.

Measurements y_i = <A_i, X> of a psd rank-r ground truth X, optimized over
d x k factors with k >= r.  The default measurement ensemble draws
A_i = a_i a_i^T - a~_i a~_i^T with standard Gaussian vectors; for that
ensemble E <A_i, Z>^2 = 4 ||Z||_F^2 on symmetric Z, so the operator is a
near-isometry only after dividing by op_scale = 2.  The RIP measurement
accounts for this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ShapeMismatch
from ..objective import Objective
from . import factorization as fact


@dataclass(frozen=True)
class SensingInstance:
    """Measurement operator, targets and ground truth for one sensing problem."""

    fac: fact.FactorizationInstance
    m: int
    A: np.ndarray              # (m, d, d) measurement matrices
    y: np.ndarray              # (m,) targets <A_i, X>
    norm_constant: float       # objective prefactor, 1/m
    op_scale: float            # analytic isometry normalization of the ensemble
    seed: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.fac.dim


def make_sensing_instance(d: int, r: int, k: int, m: int,
                          seed: int) -> SensingInstance:
    """Gaussian difference measurements of a random rescaled ground truth.

    Draw order is fixed (ground-truth factor, then a, then a~) so instances
    are bitwise reproducible per seed.
    """
    if not (r <= k <= d):
        raise ValueError(f"need r <= k <= d, got r={r}, k={k}, d={d}")
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, r))
    X = g @ g.T
    X = X / np.linalg.eigvalsh(X)[-1]
    fac_inst = fact.from_matrix(X, k, r=r, seed=seed)
    a = rng.standard_normal((m, d))
    at = rng.standard_normal((m, d))
    A = a[:, :, None] * a[:, None, :] - at[:, :, None] * at[:, None, :]
    y = A.reshape(m, -1) @ X.reshape(-1)
    return SensingInstance(fac=fac_inst, m=m, A=A, y=y,
                           norm_constant=1.0 / m, op_scale=2.0, seed=seed)


def from_operator(fac_inst: fact.FactorizationInstance, A,
                  op_scale: float = 1.0,
                  seed: Optional[int] = None) -> SensingInstance:
    """Instance with explicit measurement matrices (targets recomputed)."""
    A = np.asarray(A, dtype=float)
    m, d1, d2 = A.shape
    if d1 != fac_inst.d or d2 != fac_inst.d:
        raise ShapeMismatch(f"measurements must be {fac_inst.d} x {fac_inst.d}")
    y = A.reshape(m, -1) @ fac_inst.X.reshape(-1)
    return SensingInstance(fac=fac_inst, m=m, A=A, y=y,
                           norm_constant=1.0 / m, op_scale=op_scale, seed=seed)


def orthonormal_symmetric_basis(d: int) -> np.ndarray:
    """The m = d(d+1)/2 orthonormal basis matrices of symmetric d x d space."""
    mats = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        mats.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(e)
    return np.array(mats)


def complete_sensing_instance(fac_inst: fact.FactorizationInstance,
                              parseval_scaled: bool = True) -> SensingInstance:
    """Complete measurements from the orthonormal symmetric basis.

    With the basis scaled by sqrt(m), sum_i <A_i, Z>^2 / m = ||Z||_F^2 for
    symmetric Z, so the operator is an exact isometry (op_scale = 1) and
    the objective coincides with the factorization objective.
    """
    basis = orthonormal_symmetric_basis(fac_inst.d)
    if parseval_scaled:
        basis = basis * np.sqrt(len(basis))
    return from_operator(fac_inst, basis, op_scale=1.0)


def _as_matrix(B, inst: SensingInstance) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    d, k = inst.fac.d, inst.fac.k
    if B.ndim == 1:
        if B.size != d * k:
            raise ShapeMismatch(f"expected {d * k} entries, got {B.size}")
        return B.reshape(d, k)
    if B.shape != (d, k):
        raise ShapeMismatch(f"expected shape {(d, k)}, got {B.shape}")
    return B


def sensing_eval(B, inst: SensingInstance):
    """Value with the 1/m prefactor and gradient -(2/m) sum r_i (A_i + A_i^T) B."""
    B = _as_matrix(B, inst)
    d = inst.fac.d
    a_flat = inst.A.reshape(inst.m, -1)
    resid = inst.y - a_flat @ (B @ B.T).reshape(-1)
    value = inst.norm_constant * float(resid @ resid)
    s = (a_flat.T @ resid).reshape(d, d)
    grad = -2.0 * inst.norm_constant * (s + s.T) @ B
    return value, grad


def objective(inst: SensingInstance) -> Objective:
    d, k = inst.fac.d, inst.fac.k

    def _both(x):
        value, grad = sensing_eval(x.reshape(d, k), inst)
        return value, grad.reshape(-1)

    return Objective(
        dim=d * k,
        eval=lambda x: _both(x)[0],
        grad=lambda x: _both(x)[1],
        f_star=0.0,
        p_growth=4.0,
        dist_solution=lambda x: fact.dist_to_solution(
            x.reshape(d, k), inst.fac),
        value_and_grad=_both,
        name="sensing",
    )


def sample_solution(inst: SensingInstance,
                    rng: np.random.Generator) -> np.ndarray:
    """Random point of S = {B : B B^T = X}, flattened."""
    return fact.sample_solution(inst.fac, rng).reshape(-1)


def base_solution(inst: SensingInstance) -> np.ndarray:
    return fact.base_solution(inst.fac)
