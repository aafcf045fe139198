"""Symmetric low-rank factorization f(B) = ||B B^T - X||_F^2.

X is a d x d positive semidefinite rank-r matrix and B has k >= r columns
(rank overparameterization).  The solution set is S = {B : B B^T = X} and,
in the eigenbasis of X where X = diag(D, 0) with blocks B = (P; Q), the
ravine is M = {(P; Q) : P P^T = D, P Q^T = 0}.  On M the value reduces to
||Q Q^T||_F^2 and the distance to S is ||Q||_F, which pins the quartic
growth bracket (1/k) dist^4 <= f <= dist^4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DegenerateProjection, ShapeMismatch
from ..objective import Objective
from ..ravine import RavineDescriptor

RANK_TOL = 1e-10
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class FactorizationInstance:
    """Ground truth and derived spectral data for one factorization problem."""

    d: int
    k: int
    r: int
    X: np.ndarray          # (d, d) symmetric psd, rank r
    sigma1: float          # largest nonzero eigenvalue
    sigmar: float          # smallest nonzero eigenvalue
    L: np.ndarray          # (d, r) with L L^T = X, columns by descending eigenvalue
    basis: np.ndarray      # (d, d) eigenvectors of X, descending eigenvalues
    evals: np.ndarray      # (d,) eigenvalues, descending
    seed: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.d * self.k


def from_matrix(X, k: int, r: Optional[int] = None,
                seed: Optional[int] = None) -> FactorizationInstance:
    """Build an instance from a dense symmetric psd matrix.

    The rank is inferred from the spectrum when not given: eigenvalues
    below 1e-10 * sigma1 count as zero.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    if X.shape != (d, d):
        raise ShapeMismatch(f"X must be square, got {X.shape}")
    if not np.allclose(X, X.T, atol=1e-12 * (1.0 + np.abs(X).max())):
        raise ValueError("X must be symmetric")
    w, v = np.linalg.eigh(X)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    sigma1 = float(w[0])
    if sigma1 <= 0.0:
        raise ValueError("X must be nonzero positive semidefinite")
    inferred = int(np.sum(w > RANK_TOL * sigma1))
    if r is None:
        r = inferred
    elif r != inferred:
        raise ValueError(f"stated rank {r} != spectral rank {inferred}")
    if not r <= k <= d:
        raise ValueError(f"need r <= k <= d, got r={r}, k={k}, d={d}")
    L = v[:, :r] * np.sqrt(w[:r])
    return FactorizationInstance(
        d=d, k=k, r=r, X=X, sigma1=sigma1, sigmar=float(w[r - 1]),
        L=L, basis=v, evals=w, seed=seed)


def random_instance(d: int, r: int, k: int, seed: int,
                    rescale: bool = True) -> FactorizationInstance:
    """Gaussian-factor ground truth X = G G^T, rescaled so sigma1 = 1.

    The rescaling keeps default stepsizes transferable across seeds.
    """
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, r))
    X = g @ g.T
    if rescale:
        X = X / np.linalg.eigvalsh(X)[-1]
    return from_matrix(X, k, r=r, seed=seed)


def _as_matrix(B, inst: FactorizationInstance) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        if B.size != inst.d * inst.k:
            raise ShapeMismatch(
                f"expected {inst.d * inst.k} entries, got {B.size}")
        return B.reshape(inst.d, inst.k)
    if B.shape != (inst.d, inst.k):
        raise ShapeMismatch(f"expected shape {(inst.d, inst.k)}, got {B.shape}")
    return B


def _block_residual(B, inst):
    # Evaluate B B^T - X in the eigenbasis of X, where X = diag(D, 0).  The
    # rank-r block cancels against the diagonal D instead of a dense O(1)
    # matrix, which keeps the value accurate in relative terms near the
    # manifold (the naive form loses ~8 digits once the gap is ~1e-12).
    Bp = inst.basis.T @ B
    resid = Bp @ Bp.T
    resid[:inst.r, :inst.r] -= np.diag(inst.evals[:inst.r])
    return Bp, resid


def factorization_eval(B, inst: FactorizationInstance):
    """Value ||B B^T - X||_F^2 and gradient 4 (B B^T - X) B."""
    B = _as_matrix(B, inst)
    Bp, resid = _block_residual(B, inst)
    value = float(np.sum(resid * resid))
    grad = inst.basis @ (4.0 * resid @ Bp)
    return value, grad


def factorization_project_solution(B, inst: FactorizationInstance) -> np.ndarray:
    """Nearest point of S = {A : A A^T = X} via orthogonal Procrustes.

    Writes the candidate as A = L O with O O^T = I and maximizes
    <L^T B, O>: with L^T B = U S V^T, the optimum is O = U V^T.  Raises
    :class:`DegenerateProjection` when L^T B is nearly singular (the
    nearest point is not unique).
    """
    B = _as_matrix(B, inst)
    u, s, vt = np.linalg.svd(inst.L.T @ B, full_matrices=False)
    if s[-1] < DEGENERATE_TOL:
        raise DegenerateProjection(
            f"smallest singular value {s[-1]:.2e} of L^T B below "
            f"{DEGENERATE_TOL:.0e}")
    return inst.L @ (u @ vt)


def factorization_retraction(B, inst: FactorizationInstance) -> np.ndarray:
    """Composite retraction onto M = {(P; Q): P P^T = D, P Q^T = 0}.

    In the eigenbasis of X: P maps to its nearest point of {P : P P^T = D}
    (a scaled Procrustes, P~ = D^(1/2) U V^T from the SVD of D^(1/2) P)
    and each row of Q is projected onto ker(P~).
    """
    B = _as_matrix(B, inst)
    r = inst.r
    Bp = inst.basis.T @ B
    P, Q = Bp[:r], Bp[r:]
    sq = np.sqrt(inst.evals[:r])
    u, s, vt = np.linalg.svd(sq[:, None] * P, full_matrices=False)
    if s[-1] < DEGENERATE_TOL:
        raise DegenerateProjection(
            f"smallest singular value {s[-1]:.2e} of D^(1/2) P below "
            f"{DEGENERATE_TOL:.0e}")
    P_t = sq[:, None] * (u @ vt)
    Q_t = Q - (Q @ P_t.T) @ np.linalg.solve(P_t @ P_t.T, P_t)
    return inst.basis @ np.vstack([P_t, Q_t])


def dist_to_solution(B, inst: FactorizationInstance) -> float:
    """Frobenius distance to S; equals ||Q||_F on the ravine."""
    B = _as_matrix(B, inst)
    return float(np.linalg.norm(B - factorization_project_solution(B, inst)))


def manifold_residuals(B, inst: FactorizationInstance):
    """(||P P^T - D||_F, ||P Q^T||_F) in the eigenbasis of X."""
    B = _as_matrix(B, inst)
    r = inst.r
    Bp = inst.basis.T @ B
    P, Q = Bp[:r], Bp[r:]
    D = np.diag(inst.evals[:r])
    return (float(np.linalg.norm(P @ P.T - D)),
            float(np.linalg.norm(P @ Q.T)))


def sample_solution(inst: FactorizationInstance,
                    rng: np.random.Generator) -> np.ndarray:
    """A random point of S: L times random orthonormal rows."""
    q, _ = np.linalg.qr(rng.standard_normal((inst.k, inst.r)))
    return inst.L @ q.T


def make_manifold_point(inst: FactorizationInstance, rng: np.random.Generator,
                        q_norm: float) -> np.ndarray:
    """A random ravine point with ||Q||_F = q_norm (in the eigenbasis)."""
    if inst.k == inst.r and q_norm > 0.0:
        raise ValueError("k == r leaves no kernel for the Q block")
    q, _ = np.linalg.qr(rng.standard_normal((inst.k, inst.r)))
    P = np.sqrt(inst.evals[:inst.r])[:, None] * q.T
    kernel = np.linalg.svd(P)[2][inst.r:]                # (k - r, k)
    Q = rng.standard_normal((inst.d - inst.r, inst.k - inst.r)) @ kernel
    nq = np.linalg.norm(Q)
    if nq > 0.0 and q_norm > 0.0:
        Q *= q_norm / nq
    else:
        Q = np.zeros_like(Q)
    return inst.basis @ np.vstack([P, Q])


def objective(inst: FactorizationInstance) -> Objective:
    """Flattened-variable objective for the optimizer code path."""

    def _both(x):
        value, grad = factorization_eval(x.reshape(inst.d, inst.k), inst)
        return value, grad.reshape(-1)

    def _eval(x):
        return _both(x)[0]

    def _grad(x):
        return _both(x)[1]

    return Objective(
        dim=inst.d * inst.k,
        eval=_eval,
        grad=_grad,
        f_star=0.0,
        p_growth=4.0,
        dist_solution=lambda x: dist_to_solution(x.reshape(inst.d, inst.k), inst),
        value_and_grad=_both,
        name="factorization",
    )


def ravine_descriptor(inst: FactorizationInstance,
                      tol: float = 1e-8) -> RavineDescriptor:
    scale = 1.0 + float(np.linalg.norm(inst.evals[:inst.r]))

    def _on_manifold(x):
        res_p, res_pq = manifold_residuals(x.reshape(inst.d, inst.k), inst)
        return res_p <= tol * scale and res_pq <= tol * scale

    return RavineDescriptor(
        retract=lambda x: factorization_retraction(
            x.reshape(inst.d, inst.k), inst).reshape(-1),
        on_manifold=_on_manifold,
        project_solution=lambda x: factorization_project_solution(
            x.reshape(inst.d, inst.k), inst).reshape(-1),
        p_growth=4.0,
        sample_solution=lambda rng: sample_solution(inst, rng).reshape(-1),
        name="factorization",
    )


def base_solution(inst: FactorizationInstance) -> np.ndarray:
    """The canonical solution (L | 0), flattened."""
    return np.hstack([inst.L, np.zeros((inst.d, inst.k - inst.r))]).reshape(-1)
