"""Steppers and epoch-structured gradient algorithms.

Two building blocks (a constant-stepsize gradient step and a Polyak step)
are interlaced by ``gdpolyak``: each epoch runs K short steps and then one
long Polyak step targeting the known minimal value.  ``gdpolyak_lb`` wraps
the same epoch loop in outer rounds that maintain a lower estimate of the
minimal value, restarting from the original initial point each round and
halving the gap between the estimate and the incumbent value.

Every run emits a :class:`RunTrace`.  A :class:`StepRecord` describes the
iterate a step departs from: its value gap, gradient norm and the stepsize
taken there, so one record corresponds to exactly one gradient evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import (
    EmptyTrace,
    MissingFStar,
    NonFiniteGradient,
    TargetAboveValue,
)
from .objective import Objective

SHORT_GD = "ShortGD"
POLYAK_LONG = "PolyakLong"

# Polyak step guards: skip when the gap is closed or the gradient vanishes.
GRAD_NORM_FLOOR = 1e-30


def _target_tolerance(f_target: float) -> float:
    return 1e-10 * (1.0 + abs(f_target))


@dataclass(slots=True)
class StepRecord:
    """Scalar statistics of one iterate, at the moment a step departs from it."""

    iter_index: int
    epoch: int
    kind: str
    value_gap: float
    grad_norm: float
    stepsize: float
    dist_solution: Optional[float] = None
    dist_ravine: Optional[float] = None


@dataclass
class RunTrace:
    """Full record stream of one optimizer run.

    ``best_value`` is the minimum of f over the algorithm's argmin candidates
    (epoch points for gdpolyak, round bests for gdpolyak_lb) and ``x_out``
    the earliest iterate attaining it.  ``epoch_phase_gaps[i]`` is the value
    gap at the end of epoch i's short-step phase, ``epoch_end_gaps[i]`` the
    gap after the epoch's Polyak step.
    """

    records: List[StepRecord]
    x_out: np.ndarray
    best_value: float
    grad_evals: int
    func_evals: int
    f_reference: float
    epoch_phase_gaps: np.ndarray
    epoch_end_gaps: np.ndarray
    polyak_stepsizes: np.ndarray
    f_estimates: Optional[np.ndarray] = None
    round_values: Optional[np.ndarray] = None
    inner_best_value: Optional[float] = None
    aborted_rounds: List[int] = field(default_factory=list)


class _Recorder:
    """Accumulates records and instruments evaluation counts."""

    def __init__(self, obj: Objective, f_reference: float,
                 dist_solution=None, dist_ravine=None):
        self.obj = obj
        self.f_reference = f_reference
        self.records: List[StepRecord] = []
        self.grad_evals = 0
        self.func_evals = 0
        self._dist_solution = dist_solution
        self._dist_ravine = dist_ravine

    def evaluate(self, x: np.ndarray) -> tuple:
        """Fused value/gradient evaluation; one gradient evaluation."""
        f, g = self.obj.both(x)
        self.grad_evals += 1
        self.func_evals += 1
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(iter_index=self.grad_evals - 1)
        return float(f), np.asarray(g, dtype=float)

    def value(self, x: np.ndarray) -> float:
        self.func_evals += 1
        return float(self.obj.eval(x))

    def note(self, x, f, g, kind, epoch, stepsize):
        rec = StepRecord(
            iter_index=self.grad_evals - 1,
            epoch=epoch,
            kind=kind,
            value_gap=f - self.f_reference,
            grad_norm=float(np.linalg.norm(g)),
            stepsize=stepsize,
        )
        if self._dist_solution is not None:
            rec.dist_solution = float(self._dist_solution(x))
        if self._dist_ravine is not None:
            rec.dist_ravine = float(self._dist_ravine(x))
        self.records.append(rec)


def gd_step(x: np.ndarray, eta: float, obj: Objective) -> np.ndarray:
    """One constant-stepsize gradient step x - eta * grad f(x)."""
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    x = np.asarray(x, dtype=float)
    g = np.asarray(obj.grad(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient()
    return x - eta * g


def _gd_phase(x, eta, K, rec: _Recorder, epoch: int) -> np.ndarray:
    """K recorded gradient steps starting at x; exactly K gradient evals."""
    for _ in range(K):
        f, g = rec.evaluate(x)
        rec.note(x, f, g, SHORT_GD, epoch, eta)
        x = x - eta * g
    return x


def gd_run(x0, eta: float, K: int, obj: Objective,
           f_reference: Optional[float] = None):
    """Run K constant-stepsize gradient steps; returns (x_K, records).

    Performs exactly K gradient evaluations.  A :class:`NonFiniteGradient`
    raised mid-run carries the failing iteration index.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if f_reference is None:
        f_reference = obj.f_star if obj.f_star is not None else 0.0
    rec = _Recorder(obj, f_reference)
    x = _gd_phase(np.asarray(x0, dtype=float), eta, K, rec, epoch=1)
    return x, rec.records


def polyak_step(x, obj: Objective, f_target: float, scale: float = 1.0):
    """One Polyak step x - (f(x) - f_target) / (scale * ||grad f(x)||^2) * grad f(x).

    Returns x unchanged when the gap is closed (within floating-point
    tolerance) or the gradient norm is below 1e-30.  Raises
    :class:`TargetAboveValue` when f_target exceeds f(x) beyond tolerance,
    signalling a bad lower-bound estimate.
    """
    if scale not in (1.0, 2.0, 1, 2):
        raise ValueError(f"scale must be 1 or 2, got {scale}")
    x = np.asarray(x, dtype=float)
    f, g = obj.both(x)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient()
    if f_target > f + _target_tolerance(f_target):
        raise TargetAboveValue(
            f"target {f_target} exceeds value {f} beyond tolerance")
    gap = f - f_target
    gnorm = np.linalg.norm(g)
    if gap <= 0.0 or gnorm <= GRAD_NORM_FLOOR:
        return x.copy()
    return x - (gap / (scale * gnorm * gnorm)) * g


def _polyak_stepsize(f, g, f_target, scale):
    """Stepsize of the guarded Polyak step; 0.0 when the step is skipped."""
    gap = f - f_target
    gnorm2 = float(g @ g)
    if gap <= 0.0 or gnorm2 <= GRAD_NORM_FLOOR * GRAD_NORM_FLOOR:
        return 0.0
    return gap / (scale * gnorm2)


def best_iterate(records):
    """Earliest pair (point, value) with minimal value."""
    best = None
    for point, value in records:
        if best is None or value < best[1]:
            best = (point, value)
    if best is None:
        raise EmptyTrace("no iterates to select from")
    return best


def gdpolyak(x0, eta: float, K: int, I: int, obj: Objective, *,
             dist_solution=None, dist_ravine=None) -> RunTrace:
    """I epochs of K short gradient steps plus one Polyak step toward f*.

    Requires ``obj.f_star``.  Performs exactly I*(K+1) gradient evaluations.
    The returned iterate is the earliest argmin of f over the epoch points
    (both the short-phase endpoints and the Polyak outputs).
    """
    if obj.f_star is None:
        raise MissingFStar("gdpolyak requires obj.f_star")
    if K < 1 or I < 1:
        raise ValueError("K and I must be >= 1")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    f_star = float(obj.f_star)
    rec = _Recorder(obj, f_star, dist_solution, dist_ravine)

    x = np.asarray(x0, dtype=float)
    candidates = []
    phase_gaps = np.empty(I)
    end_gaps = np.empty(I)
    stepsizes = np.empty(I)
    for i in range(1, I + 1):
        x_tilde = _gd_phase(x, eta, K, rec, epoch=i)
        f_t, g_t = rec.evaluate(x_tilde)
        if f_star > f_t + _target_tolerance(f_star):
            raise TargetAboveValue(
                f"f_star {f_star} exceeds value {f_t} beyond tolerance")
        s = _polyak_stepsize(f_t, g_t, f_star, scale=1.0)
        rec.note(x_tilde, f_t, g_t, POLYAK_LONG, i, s)
        candidates.append((x_tilde, f_t))
        x = x_tilde - s * g_t if s > 0.0 else x_tilde.copy()
        f_end = rec.value(x)
        candidates.append((x, f_end))
        phase_gaps[i - 1] = f_t - f_star
        end_gaps[i - 1] = f_end - f_star
        stepsizes[i - 1] = s

    x_out, best = best_iterate(candidates)
    return RunTrace(
        records=rec.records,
        x_out=x_out.copy(),
        best_value=best,
        grad_evals=rec.grad_evals,
        func_evals=rec.func_evals,
        f_reference=f_star,
        epoch_phase_gaps=phase_gaps,
        epoch_end_gaps=end_gaps,
        polyak_stepsizes=stepsizes,
        inner_best_value=min(best, min(r.value_gap for r in rec.records) + f_star),
    )


def gdpolyak_lb(x0, eta: float, K: int, I: int, J: int, f0: float,
                obj: Objective, *, warm_start: bool = False,
                dist_solution=None, dist_ravine=None) -> RunTrace:
    """J restarted rounds of halved Polyak epochs driven by a lower estimate.

    Round j runs I epochs from the original x0 (or from the previous round's
    best point when ``warm_start`` is set), using Polyak steps with scale 2
    and target f_{j-1}; the estimate then updates to the midpoint
    f_j = (f_{j-1} + f(x_j)) / 2 where x_j is the round's best iterate.
    The returned point is the best of the round bests.

    A round whose iterates produce a non-finite gradient is abandoned (its
    candidates so far are kept); the next round restarts from x0 regardless.
    Epochs whose target exceeds the current value skip the Polyak step.
    """
    if K < 1 or I < 1 or J < 1:
        raise ValueError("K, I and J must be >= 1")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    x0 = np.asarray(x0, dtype=float)
    f_ref = float(obj.f_star) if obj.f_star is not None else float(f0)
    rec = _Recorder(obj, f_ref, dist_solution, dist_ravine)

    f0 = float(f0)
    fx0 = rec.value(x0)
    if f0 > fx0 + _target_tolerance(f0):
        raise ValueError(f"f0 = {f0} exceeds f(x0) = {fx0}")

    f_est = f0
    estimates = np.empty(J)
    round_values = np.empty(J)
    round_bests = []
    phase_gaps, end_gaps, stepsizes = [], [], []
    aborted = []
    x_start = x0
    for j in range(1, J + 1):
        x = x_start.copy()
        candidates = []
        # A far-below target can catapult an epoch; overflow to inf is the
        # designed failure path (the round aborts, the next one restarts).
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(1, I + 1):
                    epoch = (j - 1) * I + i
                    x_tilde = _gd_phase(x, eta, K, rec, epoch=epoch)
                    f_t, g_t = rec.evaluate(x_tilde)
                    skip = f_est > f_t + _target_tolerance(f_est)
                    s = (0.0 if skip
                         else _polyak_stepsize(f_t, g_t, f_est, scale=2.0))
                    rec.note(x_tilde, f_t, g_t, POLYAK_LONG, epoch, s)
                    candidates.append((x_tilde, f_t))
                    x = x_tilde - s * g_t if s > 0.0 else x_tilde.copy()
                    f_end = rec.value(x)
                    if np.isfinite(f_end):
                        candidates.append((x, f_end))
                    phase_gaps.append(f_t - f_ref)
                    end_gaps.append(f_end - f_ref)
                    stepsizes.append(s)
        except NonFiniteGradient:
            aborted.append(j)
        if not candidates:
            # Diverged before banking any iterate; round contributes nothing.
            estimates[j - 1] = f_est
            round_values[j - 1] = np.inf
            continue
        x_j, f_xj = best_iterate(candidates)
        f_est = 0.5 * (f_est + f_xj)
        estimates[j - 1] = f_est
        round_values[j - 1] = f_xj
        round_bests.append((x_j, f_xj))
        if warm_start:
            x_start = x_j
    if not round_bests:
        raise EmptyTrace("every round diverged before recording an iterate")

    x_out, best = best_iterate(round_bests)
    inner_best = min(r.value_gap for r in rec.records) + f_ref
    return RunTrace(
        records=rec.records,
        x_out=x_out.copy(),
        best_value=best,
        grad_evals=rec.grad_evals,
        func_evals=rec.func_evals,
        f_reference=f_ref,
        epoch_phase_gaps=np.array(phase_gaps),
        epoch_end_gaps=np.array(end_gaps),
        polyak_stepsizes=np.array(stepsizes),
        f_estimates=estimates,
        round_values=round_values,
        inner_best_value=min(best, inner_best),
        aborted_rounds=aborted,
    )


def gd_baseline(x0, eta: float, K: int, I: int, obj: Objective, *,
                dist_solution=None, dist_ravine=None) -> RunTrace:
    """Constant-stepsize gradient descent at the gdpolyak budget I*(K+1).

    Iterations are grouped into I blocks of K+1 steps so that per-block
    value gaps are comparable to gdpolyak epochs at equal gradient budget.
    """
    if K < 1 or I < 1:
        raise ValueError("K and I must be >= 1")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    f_ref = float(obj.f_star) if obj.f_star is not None else 0.0
    rec = _Recorder(obj, f_ref, dist_solution, dist_ravine)
    x = np.asarray(x0, dtype=float)
    best = (x.copy(), rec.value(x))
    end_gaps = np.empty(I)
    for i in range(1, I + 1):
        for _ in range(K + 1):
            f, g = rec.evaluate(x)
            rec.note(x, f, g, SHORT_GD, i, eta)
            if f < best[1]:
                best = (x.copy(), f)
            x = x - eta * g
        f_end = rec.value(x)
        end_gaps[i - 1] = f_end - f_ref
        if f_end < best[1]:
            best = (x.copy(), f_end)
    # Block-end gaps double as the rate-fit series for the baseline.
    return RunTrace(
        records=rec.records,
        x_out=best[0],
        best_value=best[1],
        grad_evals=rec.grad_evals,
        func_evals=rec.func_evals,
        f_reference=f_ref,
        epoch_phase_gaps=end_gaps.copy(),
        epoch_end_gaps=end_gaps,
        polyak_stepsizes=np.empty(0),
    )


def polyak_baseline(x0, K: int, I: int, obj: Objective, *,
                    dist_solution=None, dist_ravine=None) -> RunTrace:
    """A Polyak step toward f* at every iteration, budget I*(K+1).

    Grouped into I blocks of K+1 steps for equal-budget comparisons.
    """
    if obj.f_star is None:
        raise MissingFStar("polyak baseline requires obj.f_star")
    if K < 1 or I < 1:
        raise ValueError("K and I must be >= 1")
    f_star = float(obj.f_star)
    rec = _Recorder(obj, f_star, dist_solution, dist_ravine)
    x = np.asarray(x0, dtype=float)
    best = (x.copy(), rec.value(x))
    end_gaps = np.empty(I)
    stepsizes = []
    for i in range(1, I + 1):
        for _ in range(K + 1):
            f, g = rec.evaluate(x)
            s = _polyak_stepsize(f, g, f_star, scale=1.0)
            rec.note(x, f, g, POLYAK_LONG, i, s)
            stepsizes.append(s)
            if f < best[1]:
                best = (x.copy(), f)
            if s > 0.0:
                x = x - s * g
        f_end = rec.value(x)
        end_gaps[i - 1] = f_end - f_star
        if f_end < best[1]:
            best = (x.copy(), f_end)
    return RunTrace(
        records=rec.records,
        x_out=best[0],
        best_value=best[1],
        grad_evals=rec.grad_evals,
        func_evals=rec.func_evals,
        f_reference=f_star,
        epoch_phase_gaps=end_gaps.copy(),
        epoch_end_gaps=end_gaps,
        polyak_stepsizes=np.array(stepsizes),
    )
