"""Ravine descriptors and numerical diagnostics.

A ravine is a manifold through the minimizer set along which the objective
grows slowly while growing at least quadratically transverse to it, in the
retraction sense f(x) - f(R(x)) >= C * ||x - R(x)||^2.  Each problem with a
closed-form ravine supplies a :class:`RavineDescriptor`; the checks in this
module sample solution-anchored clouds and measure the extreme ratios of
the inequality under test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InsufficientValidSamples
from .objective import Objective, central_difference_gradient, unit_direction

# Samples closer to the manifold than this are 0/0 ratios and are skipped.
SKIP_DISTANCE = 1e-12


@dataclass(frozen=True)
class RavineDescriptor:
    """Closed-form ravine data for one problem family.

    Attributes
    ----------
    retract : map from a point near the manifold onto the manifold.
    on_manifold : membership predicate with tolerance.
    project_solution : map onto the solution set S.
    p_growth : growth exponent of the value along the manifold away from S.
    sample_solution : rng -> a random point of S, used to anchor clouds.
    """

    retract: Callable[[np.ndarray], np.ndarray]
    on_manifold: Callable[[np.ndarray], bool]
    project_solution: Callable[[np.ndarray], np.ndarray]
    p_growth: float
    sample_solution: Callable[[np.random.Generator], np.ndarray]
    name: str = ""


@dataclass
class DiagnosticsReport:
    """Measured extremes and verdict of one sampled inequality check."""

    check: str
    samples_tested: int
    skipped: int
    measured_lower: float
    measured_upper: float
    passed: bool
    details: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "samples_tested": self.samples_tested,
            "skipped": self.skipped,
            "measured_lower": self.measured_lower,
            "measured_upper": self.measured_upper,
            "pass": self.passed,
            "details": self.details,
            "extras": self.extras,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _cloud(rav: RavineDescriptor, n_samples: int, radius: float,
           rng: np.random.Generator, dim: int):
    """Solution-anchored sample cloud: s + radius * (random unit direction)."""
    for _ in range(n_samples):
        s = np.asarray(rav.sample_solution(rng), dtype=float)
        yield s + radius * unit_direction(rng, dim)


def _worst_offenders(items, n=3):
    """The n (ratio, point) pairs with extreme ratios, serializable."""
    if not items:
        return []
    items = sorted(items, key=lambda t: t[0])
    picked = items[:n] + items[-n:]
    return [{"ratio": float(r), "point": np.asarray(x).ravel().tolist()}
            for r, x in picked]


def decompose_tangent_normal(obj: Objective, rav: RavineDescriptor, x):
    """Split f(x) into (f_N, f_T) with f_T = f(R(x)) and f_N = f(x) - f_T."""
    x = np.asarray(x, dtype=float)
    f_t = float(obj.eval(rav.retract(x)))
    f_n = float(obj.eval(x)) - f_t
    return f_n, f_t


def check_ravine_quadratic(obj: Objective, rav: RavineDescriptor,
                           n_samples: int, radius: float, seed: int, *,
                           lower_bracket: float,
                           upper_bracket: float) -> DiagnosticsReport:
    """Extremes of (f(x) - f(R(x))) / ||x - R(x)||^2 over an anchored cloud.

    Passes when every ratio lies inside [lower_bracket, upper_bracket].
    """
    rng = np.random.default_rng(seed)
    ratios = []
    skipped = 0
    for x in _cloud(rav, n_samples, radius, rng, obj.dim):
        r_x = rav.retract(x)
        den = float(np.sum((x - r_x) ** 2))
        if den < SKIP_DISTANCE ** 2:
            skipped += 1
            continue
        rho = (float(obj.eval(x)) - float(obj.eval(r_x))) / den
        ratios.append((rho, x))
    _require_valid(ratios, skipped, n_samples, "ravine")
    values = [r for r, _ in ratios]
    lo, hi = min(values), max(values)
    return DiagnosticsReport(
        check="ravine",
        samples_tested=len(ratios),
        skipped=skipped,
        measured_lower=lo,
        measured_upper=hi,
        passed=bool(lo >= lower_bracket and hi <= upper_bracket),
        details=_worst_offenders(ratios),
        extras={"lower_bracket": lower_bracket, "upper_bracket": upper_bracket,
                "radius": radius},
    )


def check_aiming(obj: Objective, rav: RavineDescriptor, n_samples: int,
                 radius: float, seed: int) -> DiagnosticsReport:
    """Extremes of <grad f(x), x - R(x)> / ||x - R(x)||^2; passes when min > 0."""
    rng = np.random.default_rng(seed)
    ratios = []
    skipped = 0
    for x in _cloud(rav, n_samples, radius, rng, obj.dim):
        r_x = rav.retract(x)
        diff = x - r_x
        den = float(diff @ diff)
        if den < SKIP_DISTANCE ** 2:
            skipped += 1
            continue
        g = np.asarray(obj.grad(x), dtype=float)
        ratios.append((float(g @ diff) / den, x))
    _require_valid(ratios, skipped, n_samples, "aiming")
    values = [r for r, _ in ratios]
    lo, hi = min(values), max(values)
    return DiagnosticsReport(
        check="aiming",
        samples_tested=len(ratios),
        skipped=skipped,
        measured_lower=lo,
        measured_upper=hi,
        passed=bool(lo > 0.0),
        details=_worst_offenders(ratios),
        extras={"radius": radius},
    )


def check_growth_exponent(obj: Objective, rav: RavineDescriptor,
                          n_samples: int, radius_grid, seed: int, *,
                          dist_fn=None,
                          exact_bracket=None,
                          slope_tol: float = 0.1) -> DiagnosticsReport:
    """Log-log regression of the value gap against distance to S on the manifold.

    Manifold points are produced by retracting perturbed solution points at
    each radius in ``radius_grid`` (which must span at least one decade).
    Passes when |slope - p_growth| <= slope_tol and, if ``exact_bracket``
    = (lo_coef, hi_coef) is given, when every sample satisfies
    lo_coef * dist^p <= gap <= hi_coef * dist^p to 1e-10 relative.
    """
    radius_grid = np.asarray(list(radius_grid), dtype=float)
    if radius_grid.max() < 10.0 * radius_grid.min():
        raise ValueError("radius_grid must span at least one decade")
    if dist_fn is None:
        dist_fn = obj.dist_solution
    if dist_fn is None:
        raise ValueError("no distance oracle available for growth check")
    f_star = float(obj.f_star) if obj.f_star is not None else 0.0
    p = rav.p_growth

    rng = np.random.default_rng(seed)
    per_radius = max(1, n_samples // len(radius_grid))
    logs = []
    ratios = []
    skipped = 0
    bracket_ok = True
    for radius in radius_grid:
        for x in _cloud(rav, per_radius, radius, rng, obj.dim):
            y = rav.retract(x)
            gap = float(obj.eval(y)) - f_star
            dist = float(dist_fn(y))
            if dist < SKIP_DISTANCE or gap <= 0.0:
                skipped += 1
                continue
            logs.append((np.log(dist), np.log(gap)))
            ratio = gap / dist ** p
            ratios.append((ratio, y))
            if exact_bracket is not None:
                lo_c, hi_c = exact_bracket
                tol = 1e-10 * max(abs(gap), lo_c * dist ** p)
                if gap < lo_c * dist ** p - tol or gap > hi_c * dist ** p + tol:
                    bracket_ok = False
    _require_valid(ratios, skipped, per_radius * len(radius_grid), "growth")
    ld, lg = np.array([a for a, _ in logs]), np.array([b for _, b in logs])
    slope, intercept = np.polyfit(ld, lg, 1)
    resid = float(np.sqrt(np.mean((lg - (slope * ld + intercept)) ** 2)))
    values = [r for r, _ in ratios]
    passed = abs(slope - p) <= slope_tol and bracket_ok
    return DiagnosticsReport(
        check="growth",
        samples_tested=len(ratios),
        skipped=skipped,
        measured_lower=min(values),
        measured_upper=max(values),
        passed=bool(passed),
        details=_worst_offenders(ratios),
        extras={"slope": float(slope), "expected_exponent": p,
                "fit_residual": resid,
                "exact_bracket": list(exact_bracket) if exact_bracket else None,
                "bracket_ok": bracket_ok},
    )


def check_lojasiewicz(obj: Objective, p: float, n_samples: int, radius: float,
                      seed: int, *, sample_solution,
                      retract=None) -> DiagnosticsReport:
    """Stability of (f - f*)^((p-1)/p) / ||grad f|| over shrinking clouds.

    Ratios are collected at ``radius`` and ``radius / 10``; when a retraction
    is available each sampled point also contributes its retracted companion,
    so the cloud probes the near-manifold region where the ratio peaks.
    Passes when both maxima are finite and within a factor 2 of each other.
    """
    if obj.f_star is None:
        raise ValueError("lojasiewicz check requires obj.f_star")
    f_star = float(obj.f_star)
    exponent = (p - 1.0) / p

    def max_ratio(rad, rng):
        vals = []
        skipped = 0
        for _ in range(n_samples):
            s = np.asarray(sample_solution(rng), dtype=float)
            x = s + rad * unit_direction(rng, obj.dim)
            points = [x]
            if retract is not None:
                points.append(np.asarray(retract(x), dtype=float))
            for pt in points:
                gap = float(obj.eval(pt)) - f_star
                gnorm = float(np.linalg.norm(obj.grad(pt)))
                if gap <= 0.0 or gnorm <= 1e-300:
                    skipped += 1
                    continue
                vals.append((gap ** exponent / gnorm, pt))
        return vals, skipped

    rng = np.random.default_rng(seed)
    big, skip_big = max_ratio(radius, rng)
    small, skip_small = max_ratio(radius / 10.0, rng)
    _require_valid(big + small, skip_big + skip_small, 2 * n_samples,
                   "lojasiewicz")
    max_big = max(r for r, _ in big)
    max_small = max(r for r, _ in small)
    all_ratios = big + small
    stable = (np.isfinite(max_big) and np.isfinite(max_small)
              and max(max_big, max_small) <= 2.0 * min(max_big, max_small))
    return DiagnosticsReport(
        check="lojasiewicz",
        samples_tested=len(all_ratios),
        skipped=skip_big + skip_small,
        measured_lower=min(r for r, _ in all_ratios),
        measured_upper=max(max_big, max_small),
        passed=bool(stable),
        details=_worst_offenders(all_ratios),
        extras={"max_at_radius": float(max_big),
                "max_at_radius_over_10": float(max_small),
                "radius": radius, "exponent": exponent},
    )


def check_gradient_control(obj: Objective, rav: RavineDescriptor,
                           n_samples: int, radius: float,
                           seed: int) -> DiagnosticsReport:
    """Stability of ||grad f(x) - grad (f o R)(x)|| / ||x - R(x)||.

    The composite gradient is computed by central finite differences of
    x -> f(R(x)).  Passes when the maximum ratio grows by at most a factor
    2 as the sampling radius shrinks tenfold.
    """

    def ratios_at(rad, rng):
        vals = []
        skipped = 0
        for x in _cloud(rav, n_samples, rad, rng, obj.dim):
            r_x = rav.retract(x)
            den = float(np.linalg.norm(x - r_x))
            if den < SKIP_DISTANCE:
                skipped += 1
                continue
            g = np.asarray(obj.grad(x), dtype=float)
            g_comp = central_difference_gradient(
                lambda z: float(obj.eval(rav.retract(z))), x,
                h=1e-6 * (1.0 + float(np.linalg.norm(x))))
            vals.append((float(np.linalg.norm(g - g_comp)) / den, x))
        return vals, skipped

    rng = np.random.default_rng(seed)
    big, skip_big = ratios_at(radius, rng)
    small, skip_small = ratios_at(radius / 10.0, rng)
    _require_valid(big + small, skip_big + skip_small, 2 * n_samples,
                   "gradcontrol")
    max_big = max(r for r, _ in big)
    max_small = max(r for r, _ in small)
    all_ratios = big + small
    passed = max_small <= 2.0 * max(max_big, 1e-300)
    return DiagnosticsReport(
        check="gradcontrol",
        samples_tested=len(all_ratios),
        skipped=skip_big + skip_small,
        measured_lower=min(r for r, _ in all_ratios),
        measured_upper=max(max_big, max_small),
        passed=bool(passed),
        details=_worst_offenders(all_ratios),
        extras={"max_at_radius": float(max_big),
                "max_at_radius_over_10": float(max_small), "radius": radius},
    )


def measure_rip(inst, rank_l: int, trials: int, seed: int) -> float:
    """Empirical restricted-isometry constant of the sensing operator.

    Samples random symmetric matrices Z of rank <= rank_l (Gaussian factors
    U C U^T, normalized to unit Frobenius norm) and returns the maximum of
    |sum_i <A_i, Z>^2 / (m * op_scale^2) - 1| over the trials.  Sampling
    only lower-bounds the true constant.  ``op_scale`` is the instance's
    analytic normalization of the measurement ensemble (see the sensing
    module); an orthonormal-basis operator uses op_scale = 1.
    """
    rng = np.random.default_rng(seed)
    d = inst.A.shape[1]
    if rank_l > d:
        raise ValueError(f"rank_l = {rank_l} exceeds dimension {d}")
    a_flat = inst.A.reshape(inst.m, -1)
    scale2 = float(getattr(inst, "op_scale", 1.0)) ** 2
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal((d, rank_l))
        c = rng.standard_normal((rank_l, rank_l))
        z = u @ ((c + c.T) / 2.0) @ u.T
        nz = np.linalg.norm(z)
        if nz < 1e-300:
            continue
        z /= nz
        coeffs = a_flat @ z.reshape(-1)
        val = float(coeffs @ coeffs) / (inst.m * scale2)
        worst = max(worst, abs(val - 1.0))
    return worst


def _require_valid(kept, skipped, attempted, check):
    if not kept or skipped > 0.5 * attempted:
        raise InsufficientValidSamples(
            f"{check}: {skipped}/{attempted} samples skipped")
