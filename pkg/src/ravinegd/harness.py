"""Experiment harness: configs, runs, comparisons, rate fits, diagnostics.

One experiment run is fully described by an :class:`ExperimentConfig` and
is deterministic given it.  ``run_experiment`` writes a per-run directory
with ``config.json``, ``trace.csv`` and ``manifest.json``; ``diagnose``
writes one JSON report per requested check under ``reports/``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import problems
from .errors import ConfigInvalid, InsufficientData, UnsupportedCheck
from .morse import morse_ravine_solve
from .opt_core import (
    RunTrace,
    gd_baseline,
    gdpolyak,
    gdpolyak_lb,
    polyak_baseline,
)
from .problems import circle as circle_mod
from .ravine import (
    DiagnosticsReport,
    check_aiming,
    check_gradient_control,
    check_growth_exponent,
    check_lojasiewicz,
    check_ravine_quadratic,
    measure_rip,
)

METHODS = ("gd", "polyak", "gdpolyak", "gdpolyak_lb")

CSV_HEADER = "iter,epoch,kind,value_gap,grad_norm,stepsize,dist_solution,dist_ravine"

# Gaps at or below this floor count as numerically converged and are
# excluded from log-linear rate fits.
GAP_FLOOR = 1e-30

SUPPORTED_CHECKS = {
    "quartic1d": {"growth", "lojasiewicz"},
    "rosenbrock": {"ravine", "aiming", "growth", "lojasiewicz", "gradcontrol",
                   "morse"},
    "circle": {"ravine", "aiming", "growth", "lojasiewicz", "gradcontrol",
               "morse"},
    "factorization": {"ravine", "aiming", "growth", "lojasiewicz",
                      "gradcontrol"},
    # Sensing has no closed-form ravine (only the Morse ravine exists), so
    # anchored clouds cannot probe the near-manifold region; only the
    # restricted-isometry measurement applies.
    "sensing": {"rip"},
    "neuron": {"ravine", "aiming", "growth", "lojasiewicz", "gradcontrol"},
}

ALL_CHECKS = ("ravine", "aiming", "growth", "lojasiewicz", "gradcontrol",
              "morse", "rip")


@dataclass
class ExperimentConfig:
    """Full description of one reproducible run."""

    problem: str
    method: str = "gdpolyak"
    eta: float = 0.01
    K: int = 100
    I: int = 50
    J: Optional[int] = None
    f_lb: Optional[float] = None
    init_radius: float = 0.5
    seed: int = 0
    out_dir: Optional[str] = None
    record_distances: bool = False
    problem_params: dict = field(default_factory=dict)

    def validate(self):
        errors = []
        if self.problem not in problems.PROBLEM_NAMES:
            errors.append(f"problem: unknown {self.problem!r}")
        if self.method not in METHODS:
            errors.append(f"method: unknown {self.method!r}")
        if not np.isfinite(self.eta) or self.eta < 0:
            errors.append(f"eta: must be >= 0, got {self.eta}")
        if self.K < 1:
            errors.append(f"K: must be >= 1, got {self.K}")
        if self.I < 1:
            errors.append(f"I: must be >= 1, got {self.I}")
        if self.method == "gdpolyak_lb":
            if self.J is None or self.J < 1:
                errors.append("J: required (>= 1) for gdpolyak_lb")
            if self.f_lb is None or not np.isfinite(self.f_lb):
                errors.append("f_lb: required (finite) for gdpolyak_lb")
        else:
            if self.J is not None:
                errors.append(f"J: only valid for gdpolyak_lb, got {self.J}")
            if self.f_lb is not None:
                errors.append(f"f_lb: only valid for gdpolyak_lb, got {self.f_lb}")
        if not np.isfinite(self.init_radius) or self.init_radius <= 0:
            errors.append(f"init_radius: must be > 0, got {self.init_radius}")
        if errors:
            raise ConfigInvalid(errors)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["out_dir"] = None if self.out_dir is None else str(self.out_dir)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid([f"unknown config keys: {sorted(unknown)}"])
        if "problem" not in data:
            raise ConfigInvalid(["problem: required"])
        return cls(**data)


@dataclass
class ComparisonTable:
    """Per-method summary rows over one shared instance and init point."""

    rows: list

    COLUMNS = ("method", "final_gap", "best_gap", "grad_evals", "slope", "r2")

    def to_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_format_cell(row[c]) for c in self.COLUMNS))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        widths = {c: max(len(c), 12) for c in self.COLUMNS}
        head = "  ".join(c.ljust(widths[c]) for c in self.COLUMNS)
        lines = [head, "-" * len(head)]
        for row in self.rows:
            lines.append("  ".join(
                _format_cell(row[c]).ljust(widths[c]) for c in self.COLUMNS))
        return "\n".join(lines) + "\n"


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _format_float(value) -> str:
    return "" if value is None else f"{value:.17g}"


def trace_to_csv(trace: RunTrace) -> str:
    """Render a trace with the stable eight-column schema."""
    lines = [CSV_HEADER]
    for r in trace.records:
        lines.append(",".join([
            str(r.iter_index),
            str(r.epoch),
            r.kind,
            _format_float(r.value_gap),
            _format_float(r.grad_norm),
            _format_float(r.stepsize),
            _format_float(r.dist_solution),
            _format_float(r.dist_ravine),
        ]))
    return "\n".join(lines) + "\n"


def _dispatch(config: ExperimentConfig, bundle, x0) -> RunTrace:
    obj = bundle.objective
    dist_solution = dist_ravine = None
    if config.record_distances:
        dist_solution = obj.dist_solution
        if bundle.descriptor is not None:
            retract = bundle.descriptor.retract
            dist_ravine = lambda x: float(np.linalg.norm(x - retract(x)))  # noqa: E731
    if config.method == "gd":
        return gd_baseline(x0, config.eta, config.K, config.I, obj,
                           dist_solution=dist_solution, dist_ravine=dist_ravine)
    if config.method == "polyak":
        return polyak_baseline(x0, config.K, config.I, obj,
                               dist_solution=dist_solution,
                               dist_ravine=dist_ravine)
    if config.method == "gdpolyak":
        return gdpolyak(x0, config.eta, config.K, config.I, obj,
                        dist_solution=dist_solution, dist_ravine=dist_ravine)
    if config.method == "gdpolyak_lb":
        return gdpolyak_lb(x0, config.eta, config.K, config.I, config.J,
                           config.f_lb, obj, dist_solution=dist_solution,
                           dist_ravine=dist_ravine)
    raise ConfigInvalid([f"method: unknown {config.method!r}"])


def run_experiment(config: ExperimentConfig) -> RunTrace:
    """Build the instance, sample the init, run the method, persist files.

    Deterministic per config.  With ``out_dir`` unset the trace is returned
    without touching the filesystem.
    """
    config.validate()
    bundle = problems.build(config.problem, config.problem_params)
    x0 = problems.sample_init(bundle, config.init_radius, config.seed)
    trace = _dispatch(config, bundle, x0)
    if config.out_dir is not None:
        _write_run(config, trace)
    return trace


def _write_run(config: ExperimentConfig, trace: RunTrace):
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / "trace.csv").write_text(trace_to_csv(trace), encoding="utf-8",
                                   newline="\n")
    manifest = {
        "config": config.to_dict(),
        "grad_evals": trace.grad_evals,
        "func_evals": trace.func_evals,
        "best_value": trace.best_value,
        "best_gap": trace.best_value - trace.f_reference,
        "final_gap": float(trace.epoch_end_gaps[-1]),
        "x_out": np.asarray(trace.x_out).ravel().tolist(),
        "aborted_rounds": trace.aborted_rounds,
    }
    if trace.f_estimates is not None:
        manifest["f_estimates"] = trace.f_estimates.tolist()
        manifest["round_values"] = trace.round_values.tolist()
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def fit_linear_rate(trace: RunTrace, burn_in: int = 5):
    """Least-squares slope and R^2 of log epoch gaps versus epoch index.

    Fits the value gaps at the end of each epoch's short-step phase (for
    the baselines, at block ends), from epoch ``burn_in`` on.  Gaps at or
    below 1e-30 count as converged and are dropped.  Raises
    :class:`InsufficientData` with fewer than 5 usable records.
    """
    gaps = np.asarray(trace.epoch_phase_gaps, dtype=float)
    idx = np.arange(1, gaps.size + 1)
    keep = (idx >= max(burn_in, 1)) & (gaps > GAP_FLOOR)
    if keep.sum() < 5:
        raise InsufficientData(
            f"only {int(keep.sum())} usable epoch records after burn-in")
    x = idx[keep].astype(float)
    y = np.log(gaps[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(r2)


def compare_methods(config: ExperimentConfig) -> ComparisonTable:
    """Run gd, polyak and gdpolyak (plus gdpolyak_lb when J and f_lb are set)
    from one init point.

    The three mandatory methods share the gradient budget I*(K+1) exactly;
    the lower-bound variant runs its own J*I*(K+1) budget, visible in the
    instrumented count column.  Files are written when out_dir is set.
    """
    methods = ["gd", "polyak", "gdpolyak"]
    run_lb = config.J is not None and config.f_lb is not None
    if run_lb:
        methods.append("gdpolyak_lb")
    rows = []
    base = config.to_dict()
    base.pop("method", None)
    out_root = base.pop("out_dir", None)
    for method in methods:
        cfg = ExperimentConfig(method=method, out_dir=None, **base)
        if method != "gdpolyak_lb":
            cfg.J, cfg.f_lb = None, None
        if out_root is not None:
            cfg.out_dir = str(Path(out_root) / method)
        trace = run_experiment(cfg)
        try:
            slope, r2 = fit_linear_rate(trace)
        except InsufficientData:
            slope, r2 = None, None
        rows.append({
            "method": method,
            "final_gap": float(trace.epoch_end_gaps[-1]),
            "best_gap": trace.best_value - trace.f_reference,
            "grad_evals": trace.grad_evals,
            "slope": slope,
            "r2": r2,
        })
    table = ComparisonTable(rows)
    if out_root is not None:
        out = Path(out_root)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(table.to_csv(), encoding="utf-8")
        (out / "comparison.txt").write_text(table.to_text(), encoding="utf-8")
    return table


def _ravine_brackets(bundle) -> tuple:
    if bundle.name == "rosenbrock":
        return 5.0, 20.0       # the sampled ratio is exactly 10
    if bundle.name == "circle":
        return 0.5, 2.0        # the sampled ratio is exactly 1
    if bundle.name == "factorization":
        inst = bundle.instance
        return inst.sigmar / 16.0, 36.0 * inst.sigma1
    if bundle.name == "neuron":
        return 1e-3, 1e3
    raise UnsupportedCheck(f"no ravine bracket for {bundle.name}")


def _run_morse_check(bundle, tol: float) -> DiagnosticsReport:
    """Problem-specific Morse-ravine verification against known geometry."""
    obj = bundle.objective
    if bundle.name == "rosenbrock":
        solver = morse_ravine_solve(obj, np.zeros(2), tol=1e-12, max_iter=50)
        grid = np.arange(-0.5, 0.5 + 1e-12, 0.05)
        errs = [abs(float(solver(np.array([u]))[0]) - u * u) for u in grid]
        worst = max(errs)
        return DiagnosticsReport(
            check="morse", samples_tested=len(errs), skipped=0,
            measured_lower=min(errs), measured_upper=worst,
            passed=bool(worst <= 1e-10),
            extras={"grid": [float(u) for u in grid], "tolerance": 1e-10})
    if bundle.name == "circle":
        solver = morse_ravine_solve(obj, np.array([0.0, 1.0]), tol=1e-12,
                                    max_iter=50)
        grid = np.arange(-0.2, 0.2 + 1e-12, 0.02)
        resids = [abs(circle_mod.morse_implicit_residual(
            solver.point(np.array([u])))) for u in grid]
        worst = max(resids)
        return DiagnosticsReport(
            check="morse", samples_tested=len(resids), skipped=0,
            measured_lower=min(resids), measured_upper=worst,
            passed=bool(worst <= 1e-6),
            extras={"grid": [float(u) for u in grid], "tolerance": 1e-6})
    raise UnsupportedCheck(f"morse check not available for {bundle.name}")


def run_check(bundle, check: str, n_samples: int, radius: float,
              seed: int) -> DiagnosticsReport:
    """Run one named diagnostic on a problem bundle."""
    if check not in SUPPORTED_CHECKS.get(bundle.name, set()):
        raise UnsupportedCheck(f"{check} is not supported for {bundle.name}")
    obj = bundle.objective
    rav = bundle.descriptor
    if check == "ravine":
        lo, hi = _ravine_brackets(bundle)
        return check_ravine_quadratic(obj, rav, n_samples, radius, seed,
                                      lower_bracket=lo, upper_bracket=hi)
    if check == "aiming":
        return check_aiming(obj, rav, n_samples, radius, seed)
    if check == "growth":
        grid = np.geomspace(radius / 30.0, radius, 4)
        bracket = None
        if bundle.name == "factorization":
            bracket = (1.0 / bundle.instance.k, 1.0)
        return check_growth_exponent(obj, rav, n_samples, grid, seed,
                                     exact_bracket=bracket)
    if check == "lojasiewicz":
        return check_lojasiewicz(
            obj, obj.p_growth, n_samples, radius, seed,
            sample_solution=bundle.sample_solution,
            retract=None if rav is None else rav.retract)
    if check == "gradcontrol":
        return check_gradient_control(obj, rav, n_samples, radius, seed)
    if check == "morse":
        return _run_morse_check(bundle, tol=1e-12)
    if check == "rip":
        inst = bundle.instance
        rank_l = inst.fac.k + inst.fac.r
        delta = measure_rip(inst, rank_l, trials=max(n_samples, 1), seed=seed)
        return DiagnosticsReport(
            check="rip", samples_tested=max(n_samples, 1), skipped=0,
            measured_lower=delta, measured_upper=delta,
            passed=bool(delta < 0.5),
            extras={"rank_l": rank_l, "threshold": 0.5})
    raise UnsupportedCheck(f"unknown check {check!r}")


def diagnose(problem: str, suite, n_samples: int = 200, radius: float = 0.05,
             seed: int = 0, out_dir: Optional[str] = None,
             problem_params: Optional[dict] = None):
    """Run a suite of checks; returns (all_passed, {check: report}).

    Writes one JSON report per check under ``out_dir/reports`` when an
    output directory is given.
    """
    suite = list(suite)
    if not suite:
        raise ValueError("suite must be nonempty")
    bundle = problems.build(problem, problem_params)
    for check in suite:
        if check not in ALL_CHECKS:
            raise UnsupportedCheck(f"unknown check {check!r}")
        if check not in SUPPORTED_CHECKS[problem]:
            raise UnsupportedCheck(f"{check} is not supported for {problem}")
    reports = {}
    for check in suite:
        reports[check] = run_check(bundle, check, n_samples, radius, seed)
    if out_dir is not None:
        rep_dir = Path(out_dir) / "reports"
        rep_dir.mkdir(parents=True, exist_ok=True)
        for check, report in reports.items():
            (rep_dir / f"{check}.json").write_text(
                report.to_json(indent=2) + "\n", encoding="utf-8")
    return all(r.passed for r in reports.values()), reports
