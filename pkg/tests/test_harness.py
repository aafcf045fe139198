"""Harness tests: config validation, run artifacts, rate fits, comparisons,
diagnostics dispatch and the CLI."""

import json
import math

import numpy as np
import pytest

from ravinegd import (
    ConfigInvalid,
    ExperimentConfig,
    InsufficientData,
    UnsupportedCheck,
    compare_methods,
    diagnose,
    fit_linear_rate,
    run_experiment,
)
from ravinegd.cli import main
from ravinegd.harness import CSV_HEADER, trace_to_csv
from ravinegd.opt_core import RunTrace


def _synthetic_trace(gaps):
    gaps = np.asarray(gaps, dtype=float)
    return RunTrace(records=[], x_out=np.zeros(1), best_value=float(gaps[-1]),
                    grad_evals=0, func_evals=0, f_reference=0.0,
                    epoch_phase_gaps=gaps, epoch_end_gaps=gaps,
                    polyak_stepsizes=np.zeros(gaps.size))


# ------------------------------------------------------------------ config

def test_config_validation_collects_field_errors():
    cfg = ExperimentConfig(problem="nope", method="gdpolyak_lb", eta=-1.0,
                           K=0, I=0, init_radius=-0.5)
    with pytest.raises(ConfigInvalid) as exc:
        cfg.validate()
    text = " ".join(exc.value.errors)
    for token in ("problem", "eta", "K", "I", "J", "f_lb", "init_radius"):
        assert token in text


def test_config_rejects_lb_fields_for_other_methods():
    cfg = ExperimentConfig(problem="quartic1d", method="gd", J=3, f_lb=0.0)
    with pytest.raises(ConfigInvalid):
        cfg.validate()


def test_config_roundtrip_equality():
    cfg = ExperimentConfig(problem="rosenbrock", method="gdpolyak",
                           eta=0.0125, K=100, I=50, init_radius=0.5, seed=3,
                           problem_params={"instance_seed": 1})
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig.from_dict({"problem": "quartic1d", "etaa": 0.1})


# --------------------------------------------------------------------- run

def test_run_experiment_writes_artifacts(tmp_path):
    out = tmp_path / "run1"
    cfg = ExperimentConfig(problem="rosenbrock", method="gdpolyak",
                           eta=0.0125, K=100, I=50, init_radius=0.5, seed=0,
                           out_dir=str(out))
    run_experiment(cfg)
    csv_text = (out / "trace.csv").read_text()
    lines = csv_text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) - 1 == 50 * 101
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["grad_evals"] == 50 * 101
    assert ExperimentConfig.from_dict(manifest["config"]) == cfg


def test_run_experiment_deterministic(tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        cfg = ExperimentConfig(problem="factorization", method="gdpolyak",
                               eta=0.05, K=20, I=10, init_radius=0.1, seed=5,
                               out_dir=str(out),
                               problem_params={"d": 5, "r": 2, "k": 3})
        run_experiment(cfg)
        outs.append((out / "trace.csv").read_bytes())
    assert outs[0] == outs[1]


def test_run_quartic_final_gap_formula():
    # eta = 0, K = 1: epoch-end iterates contract by 3/4, so the final gap
    # is (0.75)^(4 I) / 4 * x0^4.
    cfg = ExperimentConfig(problem="quartic1d", method="gdpolyak", eta=0.0,
                           K=1, I=40, init_radius=1.0, seed=0)
    trace = run_experiment(cfg)
    x0 = 1.0
    expected = 0.25 * 0.75 ** (4 * 40) * x0 ** 4
    assert trace.epoch_end_gaps[-1] == pytest.approx(expected, rel=1e-9)


def test_run_records_distances(tmp_path):
    out = tmp_path / "dist"
    cfg = ExperimentConfig(problem="rosenbrock", method="gdpolyak", eta=0.01,
                           K=5, I=4, init_radius=0.3, seed=1,
                           out_dir=str(out), record_distances=True)
    trace = run_experiment(cfg)
    assert all(r.dist_solution is not None for r in trace.records)
    assert all(r.dist_ravine is not None for r in trace.records)
    lines = (out / "trace.csv").read_text().strip().split("\n")
    assert lines[1].count(",") == 7
    assert not lines[1].endswith(",")


def test_run_experiment_lb_manifest(tmp_path):
    out = tmp_path / "lb"
    cfg = ExperimentConfig(problem="quartic1d", method="gdpolyak_lb",
                           eta=0.0, K=1, I=10, J=5, f_lb=-1.0,
                           init_radius=1.0, seed=0, out_dir=str(out))
    trace = run_experiment(cfg)
    assert trace.grad_evals == 5 * 10 * 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["f_estimates"]) == 5
    assert len(manifest["round_values"]) == 5
    assert manifest["aborted_rounds"] == []
    # Flattened epoch indices cover rounds consecutively.
    lines = (out / "trace.csv").read_text().strip().split("\n")[1:]
    epochs = [int(line.split(",")[1]) for line in lines]
    assert epochs[0] == 1 and epochs[-1] == 50


def test_csv_optional_columns_empty_not_absent():
    cfg = ExperimentConfig(problem="quartic1d", method="gd", eta=0.1, K=2,
                           I=2, init_radius=0.5, seed=0)
    trace = run_experiment(cfg)
    lines = trace_to_csv(trace).strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert lines[1].endswith(",,")


# --------------------------------------------------------------------- fit

def test_fit_exact_geometric_sequence():
    gaps = 2.0 ** -np.arange(1, 31)
    slope, r2 = fit_linear_rate(_synthetic_trace(gaps), burn_in=1)
    assert slope == pytest.approx(-math.log(2.0), rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_constant_gaps_zero_slope():
    slope, r2 = fit_linear_rate(_synthetic_trace(np.full(20, 0.5)), burn_in=1)
    assert slope == pytest.approx(0.0, abs=1e-15)
    assert r2 == 1.0


def test_fit_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_linear_rate(_synthetic_trace([0.5, 0.4, 0.3]), burn_in=1)


def test_fit_drops_converged_gaps():
    gaps = np.concatenate([2.0 ** -np.arange(1, 21), np.full(5, 1e-31)])
    slope, _ = fit_linear_rate(_synthetic_trace(gaps), burn_in=1)
    assert slope == pytest.approx(-math.log(2.0), rel=1e-12)


def test_fit_quartic_rate():
    cfg = ExperimentConfig(problem="quartic1d", method="gdpolyak", eta=0.0,
                           K=1, I=30, init_radius=1.0, seed=0)
    trace = run_experiment(cfg)
    slope, r2 = fit_linear_rate(trace, burn_in=5)
    assert slope == pytest.approx(4.0 * math.log(0.75), abs=1e-6)
    assert r2 >= 1.0 - 1e-12


# ----------------------------------------------------------------- compare

def test_compare_equal_budgets(tmp_path):
    cfg = ExperimentConfig(problem="quartic1d", eta=0.05, K=4, I=10,
                           init_radius=1.0, seed=2,
                           out_dir=str(tmp_path / "cmp"))
    table = compare_methods(cfg)
    budgets = {row["method"]: row["grad_evals"] for row in table.rows}
    assert budgets["gd"] == budgets["polyak"] == budgets["gdpolyak"] == 10 * 5
    assert (tmp_path / "cmp" / "comparison.csv").exists()
    assert (tmp_path / "cmp" / "gdpolyak" / "trace.csv").exists()


def test_compare_includes_lb_when_configured():
    cfg = ExperimentConfig(problem="quartic1d", eta=0.0, K=1, I=10, J=4,
                           f_lb=-1.0, init_radius=1.0, seed=2)
    table = compare_methods(cfg)
    methods = [row["method"] for row in table.rows]
    assert methods == ["gd", "polyak", "gdpolyak", "gdpolyak_lb"]
    lb_row = table.rows[-1]
    assert lb_row["grad_evals"] == 4 * 10 * 2


def test_compare_rosenbrock_separation_desk_scale():
    cfg = ExperimentConfig(problem="rosenbrock", eta=0.0125, K=100, I=25,
                           init_radius=0.5, seed=0)
    table = compare_methods(cfg)
    rows = {row["method"]: row for row in table.rows}
    assert rows["gdpolyak"]["best_gap"] <= 1e-3 * rows["gd"]["best_gap"]
    assert rows["gdpolyak"]["slope"] < 0


def test_compare_quartic_polyak_also_linear():
    # Without a genuine ravine the every-step Polyak baseline contracts by
    # 3/4 per step, so both adaptive methods show clean linear fits.
    cfg = ExperimentConfig(problem="quartic1d", eta=0.0, K=1, I=30,
                           init_radius=1.0, seed=0)
    table = compare_methods(cfg)
    rows = {row["method"]: row for row in table.rows}
    for method in ("polyak", "gdpolyak"):
        assert rows[method]["slope"] < 0
        assert rows[method]["r2"] >= 0.99


# ---------------------------------------------------------------- diagnose

def test_diagnose_rosenbrock_suite(tmp_path):
    ok, reports = diagnose("rosenbrock", ["ravine", "aiming", "morse"],
                           n_samples=100, radius=0.1, seed=0,
                           out_dir=str(tmp_path))
    assert ok
    assert reports["ravine"].measured_upper == pytest.approx(10.0, rel=1e-9)
    assert reports["aiming"].measured_upper == pytest.approx(20.0, rel=1e-9)
    assert reports["morse"].measured_upper <= 1e-10
    for name in ("ravine", "aiming", "morse"):
        data = json.loads((tmp_path / "reports" / f"{name}.json").read_text())
        assert data["pass"] is True


def test_diagnose_factorization_growth():
    ok, reports = diagnose("factorization", ["growth"], n_samples=200,
                           radius=0.05, seed=0,
                           problem_params={"d": 5, "r": 2, "k": 3})
    assert ok
    assert reports["growth"].extras["bracket_ok"]


def test_diagnose_circle_morse_residual():
    ok, reports = diagnose("circle", ["morse"], seed=0)
    assert ok
    assert reports["morse"].measured_upper <= 1e-6


def test_diagnose_rejects_unsupported_pair():
    with pytest.raises(UnsupportedCheck):
        diagnose("quartic1d", ["ravine"])
    with pytest.raises(UnsupportedCheck):
        diagnose("rosenbrock", ["rip"])


def test_diagnose_rejects_empty_suite():
    with pytest.raises(ValueError):
        diagnose("rosenbrock", [])


# --------------------------------------------------------------------- CLI

def test_cli_run_and_files(tmp_path):
    out = tmp_path / "cli_run"
    rc = main(["run", "--problem", "quartic1d", "--method", "gdpolyak",
               "--eta", "0", "--K", "1", "--I", "10", "--init-radius", "1.0",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    assert (out / "trace.csv").exists()
    assert (out / "config.json").exists()
    assert (out / "manifest.json").exists()


def test_cli_config_file_with_flag_override(tmp_path):
    config_file = tmp_path / "cfg.json"
    config_file.write_text(json.dumps({
        "problem": "quartic1d", "method": "gdpolyak", "eta": 0.0,
        "K": 1, "I": 5, "init_radius": 1.0, "seed": 0,
    }))
    out = tmp_path / "cli_cfg"
    rc = main(["run", "--config", str(config_file), "--I", "7",
               "--out", str(out)])
    assert rc == 0
    written = json.loads((out / "config.json").read_text())
    assert written["I"] == 7          # flag wins
    assert written["K"] == 1          # file value survives


def test_cli_diagnose_exit_codes(tmp_path):
    rc = main(["diagnose", "--problem", "rosenbrock", "--suite",
               "ravine,aiming", "--samples", "50", "--radius", "0.1",
               "--seed", "0", "--out", str(tmp_path / "diag")])
    assert rc == 0
    assert (tmp_path / "diag" / "reports" / "ravine.json").exists()


def test_cli_invalid_config_exit_code(tmp_path):
    rc = main(["run", "--problem", "quartic1d", "--method", "gdpolyak",
               "--eta", "-1", "--out", str(tmp_path / "x")])
    assert rc == 2


def test_cli_morse(tmp_path):
    rc = main(["morse", "--problem", "rosenbrock", "--u-grid=-0.5:0.5:0.05",
               "--tol", "1e-12", "--out", str(tmp_path / "morse_out")])
    assert rc == 0
    data = json.loads((tmp_path / "morse_out" / "morse.json").read_text())
    errs = [row["graph_error"] for row in data["points"]]
    assert max(errs) <= 1e-10


def test_cli_compare(tmp_path):
    rc = main(["compare", "--problem", "quartic1d", "--eta", "0.05",
               "--K", "3", "--I", "8", "--init-radius", "1.0", "--seed", "1",
               "--out", str(tmp_path / "cmp")])
    assert rc == 0
    text = (tmp_path / "cmp" / "comparison.csv").read_text()
    assert text.startswith("method,final_gap,best_gap,grad_evals,slope,r2")
