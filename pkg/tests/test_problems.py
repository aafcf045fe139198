"""Problem objective tests: closed-form examples, gradient consistency,
instance generation and serialization."""

import json

import numpy as np
import pytest

from ravinegd import OriginSingularity, ShapeMismatch, ZeroNeuron
from ravinegd.objective import max_relative_gradient_error
from ravinegd.problems import (
    build,
    circle,
    dist_to_solution,
    factorization,
    instance_from_dict,
    instance_to_dict,
    neuron,
    quartic,
    rosenbrock,
    sample_init,
    sensing,
)
from ravinegd.ravine import measure_rip


# ---------------------------------------------------------------- quartic

def test_quartic_values():
    assert quartic.quartic_eval(0.0) == (0.0, 0.0)
    assert quartic.quartic_eval(1.0) == (0.25, 1.0)
    assert quartic.quartic_eval(-2.0) == (4.0, -8.0)


# -------------------------------------------------------------- rosenbrock

def test_rosenbrock_values():
    v, g = rosenbrock.rosenbrock_eval(0.0, 0.0)
    assert v == 0.0 and np.all(g == 0.0)
    v, g = rosenbrock.rosenbrock_eval(1.0, 1.0)
    assert v == 1.0
    assert np.allclose(g, [4.0, 0.0])
    v, g = rosenbrock.rosenbrock_eval(1.0, 0.0)
    assert v == 11.0
    assert np.allclose(g, [44.0, -20.0])


# ------------------------------------------------------------------ circle

def test_circle_values():
    v, g = circle.circle_eval(np.array([0.0, 1.0]))
    assert v == 0.0 and np.allclose(g, 0.0)
    v, _ = circle.circle_eval(np.array([0.0, 2.0]))
    assert v == pytest.approx(1.0, abs=1e-15)
    # On the circle at (1, 0): direction term ||(1,-1)||^4 = 4.
    v, _ = circle.circle_eval(np.array([1.0, 0.0]))
    assert v == pytest.approx(4.0, abs=1e-12)


def test_circle_origin_singularity():
    with pytest.raises(OriginSingularity):
        circle.circle_eval(np.array([1e-8, 1e-8]))


# ----------------------------------------------------------- factorization

@pytest.fixture(scope="module")
def fact_inst():
    return factorization.random_instance(d=5, r=2, k=3, seed=0)


def test_factorization_solution_is_zero(fact_inst):
    B = factorization.base_solution(fact_inst).reshape(5, 3)
    v, g = factorization.factorization_eval(B, fact_inst)
    assert v <= 1e-24
    assert np.linalg.norm(g) <= 1e-11


def test_factorization_diagonal_example():
    # X = e1 e1^T, B = [[1, 0], [0, t]]: value t^4, gradient [[0,0],[0,4t^3]].
    X = np.zeros((2, 2))
    X[0, 0] = 1.0
    inst = factorization.from_matrix(X, k=2)
    t = 0.3
    B = np.array([[1.0, 0.0], [0.0, t]])
    v, g = factorization.factorization_eval(B, inst)
    assert v == pytest.approx(t ** 4, rel=1e-12)
    assert np.allclose(g, [[0.0, 0.0], [0.0, 4.0 * t ** 3]], atol=1e-14)


def test_factorization_origin_saddle(fact_inst):
    B = np.zeros((5, 3))
    v, g = factorization.factorization_eval(B, fact_inst)
    assert v == pytest.approx(np.sum(fact_inst.X ** 2), rel=1e-12)
    assert np.all(g == 0.0)


def test_factorization_shape_mismatch(fact_inst):
    with pytest.raises(ShapeMismatch):
        factorization.factorization_eval(np.zeros((4, 3)), fact_inst)


def test_factorization_instance_invariants(fact_inst):
    X, L = fact_inst.X, fact_inst.L
    assert np.linalg.norm(L @ L.T - X) <= 1e-10 * np.linalg.norm(X)
    assert fact_inst.evals[fact_inst.r:].max() <= 1e-10 * fact_inst.sigma1
    assert fact_inst.sigma1 == pytest.approx(1.0, rel=1e-12)


# ----------------------------------------------------------------- sensing

@pytest.fixture(scope="module")
def sens_inst():
    return sensing.make_sensing_instance(d=8, r=2, k=3, m=120, seed=3)


def test_sensing_targets_consistent(sens_inst):
    y = sens_inst.A.reshape(sens_inst.m, -1) @ sens_inst.fac.X.reshape(-1)
    assert np.allclose(y, sens_inst.y, rtol=1e-10)


def test_sensing_zero_at_solution(sens_inst):
    B = sensing.base_solution(sens_inst).reshape(8, 3)
    v, g = sensing.sensing_eval(B, sens_inst)
    assert v <= 1e-20
    assert np.linalg.norm(g) <= 1e-9


def test_sensing_scalar_case():
    # d = k = r = 1 with a single measurement A = [[1]], X = [[1]]:
    # f(t) = (1 - t^2)^2, f'(t) = -4 t (1 - t^2).
    inst = sensing.from_operator(
        factorization.from_matrix(np.array([[1.0]]), k=1),
        np.array([[[1.0]]]))
    for t in (0.3, 1.7):
        v, g = sensing.sensing_eval(np.array([[t]]), inst)
        assert v == pytest.approx((1 - t ** 2) ** 2, rel=1e-12)
        assert g[0, 0] == pytest.approx(-4 * t * (1 - t ** 2), rel=1e-12)


def test_sensing_determinism():
    a = sensing.make_sensing_instance(d=6, r=2, k=3, m=40, seed=11)
    b = sensing.make_sensing_instance(d=6, r=2, k=3, m=40, seed=11)
    assert np.array_equal(a.A, b.A)
    assert np.array_equal(a.y, b.y)
    assert np.array_equal(a.fac.X, b.fac.X)


def test_sensing_factorization_proportional():
    # Complete orthonormal measurements make the two objectives coincide.
    fac = factorization.random_instance(d=4, r=2, k=3, seed=5)
    inst = sensing.complete_sensing_instance(fac)
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(20):
        B = rng.standard_normal((4, 3))
        vs, _ = sensing.sensing_eval(B, inst)
        vf, _ = factorization.factorization_eval(B, fac)
        ratios.append(vs / vf)
    ratios = np.array(ratios)
    assert np.all(np.abs(ratios - ratios[0]) <= 1e-8 * np.abs(ratios[0]))


def test_rip_full_rank_instance():
    # Well-conditioned measurement counts keep the empirical constant small.
    d = 6
    inst = sensing.make_sensing_instance(d=d, r=d, k=d, m=10 * d * d, seed=2)
    delta = measure_rip(inst, rank_l=d, trials=100, seed=0)
    assert delta < 0.5


def test_rip_parseval_identity():
    fac = factorization.random_instance(d=5, r=2, k=3, seed=7)
    inst = sensing.complete_sensing_instance(fac)
    delta = measure_rip(inst, rank_l=5, trials=50, seed=1)
    assert delta <= 1e-10


# ------------------------------------------------------------------ neuron

@pytest.fixture(scope="module")
def neuron_inst():
    return neuron.make_neuron_instance(d=5, seed=4)


def test_neuron_zero_on_balanced_split(neuron_inst):
    v = neuron_inst.v
    val, grad = neuron.neuron_eval(v / 2, v / 2, neuron_inst)
    assert abs(val) <= 1e-15
    assert np.linalg.norm(grad) <= 1e-12


def test_neuron_duplicated_teacher(neuron_inst):
    # w1 = w2 = v: every angle vanishes and only the misfit term remains.
    v = neuron_inst.v
    val, _ = neuron.neuron_eval(v, v, neuron_inst)
    assert val == pytest.approx(0.25 * float(v @ v), rel=1e-12)


def test_neuron_swap_symmetry(neuron_inst):
    rng = np.random.default_rng(1)
    w1 = neuron_inst.v / 2 + 0.1 * rng.standard_normal(5)
    w2 = neuron_inst.v / 2 + 0.1 * rng.standard_normal(5)
    v12, g12 = neuron.neuron_eval(w1, w2, neuron_inst)
    v21, g21 = neuron.neuron_eval(w2, w1, neuron_inst)
    assert v12 == v21
    assert np.allclose(g12[:5], g21[5:], atol=1e-15)
    assert np.allclose(g12[5:], g21[:5], atol=1e-15)


def test_neuron_zero_weight_raises(neuron_inst):
    with pytest.raises(ZeroNeuron):
        neuron.neuron_eval(np.zeros(5), neuron_inst.v, neuron_inst)


def test_neuron_monte_carlo_consistency(neuron_inst):
    rng = np.random.default_rng(9)
    v = neuron_inst.v
    for trial in range(3):
        w1 = v / 2 + 0.1 * rng.standard_normal(5)
        w2 = v / 2 + 0.1 * rng.standard_normal(5)
        closed, _ = neuron.neuron_eval(w1, w2, neuron_inst)
        mc, se = neuron.monte_carlo_value(w1, w2, neuron_inst, 200_000,
                                          seed=100 + trial)
        assert abs(closed - mc) <= 5.0 * se


def test_neuron_dist_proxy(neuron_inst):
    v = neuron_inst.v
    assert neuron.neuron_dist_proxy(v / 2, v / 2, neuron_inst) <= 1e-15
    u = np.zeros(5)
    u[np.argmin(np.abs(v))] = 1.0
    u = u - (u @ v) / (v @ v) * v
    u /= np.linalg.norm(u)
    # w1 = v, w2 = 0.1 u: misfit ||0.1 u|| plus perpendicular part 0.1.
    proxy = neuron.neuron_dist_proxy(v, 0.1 * u, neuron_inst)
    assert proxy == pytest.approx(0.2, rel=1e-12)


# ------------------------------------------------- shared objective checks

ALL_PROBLEMS = ["quartic1d", "rosenbrock", "circle", "factorization",
                "sensing", "neuron"]

SMALL_PARAMS = {
    "factorization": {"d": 5, "r": 2, "k": 3},
    "sensing": {"d": 8, "r": 2, "k": 3, "m": 240},
    "neuron": {"d": 6},
}


@pytest.fixture(scope="module")
def bundles():
    return {name: build(name, SMALL_PARAMS.get(name)) for name in ALL_PROBLEMS}


@pytest.mark.parametrize("name", ALL_PROBLEMS)
def test_gradient_matches_finite_differences(bundles, name):
    bundle = bundles[name]
    points = [sample_init(bundle, 0.05, seed) for seed in range(15)]
    assert max_relative_gradient_error(bundle.objective, points) <= 1e-5


@pytest.mark.parametrize("name", ALL_PROBLEMS)
def test_values_nonnegative(bundles, name):
    bundle = bundles[name]
    for seed in range(30):
        x = sample_init(bundle, 0.2, seed)
        assert bundle.objective.eval(x) >= -1e-10


@pytest.mark.parametrize("name", ALL_PROBLEMS)
def test_sample_init_radius_and_determinism(bundles, name):
    bundle = bundles[name]
    x1 = sample_init(bundle, 0.03, 7)
    x2 = sample_init(bundle, 0.03, 7)
    assert np.array_equal(x1, x2)
    base = bundle.base_solution
    assert np.linalg.norm(x1 - base) == pytest.approx(0.03, abs=1e-12)


@pytest.mark.parametrize("name", ALL_PROBLEMS)
def test_solution_certification(bundles, name):
    # Distance zero implies (near-)zero value on constructed solutions,
    # at a tolerance scaled by the instance magnitude.
    bundle = bundles[name]
    if name in ("factorization", "sensing"):
        X = (bundle.instance.X if name == "factorization"
             else bundle.instance.fac.X)
        scale = float(np.sum(X * X))
    elif name == "neuron":
        scale = float(bundle.instance.v @ bundle.instance.v)
    else:
        scale = 0.0
    tol = 1e-18 * (1.0 + scale)
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = bundle.sample_solution(rng)
        assert dist_to_solution(s, bundle) <= 1e-7
        assert bundle.objective.eval(s) <= tol


def test_dist_to_solution_examples(bundles):
    q = bundles["quartic1d"]
    assert dist_to_solution(np.array([-3.0]), q) == 3.0
    X = np.zeros((2, 2))
    X[0, 0] = 1.0
    inst = factorization.from_matrix(X, k=2)
    B = np.array([[1.0, 0.0], [0.0, 0.4]])
    assert factorization.dist_to_solution(B, inst) == pytest.approx(0.4,
                                                                    rel=1e-12)


def test_sample_init_factorization_distance(bundles):
    bundle = bundles["factorization"]
    x = sample_init(bundle, 0.01, 5)
    assert dist_to_solution(x, bundle) <= 0.01 + 1e-10


# ------------------------------------------------------------ serialization

def test_factorization_roundtrip(fact_inst):
    data = json.loads(json.dumps(instance_to_dict(fact_inst)))
    back = instance_from_dict(data)
    assert np.array_equal(back.X, fact_inst.X)
    assert np.array_equal(back.L, fact_inst.L)
    assert (back.d, back.k, back.r) == (fact_inst.d, fact_inst.k, fact_inst.r)


def test_sensing_roundtrip(sens_inst):
    data = json.loads(json.dumps(instance_to_dict(sens_inst)))
    back = instance_from_dict(data)
    assert np.array_equal(back.A, sens_inst.A)
    assert np.array_equal(back.y, sens_inst.y)
    assert back.op_scale == sens_inst.op_scale
    B = np.ones((8, 3)) * 0.2
    assert sensing.sensing_eval(B, back)[0] == sensing.sensing_eval(
        B, sens_inst)[0]


def test_neuron_roundtrip(neuron_inst):
    data = json.loads(json.dumps(instance_to_dict(neuron_inst)))
    back = instance_from_dict(data)
    assert np.array_equal(back.v, neuron_inst.v)
    assert back.d == neuron_inst.d and back.n == neuron_inst.n
