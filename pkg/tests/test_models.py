import numpy as np
import pytest

from semilat.errors import InputError, RootFindError
from semilat.models import (EnergyLevel, PhasePoint, evaluate_joint_symbol,
                            find_level_point, gradient_fd_error, make_system,
                            poisson_bracket, seed_level_points,
                            validate_regular_proper)

ALL_MODELS = [
    ("ho1d", {}),
    ("ho2d", {}),
    ("ho2d_hl", {}),
    ("aniso_ho", {"omega": np.sqrt(2.0)}),
    ("central_quartic", {"lam": 0.1}),
]


def random_points(sys, rng, n=20):
    pts = []
    for _ in range(n):
        z = rng.normal(0.0, 1.0, size=2 * sys.n)
        z[:sys.n] += 0.5  # keep central-model points away from the axis
        pts.append(PhasePoint(z[:sys.n], z[sys.n:]))
    return pts


def test_symbol_values_ho1d():
    sys = make_system("ho1d")
    p = PhasePoint(np.array([1.0]), np.array([0.0]))
    assert np.allclose(sys.q0(p), [0.5])
    p = PhasePoint(np.array([0.0]), np.array([1.0]))
    assert np.allclose(sys.q0(p), [0.5])


def test_symbol_values_hl():
    sys = make_system("ho2d_hl")
    p = PhasePoint(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    # H = (|x|^2+|xi|^2)/2 = 1, L = x1 xi2 - x2 xi1 = 1
    assert np.allclose(sys.q0(p), [1.0, 1.0])


def test_symbol_values_central():
    sys = make_system("central_quartic", params={"lam": 0.1})
    p = PhasePoint(np.array([1.0, 0.0]), np.array([0.0, 2.0]))
    # |xi|^2 + r^2 + lam r^4 = 4 + 1 + 0.1, L = 2
    assert np.allclose(sys.q0(p), [5.1, 2.0])


@pytest.mark.parametrize("name,params", ALL_MODELS)
def test_gradients_match_finite_differences(name, params):
    sys = make_system(name, params=params)
    rng = np.random.default_rng(3)
    assert gradient_fd_error(sys, rng, n_points=50) < 1e-6


@pytest.mark.parametrize("name,params", ALL_MODELS)
def test_poisson_commutation(name, params):
    sys = make_system(name, params=params)
    rng = np.random.default_rng(4)
    for p in random_points(sys, rng):
        for i in range(sys.k):
            for j in range(sys.k):
                assert abs(poisson_bracket(sys, p, i, j)) <= 1e-10


@pytest.mark.parametrize("name,params", ALL_MODELS)
def test_batch_evaluation_agrees_pointwise(name, params):
    sys = make_system(name, params=params)
    rng = np.random.default_rng(5)
    pts = random_points(sys, rng, n=10)
    Z = np.array([p.z for p in pts])
    q_batch = sys.q0_batch(Z)
    g_batch = sys.grad_q0_batch(Z)
    for i, p in enumerate(pts):
        assert np.allclose(q_batch[i], sys.q0(p), atol=1e-13)
        assert np.allclose(g_batch[i], sys.grad_q0(p), atol=1e-13)


def test_find_level_point_projects_onto_level():
    sys = make_system("central_quartic", params={"lam": 0.1})
    p = find_level_point(sys, [2.0, 0.5], np.array([1.0, 0.1, 0.2, 0.6]))
    assert np.linalg.norm(sys.q0(p) - [2.0, 0.5]) < 1e-10


def test_find_level_point_rejects_bad_guess():
    sys = make_system("ho1d")
    with pytest.raises(RootFindError):
        find_level_point(sys, [0.5], np.array([0.0, 0.0]), max_iter=5)


def test_seed_level_points_spread(hl):
    rng = np.random.default_rng(6)
    pts = seed_level_points(hl, [1.0, 0.3], 8, rng)
    assert len(pts) == 8
    for p in pts:
        assert np.linalg.norm(hl.q0(p) - [1.0, 0.3]) < 1e-9
    # not all identical
    Z = np.array([p.z for p in pts])
    assert np.max(np.std(Z, axis=0)) > 0.1


def test_regularity_probe_accepts_regular_level(hl, hl_point):
    level = EnergyLevel(E0=np.array([1.0, 0.3]), seed_points=[hl_point])
    rep = validate_regular_proper(hl, level)
    assert rep.ok
    assert rep.min_singular_value > 1e-3


def test_regularity_probe_flags_critical_level():
    # E0 = 0 is the equilibrium of the oscillator: gradient vanishes
    sys = make_system("ho1d")
    p = PhasePoint(np.array([0.0]), np.array([0.0]))
    level = EnergyLevel(E0=np.array([0.0]), seed_points=[p])
    rep = validate_regular_proper(sys, level, n_samples=1)
    assert not rep.ok


def test_unknown_model_rejected():
    with pytest.raises(InputError):
        make_system("nope")


def test_evaluate_joint_symbol_shape(central, central_point):
    v = evaluate_joint_symbol(central, central_point)
    assert v.shape == (2,)
