import math
from itertools import product

import numpy as np
import pytest

from confham.core import ModelParams, PhaseState, random_admissible_state
from confham.dynamics import integrate
from confham.errors import ParameterError
from confham.observables import (
    Observable,
    all_rosochatius,
    angular_momentum,
    angular_rosochatius_integral,
    bracket_observable,
    bracket_report,
    coordinate,
    hamiltonian_observable,
    independence_rank,
    momentum,
    observable_from_id,
    poisson_bracket,
    polar_phase_state,
    ttw_polar_observable,
    ttw_second_integral,
    ttw_second_observable,
)
from confham.probes import conservation_drift
from confham.transforms import PolarState

import oracles


def _points(params, n, seed=3):
    rng = np.random.default_rng(seed)
    return [random_admissible_state(params, rng) for _ in range(n)]


def test_canonical_pair():
    st = PhaseState([0.7, 1.3], [0.2, -0.4])
    assert poisson_bracket(coordinate(0, 2), momentum(0, 2), st) == 1.0
    assert poisson_bracket(coordinate(0, 2), momentum(1, 2), st) == 0.0


def test_h_with_itself_vanishes():
    params = ModelParams(2, 1.5, 0.5, 0.3, 1, (1.0, 1.0), (0.2, 0.1))
    H = hamiltonian_observable(params)
    for st in _points(params, 10):
        assert abs(poisson_bracket(H, H, st)) <= 1e-14


def test_angular_momentum_commutes_with_isotropic_oscillator():
    params = ModelParams(2, 1.0, 1.0, 0.0, 1, (1.0, 1.0))
    H = hamiltonian_observable(params)
    L = angular_momentum(0, 1, 2)
    for st in _points(params, 20):
        assert abs(poisson_bracket(L, H, st)) <= 1e-12


def test_rosochatius_integral_values():
    params = ModelParams(2, 2.0, 1.0, alphas=(0.0, 0.0))
    st = PhaseState([0.8, 1.7], [0.3, -0.6])
    lij = 0.8 * -0.6 - 1.7 * 0.3
    assert angular_rosochatius_integral(0, 1, params, st) == pytest.approx(lij**2, rel=1e-15)
    params = ModelParams(2, 2.0, 1.0, alphas=(1.0, 1.0))
    assert angular_rosochatius_integral(0, 1, params, PhaseState([1.0, 1.0], [0.0, 0.0])) == 4.0


def test_rosochatius_requires_equal_frequencies():
    params = ModelParams(2, 1.0, 1.0, omegas=(1.0, 2.0))
    with pytest.raises(ParameterError):
        angular_rosochatius_integral(0, 1, params, PhaseState([1.0, 1.0], [0.0, 0.0]))


def test_rosochatius_conserved_along_trajectory():
    params = ModelParams(3, 2.0, 1.0, 0.5, 1, (1.0, 1.0, 1.0), (0.3, 0.4, 0.5))
    traj = integrate(params, PhaseState([1.0, 1.1, 0.9], [0.2, -0.3, 0.1]), 10.0, 1e-3, "midpoint4")
    assert len(traj) == 10001
    assert conservation_drift(traj, observable_from_id("K_12", params), stride=10) <= 1e-8


@pytest.mark.parametrize("k, s, gamma", list(product([0.5, 1.0, 2.0], [-0.5, 0.0, 1.0], [0.0, 1.0])))
def test_brackets_vanish_on_grid(k, s, gamma):
    params = ModelParams(3, k, s, gamma, 1, (1.3, 1.3, 1.3), (0.2, 0.3, 0.4))
    H = hamiltonian_observable(params)
    pts = _points(params, 15, seed=int(100 * k + 10 * s + gamma))
    for K in all_rosochatius(params):
        assert bracket_report(H, K, pts).max_relative <= 1e-10


def test_unequal_frequencies_break_the_bracket():
    params = ModelParams(2, 1.0, 1.0, 0.0, 1, (1.0, 2.0), (0.2, 0.3))
    H = hamiltonian_observable(params)
    K = Observable("K_12", 2, lambda x, p: (x[0] * p[1] - x[1] * p[0]) ** 2)
    assert bracket_report(H, K, _points(params, 20)).max_abs_bracket > 1e-3


def test_second_ttw_integral():
    st = PolarState(1.3, 0.4, 0.2, 0.7)
    assert ttw_second_integral(2.0, 0.0, 0.0, st) == pytest.approx(0.49, rel=1e-15)
    val = ttw_second_integral(2.0, 1.0, 1.0, PolarState(1.0, math.pi / 8, 0.0, 0.0))
    assert val == pytest.approx(oracles.TTW_X_EXAMPLE, rel=1e-14)


def test_second_ttw_integral_commutes():
    k, w, a, b = 2.0, 1.2, 0.3, 0.5
    H = ttw_polar_observable(w, a, b, k)
    X = ttw_second_observable(k, a, b)
    rng = np.random.default_rng(9)
    for _ in range(20):
        ps = PolarState(rng.uniform(0.5, 2), rng.uniform(0.1, 0.9) * math.pi / (2 * k), rng.uniform(-1, 1),
                        rng.uniform(-1, 1))
        assert abs(poisson_bracket(X, H, polar_phase_state(ps))) <= 1e-12


def test_rank_examples():
    params = ModelParams(3, 1.5, 0.5, 0.2, 1, (1.1, 1.1, 1.1), (0.1, 0.2, 0.3))
    H = hamiltonian_observable(params)
    pts = _points(params, 10)
    assert independence_rank([H], params, pts) == 1
    assert independence_rank([H, H * H], params, pts) == 1
    assert independence_rank([H, *all_rosochatius(params)], params, pts) == 4


def test_jacobi_identity():
    params = ModelParams(2, 2.0, 0.5, 0.3, 1, (1.0, 1.0), (0.2, 0.1))
    f, g, h = hamiltonian_observable(params), angular_momentum(0, 1, 2), coordinate(0, 2)
    terms = [
        bracket_observable(f, bracket_observable(g, h)),
        bracket_observable(g, bracket_observable(h, f)),
        bracket_observable(h, bracket_observable(f, g)),
    ]
    for st in _points(params, 5):
        vals = [t(st) for t in terms]
        assert abs(sum(vals)) <= 1e-12 * max(1.0, max(map(abs, vals)))


def test_observable_ids():
    params = ModelParams(3, 1.0, 1.0)
    assert observable_from_id("L_13", params).id == "L_13"
    assert observable_from_id("E_2", params).id == "E_2"
    with pytest.raises(ParameterError):
        observable_from_id("Q_1", params)
    with pytest.raises(ParameterError):
        observable_from_id("K_14", params)
