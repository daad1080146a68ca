import math

import numpy as np
import pytest
import scipy.sparse as sp

from confham.catalog import instantiate_reduction
from confham.core import ModelParams
from confham.errors import DomainError, ParameterError
from confham.quantum import (
    GridSpec,
    build_operator_parts,
    build_weighted_operator,
    compute_spectrum,
    degeneracy_report,
    fit_ladder,
    generalized_eigenvalues,
    lowest_eigenvalues,
    rosochatius_levels,
)

import oracles

OSC1 = ModelParams(1, 1.0, 1.0)
OSC2 = ModelParams(2, 1.0, 1.0)


def test_k1_operator_is_flat():
    grid = GridSpec(2, ((-3, 3), (-2, 4)), (12, 10))
    A, f = build_operator_parts(OSC2, grid)
    M = build_weighted_operator(OSC2, grid)
    assert np.all(f == 1.0)
    assert (M != A).nnz == 0


def test_weighted_operator_is_exactly_symmetric():
    params = ModelParams(2, 2.0, 1.0, 0.5, 1, (1.0, 1.0), (0.2, 0.3))
    M = build_weighted_operator(params, GridSpec(2, ((0, 3), (0, 3)), (15, 17)))
    assert abs(M - M.T).max() == 0.0


def test_harmonic_ground_state():
    vals = lowest_eigenvalues(build_weighted_operator(OSC1, GridSpec(1, ((-8, 8),), (401,))), 3)
    assert abs(vals[0] - 0.5) <= 1e-4
    assert np.allclose(vals, [0.5, 1.5, 2.5], atol=1e-3)


def test_diagonal_matrix():
    vals = lowest_eigenvalues(sp.diags([3.0, 1.0, 2.0]).tocsr(), 2)
    assert np.allclose(vals, [1.0, 2.0], atol=1e-14)


def test_particle_in_a_box():
    free = ModelParams(1, 1.0, 1.0, omegas=(0.0,))
    vals = lowest_eigenvalues(build_weighted_operator(free, GridSpec(1, ((0, math.pi),), (200,))), 2)
    assert abs(vals[0] - 0.5) <= 1e-4


def test_two_dimensional_oscillator():
    res = compute_spectrum(OSC2, GridSpec(2, ((-8, 8), (-8, 8)), (121, 121)), 6, cluster_tol=5e-2)
    assert np.allclose(res.eigenvalues, [1, 2, 2, 3, 3, 3], atol=2e-2)
    assert [m for _, m in res.clusters] == [1, 2, 3]
    assert res.cluster_ids() == [0, 1, 1, 2, 2, 2]


def test_degeneracy_examples():
    assert [m for _, m in degeneracy_report([1, 2, 2 + 1e-9, 3], 1e-6)] == [1, 2, 1]
    assert degeneracy_report([], 1e-6) == []


def test_grid_refinement_converges():
    errs = []
    for m in (100, 200, 400):
        v = lowest_eigenvalues(build_weighted_operator(OSC1, GridSpec(1, ((-8, 8),), (m,))), 1)[0]
        errs.append(abs(v - 0.5))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


@pytest.mark.parametrize("alpha", [1.0, 0.3])
def test_rosochatius_half_line(alpha):
    params = ModelParams(1, 1.0, 1.0, alphas=(alpha,))
    vals = lowest_eigenvalues(build_weighted_operator(params, GridSpec(1, ((0, 10),), (4000,))), 5)
    assert np.allclose(np.diff(vals), 2.0, atol=1e-2)
    assert np.allclose(vals, oracles.ROSOCHATIUS_SHOOTING[alpha], atol=1e-3)
    assert np.allclose(rosochatius_levels(1.0, alpha, 5), oracles.ROSOCHATIUS_SHOOTING[alpha], atol=1e-9)


def test_sw2_ladder():
    params = instantiate_reduction("sw2", {"omega": 1.0, "beta": 0.1}).params
    vals = lowest_eigenvalues(build_weighted_operator(params, GridSpec(2, ((-5, 5), (0, 8)), (121, 121))), 10)
    fit = fit_ladder(vals)
    assert fit.residual <= 2e-2
    assert sorted([fit.a, fit.b]) == pytest.approx([2.0, 2.0], abs=2e-2)


def test_weighted_and_generalized_agree():
    params = ModelParams(1, 2.0, 1.0, 0.5, 1, (1.0,), (0.0,))
    grid = GridSpec(1, ((-4, 4),), (30,))
    a = lowest_eigenvalues(build_weighted_operator(params, grid), 4)
    b = generalized_eigenvalues(params, grid, 4)
    assert np.allclose(a, b, rtol=1e-11)


def test_ladder_fit_on_exact_lattice():
    vals = sorted(1.0 + 2.0 * i + 3.0 * j for i in range(4) for j in range(4))[:8]
    fit = fit_ladder(vals)
    assert fit.residual <= 1e-12
    assert sorted([fit.a, fit.b]) == pytest.approx([2.0, 3.0])


def test_grid_validation():
    with pytest.raises(ParameterError):
        GridSpec(3, ((0, 1),) * 3, (10,) * 3)
    with pytest.raises(ParameterError):
        GridSpec(1, ((0, 1),), (4,))
    with pytest.raises(ParameterError):
        GridSpec(1, ((1, 0),), (10,))
    barrier = ModelParams(1, 1.0, 1.0, alphas=(0.5,))
    with pytest.raises(DomainError):
        build_weighted_operator(barrier, GridSpec(1, ((-1, 1),), (10,)))
    with pytest.raises(ParameterError):
        lowest_eigenvalues(sp.identity(4, format="csr"), 5)


def test_spectrum_exports():
    res = compute_spectrum(OSC1, GridSpec(1, ((-8, 8),), (101,)), 3)
    lines = res.to_csv().splitlines()
    assert lines[0] == "index,eigenvalue,cluster_id"
    assert len(lines) == 4
    head = res.header()
    assert head["grid"]["points"] == [101]
    assert head["qparams"]["n"] == 1
