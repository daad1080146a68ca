import math

import numpy as np
import pytest

from confham.core import ModelParams, PhaseState, eval_hamiltonian
from confham.errors import DomainError
from confham.transforms import (
    PolarState,
    UVState,
    cartesian_to_uv,
    cartesian_to_uv_flat,
    eval_ttw_cartesian,
    eval_ttw_polar,
    eval_uv_form,
    polar_to_cartesian,
    polar_to_cartesian_flat,
    polar_to_uv,
    symplectic_defect,
    uv_to_cartesian,
    uv_to_polar,
)

import oracles


def test_polar_examples():
    assert eval_ttw_polar(1, 0, 0, 1, PolarState(1.0, math.pi / 4, 0, 0)) == pytest.approx(0.5, abs=1e-15)
    assert eval_ttw_polar(0, 0, 0, 1, PolarState(2.0, 0.3, 1.0, 2.0)) == pytest.approx(1.0, abs=1e-15)
    val = eval_ttw_polar(1, 1, 1, 2, PolarState(1.0, math.pi / 8, 0, 0))
    assert val == pytest.approx(oracles.TTW_POLAR_EXAMPLE, rel=1e-14)


def test_polar_outside_sector():
    with pytest.raises(DomainError):
        eval_ttw_polar(1, 1, 1, 2, PolarState(1.0, 1.0, 0, 0))


def test_polar_to_cartesian_examples():
    a = polar_to_cartesian(PolarState(1.0, 0.0, 1.0, 0.0))
    assert np.allclose(a.flat(), [1, 0, 1, 0], atol=1e-16)
    b = polar_to_cartesian(PolarState(1.0, math.pi / 2, 0.0, 1.0))
    assert np.allclose(b.flat(), [0, 1, -1, 0], atol=1e-15)


def test_polar_and_cartesian_energies_agree():
    ps = PolarState(2.0, math.pi / 6, 0.3, -0.4)
    for k in (1.0, 2.0):
        w, a, b = 1.1, 0.2, 0.3
        if k == 2.0:
            ps = PolarState(2.0, math.pi / 6 / 2, 0.3, -0.4)
        ref = eval_ttw_polar(w, a, b, k, ps)
        assert eval_ttw_cartesian(w, a, b, k, polar_to_cartesian(ps)) == pytest.approx(ref, rel=1e-14)


def test_uv_examples():
    st = PhaseState([0.3, -1.2], [0.5, 0.7])
    assert np.allclose(cartesian_to_uv(1.0, st).flat(), st.flat(), atol=0)
    uv = cartesian_to_uv(2.0, PhaseState([1.0, 1.0], [0.0, 0.0]))
    assert np.allclose(uv.flat(), [0, 2, 0, 0], atol=1e-15)
    uv = cartesian_to_uv(2.0, PhaseState([1.0, 0.0], [1.0, 0.0]))
    assert np.allclose(uv.flat(), [1, 0, 0.5, 0], atol=1e-15)


def test_uv_form_examples():
    assert eval_uv_form(1, 0, 0, 1, 1, UVState(1, 1, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert eval_uv_form(1, 0, 0, 2, 1, UVState(1, 1, 1, 0)) == pytest.approx(oracles.UV_FORM_EXAMPLE, rel=1e-14)


def test_uv_form_is_the_family():
    # k^2 times the family member (n=2, k, s) with alpha/2, beta/2 and omega = w^(1/e)
    k, s, w, a, b = 1.5, 0.7, 1.3, 0.4, 0.6
    e = (s - k + 1) / k
    params = ModelParams(2, k, s, 0.0, 1, (w ** (1 / e),) * 2, (a / 2, b / 2))
    st = UVState(0.8, 1.1, 0.2, -0.5)
    ref = eval_hamiltonian(params, st.as_phase_state())
    assert eval_uv_form(w, a, b, k, s, st) == pytest.approx(k * k * ref, rel=1e-14)


@pytest.mark.parametrize("k", [1.0, 2.0, 3.0, 0.5, 1.5])
def test_chain_identity(k):
    rng = np.random.default_rng(int(10 * k))
    w, a, b = 1.2, 0.3, 0.5
    sector = math.pi / (2 * k)
    for _ in range(100):
        ps = PolarState(rng.uniform(0.5, 2), rng.uniform(0.05, 0.95) * sector, rng.uniform(-1, 1), rng.uniform(-1, 1))
        ref = eval_ttw_polar(w, a, b, k, ps)
        got = eval_uv_form(w, a, b, k, 1.0, polar_to_uv(k, ps))
        assert abs(got - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("k", [1.0, 2.0, 3.0, 0.5, 1.5])
def test_round_trip(k):
    ps = PolarState(1.3, 0.4 * math.pi / (2 * k), 0.2, -0.5)
    back = uv_to_polar(k, polar_to_uv(k, ps))
    assert np.allclose(back.flat(), ps.flat(), atol=1e-14)
    st = PhaseState([0.7, 0.4], [0.1, 0.3])
    assert np.allclose(uv_to_cartesian(k, cartesian_to_uv(k, st)).flat(), st.flat(), atol=1e-14)


def test_symplectic_defect_examples():
    point = np.array([0.4, -1.1, 0.3, 0.9])
    assert symplectic_defect(lambda z: z, point) <= 1e-12
    assert symplectic_defect(polar_to_cartesian_flat, np.array([1.3, 0.7, 0.2, -0.5]), 1e-5) <= 1e-8

    def scale(z):
        out = z.copy()
        out[:2] *= 2.0
        return out

    assert symplectic_defect(scale, point) == pytest.approx(1.0, abs=1e-9)


def test_uv_map_is_canonical():
    fn = cartesian_to_uv_flat(1.5)
    assert symplectic_defect(fn, np.array([0.9, 0.4, 0.3, -0.2])) <= 1e-8


def test_branch_cut_and_origin():
    with pytest.raises(DomainError):
        cartesian_to_uv(1.5, PhaseState([-1.0, 0.0], [0.0, 0.0]))
    with pytest.raises(DomainError):
        cartesian_to_uv(2.0, PhaseState([0.0, 0.0], [0.0, 0.0]))
    with pytest.raises(DomainError):
        PolarState(0.0, 0.0, 0.0, 0.0)
