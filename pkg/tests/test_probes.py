import math

import numpy as np
import pytest

from confham.catalog import instantiate_reduction
from confham.core import ModelParams, PhaseState
from confham.dynamics import Trajectory, integrate
from confham.errors import DomainError, ParameterError
from confham.observables import Observable, coordinate
from confham.probes import (
    ClosureOptions,
    closure_test,
    conservation_drift,
    draw_initial_condition,
    parameter_scan,
    radial_events,
    rational_detect,
    recurrence_profile,
    rotation_number,
)

import oracles

HARMONIC = ModelParams(2, 1.0, 1.0)


def _kepler():
    return instantiate_reduction("kepler", {"n": 2}).params


def _synthetic(r_of_t, t):
    x = np.column_stack([r_of_t(t), np.zeros_like(t)])
    return Trajectory(HARMONIC, t, x, np.zeros_like(x), "synthetic", float(t[1] - t[0]))


def test_circular_orbit_has_no_events():
    traj = integrate(_kepler(), PhaseState([1.0, 0.0], [0.0, 1.0]), 20.0, 1e-3, "midpoint4")
    ev = radial_events(traj)
    assert len(ev) == 0
    assert "circular" in ev.diagnostic


def test_synthetic_radial_minima():
    t = np.arange(0.0, 12.0, 1e-2)
    ev = radial_events(_synthetic(lambda t: 1.0 + 0.1 * np.cos(t), t))
    assert len(ev) == 2
    assert np.allclose(ev.times, [math.pi, 3 * math.pi], atol=1e-3)


def test_kepler_radial_period():
    x0, p0 = oracles.kepler_pericenter_state(1.0, 0.5)
    traj = integrate(_kepler(), PhaseState(x0, p0), 30.0, 1e-3, "midpoint4")
    periods = radial_events(traj).periods()
    assert periods.size >= 3
    assert np.max(np.abs(periods / oracles.kepler_period(1.0) - 1.0)) <= 1e-5


def test_rotation_number_oscillator():
    traj = integrate(HARMONIC, PhaseState([1.0, 0.0], [0.0, 0.5]), 40.0, 1e-3, "midpoint4")
    assert abs(rotation_number(traj) - 0.5) <= 1e-6


def test_rotation_number_kepler_both_senses():
    for sign in (1.0, -1.0):
        x0, p0 = oracles.kepler_pericenter_state(1.0, 0.5)
        p0 = [p0[0], sign * p0[1]]
        traj = integrate(_kepler(), PhaseState(x0, p0), 30.0, 1e-3, "midpoint4")
        assert abs(rotation_number(traj) - 1.0) <= 1e-6


def test_rotation_number_ttw_k2_is_rational():
    entry = instantiate_reduction("ttw", {"k": 2})
    traj = integrate(entry.params, entry.default_initial(), 60.0, 2.5e-3, "midpoint4")
    nu = rotation_number(traj)
    pq = rational_detect(nu, 8, 1e-4)
    assert pq is not None
    assert abs(nu - pq[0] / pq[1]) <= 1e-4


def test_rotation_number_needs_events():
    traj = integrate(HARMONIC, PhaseState([1.0, 0.0], [0.0, 0.5]), 1.0, 1e-3)
    with pytest.raises(DomainError):
        rotation_number(traj)


def test_rational_detect_examples():
    assert rational_detect(0.5, 10, 1e-9) == (1, 2)
    assert rational_detect(math.pi, 50, 1e-9) is None
    assert rational_detect(0.3333333333, 10, 1e-6) == (1, 3)
    assert rational_detect(math.sqrt(2) / 2, 12, 1e-4) is None
    with pytest.raises(ParameterError):
        rational_detect(0.5, 0, 1e-3)


def test_recurrence_profile_oscillator():
    traj = integrate(HARMONIC, PhaseState([1.0, 0.0], [0.0, 0.5]), 30.0, 1e-3, "midpoint4")
    prof = recurrence_profile(traj, math.pi, q_max=4)
    assert [q for q, _ in prof] == [1, 2, 3, 4]
    # half a period maps z to -z, so only even multiples of the radial period recur
    for q, d in prof:
        assert (d <= 1e-8) if q % 2 == 0 else (d > 1.0)


def test_closure_kepler():
    x0, p0 = oracles.kepler_pericenter_state(1.0, 0.5)
    rep = closure_test(_kepler(), PhaseState(x0, p0))
    assert rep.verdict == "closed"
    assert rep.rational == (1, 1)
    assert rep.bounded


def test_closure_oscillator():
    rep = closure_test(HARMONIC, PhaseState([1.0, 0.2], [0.1, 0.6]))
    assert rep.verdict == "closed"
    assert rep.rational == (1, 2)


def test_closure_irrational_ttw_is_open():
    entry = instantiate_reduction("ttw", {"k": math.sqrt(2)})
    rep = closure_test(entry.params, entry.default_initial())
    assert rep.verdict == "open"
    assert rep.rational is None


def test_unbounded_orbit_is_reported():
    free = ModelParams(2, 1.0, 1.0, omegas=(0.0, 0.0), alphas=(0.1, 0.1))
    rep = closure_test(free, PhaseState([1.0, 1.0], [0.5, 0.5]))
    assert not rep.bounded
    assert rep.verdict != "closed"


def test_report_serializes():
    rep = closure_test(HARMONIC, PhaseState([1.0, 0.2], [0.1, 0.6]))
    d = rep.to_dict()
    assert d["rational"] == "1/2"
    assert d["verdict"] == "closed"


def test_conservation_drift_examples():
    traj = integrate(HARMONIC, PhaseState([1.0, 0.2], [0.1, 0.6]), 20.0, 1e-3)
    assert conservation_drift(traj, "H") <= 1e-10
    assert conservation_drift(traj, Observable("c", 2, lambda x, p: 3.0), stride=100) == 0.0
    assert conservation_drift(traj, coordinate(0, 2), stride=10) > 0.5


def test_seeded_draws_are_reproducible():
    kep = _kepler()
    a = draw_initial_condition(kep, np.random.default_rng(4))
    b = draw_initial_condition(kep, np.random.default_rng(4))
    assert np.array_equal(a.flat(), b.flat())
    assert a.x.min() >= 0.6 and a.x.max() <= 1.6


def test_small_scan_and_csv():
    template = ModelParams(2, 1.0, 1.0, 0.0, 1, (1.0, 1.0), (0.05, 0.05))
    opts = ClosureOptions(n_periods=20)
    table = parameter_scan(template, [1.0, 2.0], [1.0], 3, 5, opts)
    lines = table.to_csv().splitlines()
    assert lines[0] == "k,s,closure_fraction,n_samples,mean_recurrence"
    assert len(lines) == 3
    assert table.cell(1.0, 1.0).closure_fraction == 1.0
    assert table.cell(2.0, 1.0).closure_fraction == 1.0
    again = parameter_scan(template, [1.0, 2.0], [1.0], 3, 5, opts)
    assert again.to_csv() == table.to_csv()


def test_scan_rejects_empty_grid():
    with pytest.raises(ParameterError):
        parameter_scan(HARMONIC, [], [1.0], 3, 0)
