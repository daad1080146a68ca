"""Batch verification of a model: reduction identity, brackets, rank, conservation.

Each check yields one JSON-ready record with a ``pass`` flag; records marked
``gating: false`` are informational and do not affect the summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import ReductionEntry
from .core import ModelParams, PhaseState, eval_hamiltonian, random_admissible_state
from .dynamics import integrate
from .errors import ConfhamError
from .observables import (
    bracket_observable,
    bracket_report,
    bracket_with_scale,
    hamiltonian_observable,
    independence_rank,
    observable_from_id,
)
from .probes import conservation_drift
from .transforms import (
    PolarState,
    cartesian_to_uv_flat,
    eval_ttw_polar,
    eval_uv_form,
    polar_to_cartesian_flat,
    polar_to_uv,
    symplectic_defect,
)


@dataclass(frozen=True)
class VerifyOptions:
    n_points: int = 50
    seed: int = 0
    identity_tol: float = 1e-12
    bracket_tol: float = 1e-10
    drift_tol: float = 1e-8
    defect_tol: float = 1e-8
    t_max: float = 10.0
    h: float = 1e-3
    method: str = "midpoint4"
    jacobi_points: int = 5


def _points(params: ModelParams, rng: np.random.Generator, count: int) -> list[PhaseState]:
    return [random_admissible_state(params, rng) for _ in range(count)]


def _record(check: str, passed: bool, gating: bool = True, **data) -> dict:
    return {"check": check, "pass": bool(passed), "gating": gating, **data}


def _identity(entry: ReductionEntry, points, tol) -> dict:
    worst = 0.0
    for st in points:
        ref = entry.reference_hamiltonian(st)
        fam = eval_hamiltonian(entry.params, st)
        worst = max(worst, abs(fam - ref) / max(1.0, abs(ref)))
    return _record("reduction_identity", worst <= tol, name=entry.name, frame=entry.coordinate_frame,
                   sample_points=len(points), max_relative_error=worst, tol=tol)


def _algebra(obs, points) -> list[dict]:
    """Antisymmetry and Jacobi on the first three listed observables."""
    out = []
    f, g = obs[0], obs[1]
    worst = 0.0
    for st in points:
        a, sa = bracket_with_scale(f, g, st)
        b, _ = bracket_with_scale(g, f, st)
        worst = max(worst, abs(a + b) / max(sa, 1.0))
    out.append(_record("antisymmetry", worst <= 1e-14, pair=[f.id, g.id], max_relative=worst))
    if len(obs) >= 3:
        h = obs[2]
        terms = [
            bracket_observable(f, bracket_observable(g, h)),
            bracket_observable(g, bracket_observable(h, f)),
            bracket_observable(h, bracket_observable(f, g)),
        ]
        worst = 0.0
        for st in points:
            vals = [t(st) for t in terms]
            worst = max(worst, abs(sum(vals)) / max(1.0, max(abs(v) for v in vals)))
        out.append(_record("jacobi", worst <= 1e-10, triple=[f.id, g.id, h.id], max_relative=worst))
    return out


def _canonicity(entry: ReductionEntry, rng, count, opts: VerifyOptions) -> list[dict]:
    b = entry.bindings
    k = float(b["k"])
    sector = math.pi / (2.0 * k)
    states = [
        PolarState(rng.uniform(0.6, 1.8), rng.uniform(0.15, 0.85) * sector, rng.uniform(-1, 1), rng.uniform(-1, 1))
        for _ in range(count)
    ]
    worst_e = 0.0
    worst_d = 0.0
    for ps in states:
        polar = eval_ttw_polar(b["omega"], b["alpha"], b["beta"], k, ps)
        uv = eval_uv_form(b["omega"], b["alpha"], b["beta"], k, 1.0, polar_to_uv(k, ps))
        worst_e = max(worst_e, abs(uv - polar) / max(1.0, abs(polar)))
        cart = polar_to_cartesian_flat(ps.flat())
        worst_d = max(worst_d, symplectic_defect(polar_to_cartesian_flat, ps.flat()),
                      symplectic_defect(cartesian_to_uv_flat(k), cart))
    return [
        _record("chain_energy", worst_e <= opts.identity_tol, sample_points=count, max_relative_error=worst_e),
        _record("symplectic_defect", worst_d <= opts.defect_tol, sample_points=count, max_defect=worst_d),
    ]


def run_verification(params: ModelParams, entry: ReductionEntry | None = None,
                     opts: VerifyOptions | None = None, initial: PhaseState | None = None) -> list[dict]:
    """All applicable checks, in a fixed order."""
    opts = opts or VerifyOptions()
    rng = np.random.default_rng(opts.seed)
    points = _points(params, rng, opts.n_points)
    records: list[dict] = []
    if entry is not None:
        records.append(_identity(entry, points, opts.identity_tol))
        ids = [i for i in entry.known_integrals if i != "H"]
    elif params.equal_frequencies and params.n >= 2:
        ids = [f"K_{i + 1}{j + 1}" for i in range(params.n) for j in range(i + 1, params.n)]
    else:
        ids = []
    H = hamiltonian_observable(params)
    integrals = [observable_from_id(i, params) for i in ids]
    for obs in integrals:
        rep = bracket_report(H, obs, points)
        records.append(_record("bracket", rep.max_relative <= opts.bracket_tol, tol=opts.bracket_tol,
                               **rep.to_dict()))
    family = [H, *integrals]
    if len(family) >= 2:
        records.extend(_algebra(family, points[: opts.jacobi_points]))
        rank = independence_rank(family, params, points[:10])
        k_family = bool(ids) and all(i.startswith("K_") for i in ids)
        expected = 2 * params.n - 2 if k_family else None
        records.append(_record("independence_rank", expected is None or rank == expected,
                               gating=expected is not None, observables=[o.id for o in family],
                               rank=rank, expected=expected))
    if initial is None:
        initial = entry.default_initial() if entry is not None and entry.initial is not None else points[0]
    try:
        traj = integrate(params, initial, opts.t_max, opts.h, opts.method)
    except ConfhamError as exc:
        records.append(_record("conservation", False, error=str(exc)))
    else:
        stride = max(1, len(traj) // 2000)
        for obs in family:
            drift = conservation_drift(traj, "H" if obs.id == "H" else obs, stride=stride)
            records.append(_record("conservation", drift <= opts.drift_tol, observable=obs.id, drift=drift,
                                   t_max=opts.t_max, h=opts.h, method=opts.method, tol=opts.drift_tol))
    if entry is not None and entry.name == "ttw":
        records.extend(_canonicity(entry, rng, min(opts.n_points, 20), opts))
    return records


def summary(records: list[dict]) -> str:
    return "PASS" if all(r["pass"] for r in records if r.get("gating", True)) else "FAIL"
