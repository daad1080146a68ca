"""Time evolution of the conformal Hamiltonian family.

Two routes are provided:

* direct integration of ``H = F (T + W)`` with the implicit midpoint rule
  (``"midpoint"``), its fourth-order symmetric triple-jump composition
  (``"midpoint4"``) or an adaptive Dormand-Prince reference (``"rk_adaptive"``);
* fixed-energy reparametrisation: on the level ``H = E`` the orbits of
  ``H`` coincide with the zero level of the separable companion
  ``K = T + W - E/F``, integrated by position Verlet in the new time
  ``tau`` with ``dt = dtau / F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.spatial import cKDTree

from . import _kernels, dual
from .core import (
    ModelParams,
    PhaseState,
    check_admissible,
    conformal_factor,
    eval_hamiltonian,
    grad_expr,
    grad_hamiltonian,
    hamiltonian_columns,
    kinetic_term,
    potential,
)
from .errors import DomainError, IntegrationAbort, NonConvergenceError, ParameterError

_CBRT2 = 2.0 ** (1.0 / 3.0)
TRIPLE_JUMP = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))

COMPOSITIONS = {"midpoint": (1.0,), "midpoint4": TRIPLE_JUMP}
METHODS = (*COMPOSITIONS, "rk_adaptive")

REPARAM_METHODS = {"leapfrog": (1.0,), "leapfrog4": TRIPLE_JUMP}

H_MIN = 1e-12
DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 60


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped phase states; ``x`` and ``p`` have shape ``(samples, n)``.

    ``status`` is ``"complete"`` or ``"escaped"`` (stopped at the escape
    radius).  ``tau`` is set for reparametrised runs.
    """

    params: ModelParams
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    method: str
    step: float
    tau: np.ndarray | None = None
    status: str = "complete"

    def __len__(self) -> int:
        return self.t.size

    @cached_property
    def energy(self) -> np.ndarray:
        return hamiltonian_columns(self.params, self.x, self.p)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.x, self.x))

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.x[i], self.p[i])

    @property
    def initial(self) -> PhaseState:
        return self.state(0)

    @property
    def final(self) -> PhaseState:
        return self.state(-1)

    def samples(self) -> Iterator[tuple[float, PhaseState, float]]:
        for i in range(len(self)):
            yield float(self.t[i]), self.state(i), float(self.energy[i])

    def window(self, t_end: float) -> Trajectory:
        """Prefix with ``t <= t_end``."""
        m = int(np.searchsorted(self.t, t_end, side="right"))
        tau = None if self.tau is None else self.tau[:m]
        return Trajectory(self.params, self.t[:m], self.x[:m], self.p[:m], self.method, self.step, tau, self.status)

    def jsonl_records(self) -> Iterator[dict]:
        yield {"params": self.params.to_dict(), "method": self.method, "step": self.step, "samples": len(self)}
        energy = self.energy
        for i in range(len(self)):
            yield {"t": float(self.t[i]), "x": self.x[i].tolist(), "p": self.p[i].tolist(), "H": float(energy[i])}


# --------------------------------------------------------------------------
# vector field


def flow_field(params: ModelParams, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Hamilton's equations: ``(dx/dt, dp/dt) = (dH/dp, -dH/dx)``."""
    dx, dp = grad_hamiltonian(params, state)
    return dp, -dx


def flow_divergence(params: ModelParams, state: PhaseState) -> float:
    """Divergence of the Hamiltonian vector field, by dual numbers."""
    check_admissible(params, state)
    n = params.n
    z = dual.Dual.variables(list(state.flat()))
    gx, gp = grad_expr(params, z[:n], z[n:])
    field_ = list(gp) + [-g for g in gx]
    div = 0.0
    for i, f in enumerate(field_):
        if isinstance(f, dual.Dual):
            div += float(f.der[i])
    return div


# --------------------------------------------------------------------------
# direct integration


def step_implicit_midpoint(
    params: ModelParams,
    state: PhaseState,
    h: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PhaseState:
    """One step of ``z' = z + h f((z + z')/2)`` solved by fixed-point iteration.

    ``tol`` bounds the max-norm of the last iterate change, scaled by
    ``1 + max|z|``.  ``h`` may be negative.

    Raises:
        NonConvergenceError: after ``max_iter`` iterations; retry with ``h/2``.
        DomainError: the midpoint left the admissible region.
    """
    check_admissible(params, state)
    pk = _kernels.pack(params)
    dx, dp = flow_field(params, state)
    xo = np.empty(params.n)
    po = np.empty(params.n)
    st, _ = _kernels.midpoint_step(
        state.x.copy(), state.p.copy(), h * dx, h * dp, h, tol, max_iter, *pk, 0.0, 0.0, xo, po
    )
    if st == _kernels.NONCONVERGED:
        raise NonConvergenceError(f"midpoint iteration did not converge in {max_iter} iterations (h={h:g})")
    if st == _kernels.DOMAIN:
        raise DomainError(f"midpoint step from x={state.x.tolist()} left the admissible region")
    return PhaseState(xo, po)


def _run_composition(params, coeffs, x0, p0, h, nsteps, tol, max_iter, r_escape, energy=0.0, beta=0.0):
    """Fixed-step run with recursive step halving on failure."""
    pk = (*_kernels.pack(params), energy, beta)
    n = params.n
    X = np.empty((nsteps + 1, n))
    P = np.empty((nsteps + 1, n))
    X[0], P[0] = x0, p0
    j = 0
    while j < nsteps:
        done, st = _kernels.midpoint_run(
            X[j].copy(), P[j].copy(), h, nsteps - j, coeffs, tol, max_iter, *pk, r_escape, X[j:], P[j:]
        )
        j += done
        if st == _kernels.OK:
            break
        if st == _kernels.ESCAPED:
            return X[: j + 1], P[: j + 1], "escaped", j
        xs, ps = _subdivided_step(X[j], P[j], h / 2.0, coeffs, tol, max_iter, pk, r_escape)
        if xs is None:
            return X[: j + 1], P[: j + 1], "aborted", j
        X[j + 1], P[j + 1] = xs, ps
        j += 1
    return X, P, "complete", nsteps


def _subdivided_step(x, p, h, coeffs, tol, max_iter, pk, r_escape):
    if abs(h) < H_MIN:
        return None, None
    n = x.size
    X = np.empty((3, n))
    P = np.empty((3, n))
    done, st = _kernels.midpoint_run(x.copy(), p.copy(), h, 2, coeffs, tol, max_iter, *pk, np.inf, X, P)
    if st == _kernels.OK:
        return X[2], P[2]
    xm, pm = X[done], P[done]
    for _ in range(2 - done):
        xm, pm = _subdivided_step(xm, pm, h / 2.0, coeffs, tol, max_iter, pk, r_escape)
        if xm is None:
            return None, None
    return xm, pm


def integrate(
    params: ModelParams,
    initial: PhaseState,
    t_max: float,
    h: float,
    method: str = "midpoint",
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    r_escape: float = math.inf,
    rtol: float = 1e-12,
    time_transform: float = 0.0,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_max``.

    Fixed-step methods sample every step; a failing step is split into
    halves recursively down to ``H_MIN``.  Reaching ``r_escape`` ends the
    run early with ``status="escaped"``.

    ``time_transform = beta != 0`` steps the Poincare-transformed
    Hamiltonian ``|x|^beta (H - E)``, ``E = H(initial)``, with fixed step
    ``h`` in the fictitious time ``tau``; physical time follows from
    ``dt = |x|^beta dtau`` (composite Simpson rule) and the samples are no
    longer uniform in ``t``.  ``beta = 3/2`` resolves near-collision
    pericenters of Kepler-like attractive terms at a cost per orbit that does
    not depend on eccentricity.

    Raises:
        IntegrationAbort: a step could not be completed even at ``H_MIN``;
            carries the last good time, state and the partial trajectory.
    """
    if method not in METHODS:
        raise ParameterError("method", f"unknown integrator {method!r}; choose from {METHODS}")
    if not (h > 0.0 and t_max > 0.0):
        raise ParameterError("h" if not h > 0.0 else "t_max", "must be positive")
    check_admissible(params, initial)
    if method == "rk_adaptive":
        if time_transform != 0.0:
            raise ParameterError("time_transform", "only the fixed-step methods support a time transform")
        return _integrate_rk(params, initial, t_max, h, rtol, r_escape)
    coeffs = np.asarray(COMPOSITIONS[method])
    if time_transform != 0.0:
        return _integrate_transformed(params, initial, t_max, h, method, coeffs, tol, max_iter, r_escape,
                                      float(time_transform))
    nsteps = int(math.floor(t_max / h + 1e-9))
    X, P, status, m = _run_composition(params, coeffs, initial.x, initial.p, h, nsteps, tol, max_iter, r_escape)
    t = h * np.arange(X.shape[0])
    traj = Trajectory(params, t, X, P, method, h, status="escaped" if status == "escaped" else "complete")
    if status == "aborted":
        raise IntegrationAbort(
            f"step could not be completed above h_min={H_MIN:g} near x={X[-1].tolist()}",
            t=float(t[-1]),
            state=traj.final,
            trajectory=traj,
        )
    return traj


def _physical_time(tau_rate: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled ``dt/dtau`` (Simpson where possible)."""
    if tau_rate.size < 3:
        return np.concatenate([[0.0], np.cumsum(0.5 * h * (tau_rate[1:] + tau_rate[:-1]))])
    return cumulative_simpson(tau_rate, dx=h, initial=0.0)


def _integrate_transformed(params, initial, t_max, h, method, coeffs, tol, max_iter, r_escape, beta):
    energy = eval_hamiltonian(params, initial)
    chunks_x = [initial.x[None, :]]
    chunks_p = [initial.p[None, :]]
    x, p = initial.x, initial.p
    t_now = 0.0
    status = "complete"
    r0 = float(np.linalg.norm(initial.x)) ** beta
    chunk = max(16, int(min(t_max / (h * r0), 2e6)) + 1)
    while True:
        X, P, st, m = _run_composition(params, coeffs, x, p, h, chunk, tol, max_iter, r_escape, energy, beta)
        chunks_x.append(X[1:])
        chunks_p.append(P[1:])
        x, p = X[-1], P[-1]
        rate = np.power(np.einsum("ij,ij->i", X, X), 0.5 * beta)
        t_now += float(_physical_time(rate, h)[-1])
        if st != "complete":
            status = st
            break
        if t_now >= t_max:
            break
    X = np.vstack(chunks_x)
    P = np.vstack(chunks_p)
    tau = h * np.arange(X.shape[0])
    t = _physical_time(np.power(np.einsum("ij,ij->i", X, X), 0.5 * beta), h)
    m = int(np.searchsorted(t, t_max * (1.0 + 1e-12), side="right"))
    if status == "complete":
        X, P, t, tau = X[:m], P[:m], t[:m], tau[:m]
    traj = Trajectory(params, t, X, P, f"{method}+tt{beta:g}", h, tau=tau,
                      status="escaped" if status == "escaped" else "complete")
    if status == "aborted":
        raise IntegrationAbort(
            f"step could not be completed above h_min={H_MIN:g} near x={X[-1].tolist()}",
            t=float(t[-1]),
            state=traj.final,
            trajectory=traj,
        )
    return traj


def _integrate_rk(params, initial, t_max, h, rtol, r_escape):
    pk = _kernels.pack(params)
    n = params.n
    gx = np.empty(n)
    gp = np.empty(n)

    def rhs(_t, z):
        if not _kernels.grad(z[:n], z[n:], *pk, gx, gp):
            raise DomainError(f"vector field undefined at x={z[:n].tolist()}")
        return np.concatenate([gp, -gx])

    def escape(_t, z):
        return r_escape - math.sqrt(float(np.dot(z[:n], z[:n])))

    escape.terminal = True
    events = [escape] if math.isfinite(r_escape) else None
    try:
        sol = solve_ivp(rhs, (0.0, t_max), initial.flat(), method="DOP853", rtol=rtol, atol=rtol,
                        first_step=h, events=events)
    except DomainError as exc:
        raise IntegrationAbort(str(exc), t=float("nan"), state=initial) from exc
    if sol.status < 0:
        raise IntegrationAbort(sol.message, t=float(sol.t[-1]), state=PhaseState.from_flat(sol.y[:, -1]))
    status = "escaped" if sol.status == 1 else "complete"
    return Trajectory(params, sol.t, sol.y[:n].T.copy(), sol.y[n:].T.copy(), "rk_adaptive", h, status=status)


# --------------------------------------------------------------------------
# fixed-energy reparametrisation


@dataclass(frozen=True)
class ReparamSystem:
    """Separable companion ``K = T + W(x) - E (|x|^2 + gamma)^((1-k)/k)``."""

    params: ModelParams
    energy_level: float

    def effective_potential(self, x):
        x = list(x)
        return potential(self.params, x) - self.energy_level / conformal_factor(self.params, x)

    def companion(self, state: PhaseState) -> float:
        """Value of ``K`` at ``state``; zero on the level set ``H = E``."""
        check_admissible(self.params, state)
        return float(kinetic_term(list(state.p)) + self.effective_potential(state.x.tolist()))


def reparametrize(params: ModelParams, E: float) -> ReparamSystem:
    return ReparamSystem(params, float(E))


def integrate_reparam(
    system: ReparamSystem,
    initial: PhaseState,
    tau_max: float,
    h: float,
    method: str = "leapfrog",
    *,
    r_escape: float = math.inf,
    level_tol: float = 1e-9,
    project_tol: float = 1e-6,
) -> Trajectory:
    """Position-Verlet integration of ``K`` in ``tau``.

    ``method="leapfrog4"`` composes three Verlet substeps per step (the same
    triple jump as ``midpoint4``), which is still explicit and symmetric but
    fourth order.  Physical time ``dt = dtau / F`` uses the trapezoid rule
    for ``leapfrog`` and Simpson's rule for ``leapfrog4``; for ``k = 1`` it is
    ``tau`` itself.

    An initial state with ``level_tol < |K| <= project_tol`` is projected onto
    ``K = 0`` by rescaling the momenta.

    Raises:
        DomainError: ``|K(initial)| > project_tol`` (not on the energy level).
        IntegrationAbort: a step crossed a barrier or left the domain.
    """
    if method not in REPARAM_METHODS:
        raise ParameterError("method", f"unknown splitting {method!r}; choose from {tuple(REPARAM_METHODS)}")
    params = system.params
    kval = system.companion(initial)
    p0 = initial.p.copy()
    if abs(kval) > level_tol:
        if abs(kval) > project_tol:
            raise DomainError(f"initial state is off the level set: K={kval:.3e}")
        kin = 0.5 * float(np.dot(p0, p0))
        if kin <= 0.0 or kin - kval <= 0.0:
            raise DomainError("cannot project a zero-momentum state onto K = 0")
        p0 = p0 * math.sqrt((kin - kval) / kin)
    nsteps = int(math.floor(tau_max / h + 1e-9))
    n = params.n
    X = np.empty((nsteps + 1, n))
    P = np.empty((nsteps + 1, n))
    inv_f = np.empty(nsteps + 1)
    pk = _kernels.pack(params)
    coeffs = np.asarray(REPARAM_METHODS[method])
    done, st = _kernels.leapfrog_run(initial.x.copy(), p0, h, nsteps, coeffs, system.energy_level, *pk, r_escape,
                                     X, P, inv_f)
    X, P, inv_f = X[: done + 1], P[: done + 1], inv_f[: done + 1]
    tau = h * np.arange(done + 1)
    if params.k == 1.0:
        t = tau.copy()
    elif method == "leapfrog4":
        t = _physical_time(inv_f, h)
    else:
        t = np.concatenate([[0.0], np.cumsum(0.5 * h * (inv_f[1:] + inv_f[:-1]))])
    traj = Trajectory(params, t, X, P, f"reparam_{method}", h, tau=tau,
                      status="escaped" if st == _kernels.ESCAPED else "complete")
    if st == _kernels.DOMAIN:
        raise IntegrationAbort(
            f"reparametrised step left the admissible region near x={X[-1].tolist()}",
            t=float(t[-1]),
            state=traj.final,
            trajectory=traj,
        )
    return traj


# --------------------------------------------------------------------------
# orbit comparison


def _segment_distances(points, a, b):
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    s = np.einsum("ij,ij->i", points - a, ab) / np.where(denom > 0, denom, 1.0)
    s = np.clip(np.where(denom > 0, s, 0.0), 0.0, 1.0)
    return np.linalg.norm(points - (a + s[:, None] * ab), axis=1)


def _polyline_distances(points: np.ndarray, line: np.ndarray) -> np.ndarray:
    """Exact distance from each row of ``points`` to the polyline through ``line``.

    A segment of length ``L`` can only be closer than the nearest vertex
    (distance ``d``) if one of its endpoints lies within ``d + L/2``, so every
    segment touching a vertex in that ball is checked.
    """
    if len(line) == 1:
        return np.linalg.norm(points - line[0], axis=1)
    tree = cKDTree(line)
    d0, _ = tree.query(points)
    half = 0.5 * float(np.max(np.linalg.norm(np.diff(line, axis=0), axis=1)))
    hits = tree.query_ball_point(points, d0 * (1.0 + 1e-12) + half, return_sorted=False)
    counts = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
    owner = np.repeat(np.arange(len(points)), counts)
    verts = np.fromiter((v for h in hits for v in h), dtype=np.int64, count=int(counts.sum()))
    best = d0.copy()
    last = len(line) - 2
    for shift in (-1, 0):
        seg = np.clip(verts + shift, 0, last)
        d = _segment_distances(points[owner], line[seg], line[seg + 1])
        np.minimum.at(best, owner, d)
    return best


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two sampled curves.

    Each sample is measured against the other curve's polyline, so the result
    is not limited by the sampling stride.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(max(_polyline_distances(a, b).max(), _polyline_distances(b, a).max()))


def orbit_points(traj: Trajectory) -> np.ndarray:
    """Phase-space point set ``(x, p)`` of a trajectory."""
    return np.hstack([traj.x, traj.p])
