"""Numerical evidence for closed orbits: radial events, rotation numbers,
recurrence, closure verdicts and (k, s) scans.

Rotation numbers come in two flavours depending on the chosen plane.

* Winding planes (no barrier on either axis): unwrapped polar angle advance
  between consecutive radial minima, divided by ``2 pi``.
* Barrier-confined planes: the angle oscillates inside a sector instead of
  winding.  The motion on the sphere of directions is governed by a fixed
  angular Hamiltonian in the time ``sigma`` with ``d sigma = F(x) dt/|x|^2``,
  so we measure the sigma-advance per radial period against the period of the
  angular oscillation and rescale by ``width/pi`` (``width`` = ``pi/2`` with
  both barriers, ``pi`` with one).  This unfolds the reflecting sector onto a
  full circle; ``k = 1`` reproduces the oscillator value 1/2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import minimize_scalar

from . import _kernels
from .core import ModelParams, PhaseState, eval_hamiltonian
from .dynamics import Trajectory, integrate
from .errors import ConfhamError, DomainError, IntegrationAbort, ParameterError
from .observables import Observable

CIRCULAR_TOL = 1e-7
DRIFT_FLOOR = 1e-30


# --------------------------------------------------------------------------
# radial events


class RadialEvents(list):
    """List of ``(t, PhaseState)`` radial minima with a ``diagnostic`` tag."""

    def __init__(self, items=(), diagnostic: str = "ok"):
        super().__init__(items)
        self.diagnostic = diagnostic

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self], dtype=float)

    def periods(self) -> np.ndarray:
        return np.diff(self.times)


def _vertex(t3: np.ndarray, y3: np.ndarray) -> float:
    """Abscissa of the parabola through three points (falls back to the middle one)."""
    (t0, t1, t2), (y0, y1, y2) = t3, y3
    d0, d2 = t0 - t1, t2 - t1
    a0, a2 = y0 - y1, y2 - y1
    denom = a0 * d2 - a2 * d0
    if denom == 0.0:
        return float(t1)
    tv = t1 + 0.5 * (a0 * d2 * d2 - a2 * d0 * d0) / denom
    return float(min(max(tv, t0), t2))


def _quad_at(t3: np.ndarray, y3: np.ndarray, tq: float) -> np.ndarray:
    """Lagrange quadratic through three samples (rows of ``y3``) evaluated at ``tq``."""
    t0, t1, t2 = t3
    l0 = (tq - t1) * (tq - t2) / ((t0 - t1) * (t0 - t2))
    l1 = (tq - t0) * (tq - t2) / ((t1 - t0) * (t1 - t2))
    l2 = (tq - t0) * (tq - t1) / ((t2 - t0) * (t2 - t1))
    return l0 * y3[0] + l1 * y3[1] + l2 * y3[2]


def _minima_indices(y: np.ndarray) -> np.ndarray:
    return np.nonzero((y[1:-1] < y[:-2]) & (y[1:-1] <= y[2:]))[0] + 1


def radial_events(traj: Trajectory) -> RadialEvents:
    """Local minima of ``|x(t)|`` refined by parabolic interpolation.

    A circular orbit (relative radius variation below 1e-7) gives an empty
    result tagged ``"circular"``.

    Raises:
        DomainError: fewer than three samples, or no minimum in a
            non-circular run (unbounded or too short).
    """
    if len(traj) < 3:
        raise DomainError("radial_events needs at least three samples")
    r = traj.radius
    if (r.max() - r.min()) <= CIRCULAR_TOL * r.mean():
        return RadialEvents(diagnostic="circular")
    z = np.hstack([traj.x, traj.p])
    n = traj.params.n
    events = []
    for i in _minima_indices(r):
        sl = slice(i - 1, i + 2)
        tv = _vertex(traj.t[sl], r[sl] ** 2)
        zi = _quad_at(traj.t[sl], z[sl], tv)
        events.append((tv, PhaseState(zi[:n], zi[n:])))
    if not events:
        raise DomainError("no radial minimum found (orbit unbounded or run too short)")
    return RadialEvents(events)


# --------------------------------------------------------------------------
# rotation numbers


def _plane_width(params: ModelParams, plane: tuple[int, int]) -> float | None:
    barriers = sum(params.alphas[i] > 0.0 for i in plane)
    return {0: None, 1: math.pi, 2: 0.5 * math.pi}[barriers]


def _sigma_time(traj: Trajectory) -> np.ndarray:
    """``sigma(t) = int F(x)/|x|^2 dt`` along the samples."""
    params = traj.params
    r2 = np.einsum("ij,ij->i", traj.x, traj.x)
    rate = np.power(r2 + params.gamma, params.conformal_exponent) / r2
    if len(traj) >= 3:
        return cumulative_simpson(rate, x=traj.t, initial=0.0)
    return np.concatenate([[0.0], np.cumsum(0.5 * np.diff(traj.t) * (rate[1:] + rate[:-1]))])


def _interp_at(t: np.ndarray, y: np.ndarray, tq: float) -> float:
    j = int(np.clip(np.searchsorted(t, tq), 1, t.size - 2))
    return float(_quad_at(t[j - 1 : j + 2], y[j - 1 : j + 2], tq))


def _check_plane(params: ModelParams, plane) -> tuple[int, int]:
    i, j = (int(v) for v in plane)
    if not (0 <= i < params.n and 0 <= j < params.n and i != j):
        raise ParameterError("plane", f"invalid coordinate plane {plane!r} for n={params.n}")
    return i, j


def rotation_number(traj: Trajectory, plane: tuple[int, int] = (0, 1), events: RadialEvents | None = None) -> float:
    """Angular advance per radial period in ``plane``, divided by ``2 pi``.

    The sense of rotation is dropped: clockwise and counterclockwise copies
    of an orbit have the same rotation number.

    Barrier-confined planes use the unfolded sector definition from the module
    docstring.

    Raises:
        DomainError: fewer than two radial events, or (confined planes) fewer
            than two angular turning points.
    """
    i, j = _check_plane(traj.params, plane)
    ev = radial_events(traj) if events is None else events
    if len(ev) < 2:
        raise DomainError(f"rotation number needs two radial events, found {len(ev)} ({ev.diagnostic})")
    t_ev = ev.times
    theta = np.arctan2(traj.x[:, j], traj.x[:, i])
    width = _plane_width(traj.params, (i, j))
    if width is None:
        theta = np.unwrap(theta)
        a0 = _interp_at(traj.t, theta, t_ev[0])
        a1 = _interp_at(traj.t, theta, t_ev[-1])
        return abs(a1 - a0) / (2.0 * math.pi * (len(ev) - 1))
    sigma = _sigma_time(traj)
    peaks = _minima_indices(-theta)
    if peaks.size < 2:
        raise DomainError("angular oscillation in the plane has fewer than two turning points")
    s_peaks = np.array([_vertex(sigma[k - 1 : k + 2], theta[k - 1 : k + 2]) for k in peaks])
    ang_period = (s_peaks[-1] - s_peaks[0]) / (s_peaks.size - 1)
    s0 = _interp_at(traj.t, sigma, t_ev[0])
    s1 = _interp_at(traj.t, sigma, t_ev[-1])
    per_radial = (s1 - s0) / (len(ev) - 1)
    return per_radial / ang_period * width / math.pi


def rational_detect(x: float, q_max: int, tol: float) -> tuple[int, int] | None:
    """First continued-fraction convergent ``p/q`` with ``q <= q_max`` and ``|x - p/q| <= tol``."""
    if q_max < 1 or not tol > 0.0:
        raise ParameterError("q_max" if q_max < 1 else "tol", "must be positive")
    if not math.isfinite(x):
        return None
    h_prev, h = 1, math.floor(x)
    k_prev, k = 0, 1
    rest = x - math.floor(x)
    while k <= q_max:
        if abs(x - h / k) <= tol:
            return int(h), int(k)
        if rest == 0.0:
            break
        inv = 1.0 / rest
        a = math.floor(inv)
        rest = inv - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    return None


# --------------------------------------------------------------------------
# recurrence


def _flows(params: ModelParams, z: np.ndarray) -> np.ndarray:
    pk = _kernels.pack(params)
    n = params.n
    gx = np.empty(n)
    gp = np.empty(n)
    out = np.empty_like(z)
    for m, row in enumerate(z):
        if not _kernels.grad(row[:n].copy(), row[n:].copy(), *pk, gx, gp):
            raise DomainError(f"vector field undefined at x={row[:n].tolist()}")
        out[m, :n] = gp
        out[m, n:] = -gx
    return out


def _hermite_min(z0, za, zb, fa, fb, dt) -> float:
    """Minimize ``|c(s) - z0|`` over the cubic Hermite segment ``c`` on ``[0, 1]``."""

    def dist2(s):
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        c = h00 * za + h10 * dt * fa + h01 * zb + h11 * dt * fb
        d = c - z0
        return float(d @ d)

    res = minimize_scalar(dist2, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    return math.sqrt(max(min(res.fun, dist2(0.0), dist2(1.0)), 0.0))


def recurrence_profile(
    traj: Trajectory, period: float, q_max: int = 12, window: float = 0.05
) -> list[tuple[int, float]]:
    """Best normalized distance ``|z(t) - z(0)|/|z(0)|`` near each multiple ``q * period``.

    The sampled minimum in each window is refined on the two adjacent steps by
    cubic Hermite interpolation with the exact vector field.
    """
    z = np.hstack([traj.x, traj.p])
    z0 = z[0]
    norm0 = float(np.linalg.norm(z0)) or 1.0
    d = np.linalg.norm(z - z0, axis=1)
    out = []
    for q in range(1, q_max + 1):
        lo, hi = q * period * (1.0 - window), q * period * (1.0 + window)
        if hi > traj.t[-1]:
            break
        a, b = np.searchsorted(traj.t, [lo, hi])
        if b - a < 1:
            continue
        j = a + int(np.argmin(d[a:b]))
        j = min(max(j, 1), len(traj) - 2)
        seg = z[j - 1 : j + 2]
        flows = _flows(traj.params, seg)
        best = d[j]
        for m in (0, 1):
            dt = traj.t[j + m] - traj.t[j - 1 + m]
            best = min(best, _hermite_min(z0, seg[m], seg[m + 1], flows[m], flows[m + 1], dt))
        out.append((q, best / norm0))
    return out


# --------------------------------------------------------------------------
# closure test


@dataclass(frozen=True)
class ClosureOptions:
    n_periods: int = 40
    h: float = 2.5e-3
    method: str = "midpoint4"
    epsilon: float = 1e-4
    q_max: int = 12
    window: float = 0.05
    escape_factor: float = 50.0
    plane: tuple[int, int] = (0, 1)
    rational_q_max: int = 12
    rational_tol: float = 1e-4
    probe_periods: int = 5
    t_probe: float = 10.0
    t_cap: float = 1.0e5
    check_halving: bool = True
    time_transform: float | None = None

    def transform_for(self, params: ModelParams) -> float:
        """Explicit ``time_transform`` or, when unset, the automatic choice.

        Attractive entries whose origin is reachable (``central_sign = -1``
        and some ``alpha_i <= 0``) get ``beta = 3/2``, which makes the
        physical step follow the local Kepler time scale ``r^(3/2)``;
        everything else is integrated directly.
        """
        if self.time_transform is not None:
            return float(self.time_transform)
        reachable = not all(a > 0.0 for a in params.alphas)
        return 1.5 if params.central_sign == -1 and reachable else 0.0

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["plane"] = list(self.plane)
        return d


@dataclass(frozen=True)
class ClosureReport:
    params: ModelParams
    initial: PhaseState
    bounded: bool
    rotation_number: float | None
    rational: tuple[int, int] | None
    recurrence_distance: float
    verdict: str
    radial_period: float | None = None
    best_multiple: int | None = None
    halved_recurrence: float | None = None
    energy: float | None = None
    diagnostic: str = ""
    step: float = 0.0

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "initial": self.initial.to_dict(),
            "bounded": self.bounded,
            "rotation_number": self.rotation_number,
            "rational": None if self.rational is None else f"{self.rational[0]}/{self.rational[1]}",
            "recurrence_distance": self.recurrence_distance,
            "verdict": self.verdict,
            "radial_period": self.radial_period,
            "best_multiple": self.best_multiple,
            "halved_recurrence": self.halved_recurrence,
            "energy": self.energy,
            "step": self.step,
            "diagnostic": self.diagnostic,
        }


def _concat(a: Trajectory, b: Trajectory) -> Trajectory:
    t = np.concatenate([a.t, a.t[-1] + b.t[1:]])
    tau = None if a.tau is None or b.tau is None else np.concatenate([a.tau, a.tau[-1] + b.tau[1:]])
    return Trajectory(a.params, t, np.vstack([a.x, b.x[1:]]), np.vstack([a.p, b.p[1:]]), a.method, a.step,
                      tau=tau, status=b.status)


def _integrate(params, initial, t_max, h, opts: ClosureOptions, r_escape):
    return integrate(params, initial, t_max, h, opts.method, r_escape=r_escape,
                     time_transform=opts.transform_for(params))


def _extend(traj: Trajectory, t_more: float, opts: ClosureOptions, r_escape: float) -> Trajectory:
    return _concat(traj, _integrate(traj.params, traj.final, t_more, traj.step, opts, r_escape))


def _count_minima(traj: Trajectory) -> int:
    return int(_minima_indices(traj.radius).size)


def _run_until(params, initial, opts: ClosureOptions, h: float, r_escape: float, t_end: float | None):
    """Probe (doubling) until ``probe_periods`` radial periods, then extend to ``t_end`` if given."""
    traj = _integrate(params, initial, opts.t_probe, h, opts, r_escape)
    while traj.status != "escaped" and _count_minima(traj) < opts.probe_periods + 1:
        if traj.t[-1] >= opts.t_cap:
            break
        r = traj.radius
        if len(traj) > 10 and (r.max() - r.min()) <= CIRCULAR_TOL * r.mean():
            break
        traj = _extend(traj, min(traj.t[-1], opts.t_cap - traj.t[-1]), opts, r_escape)
    if t_end is not None and traj.status != "escaped" and traj.t[-1] < t_end:
        traj = _extend(traj, t_end - traj.t[-1], opts, r_escape)
    return traj


def _angular_period(traj: Trajectory, plane) -> float | None:
    i, j = plane
    theta = np.unwrap(np.arctan2(traj.x[:, j], traj.x[:, i]))
    rate = (theta[-1] - theta[0]) / (traj.t[-1] - traj.t[0])
    return abs(2.0 * math.pi / rate) if rate != 0.0 else None


def closure_test(params: ModelParams, initial: PhaseState, opts: ClosureOptions | None = None) -> ClosureReport:
    """Integrate ``opts.n_periods`` radial periods and decide closed/open/undetermined.

    ``closed`` needs the normalized recurrence distance within a window
    around some multiple ``q <= q_max`` of the radial period to be at most
    ``epsilon``.  With ``check_halving`` the best multiple is re-run at
    ``h/2``; the verdict is downgraded to ``undetermined`` unless it is
    still closed there and the distance did not grow by 50% or more (growth
    below ``epsilon/100`` is treated as roundoff).
    """
    opts = opts or ClosureOptions()
    plane = _check_plane(params, opts.plane)
    energy = eval_hamiltonian(params, initial)
    r_escape = opts.escape_factor * float(np.linalg.norm(initial.x))
    base = dict(params=params, initial=initial, energy=energy, step=opts.h)

    def undetermined(msg, bounded=True, **kw):
        return ClosureReport(bounded=bounded, rotation_number=None, rational=None,
                             recurrence_distance=math.inf, verdict="undetermined", diagnostic=msg, **base, **kw)

    try:
        probe = _run_until(params, initial, opts, opts.h, r_escape, None)
    except (IntegrationAbort, DomainError) as exc:
        return undetermined(f"probe integration aborted: {exc}")
    if probe.status == "escaped":
        return undetermined("escape radius exceeded during probe", bounded=False)
    try:
        ev = radial_events(probe)
    except DomainError as exc:
        return undetermined(str(exc))
    if ev.diagnostic == "circular":
        period = _angular_period(probe, plane)
        rotation = None
    else:
        if len(ev) < 2:
            return undetermined("fewer than two radial minima before the time cap")
        period = float(np.mean(ev.periods()))
    if period is None or not math.isfinite(period):
        return undetermined("no usable period")
    t_end = opts.n_periods * period
    if t_end > opts.t_cap:
        return undetermined(f"run of {opts.n_periods} periods exceeds t_cap={opts.t_cap:g}", radial_period=period)
    try:
        traj = _run_until(params, initial, opts, opts.h, r_escape, t_end)
    except (IntegrationAbort, DomainError) as exc:
        return undetermined(f"integration aborted: {exc}", radial_period=period)
    if traj.status == "escaped":
        return undetermined("escape radius exceeded", bounded=False, radial_period=period)
    traj = traj.window(t_end * (1.0 + 1e-9))
    rotation = None
    rational = None
    diagnostic = ev.diagnostic
    if ev.diagnostic != "circular":
        ev = radial_events(traj)
        if len(ev) < 2:
            return undetermined("fewer than two radial minima in the full run", radial_period=period)
        period = float(np.mean(ev.periods()))
        try:
            rotation = rotation_number(traj, plane, ev)
            rational = rational_detect(rotation, opts.rational_q_max, opts.rational_tol)
        except DomainError as exc:
            diagnostic = f"rotation number unavailable: {exc}"
    profile = recurrence_profile(traj, period, opts.q_max, opts.window)
    if not profile:
        return undetermined("no recurrence window inside the run", radial_period=period)
    best_q, best = min(profile, key=lambda qd: qd[1])
    verdict = "closed" if best <= opts.epsilon else "open"
    halved = None
    if verdict == "closed" and opts.check_halving:
        t_half = best_q * period * (1.0 + 2.0 * opts.window)
        try:
            fine = _integrate(params, initial, t_half, 0.5 * opts.h, opts, r_escape)
            prof = dict(recurrence_profile(fine, period, best_q, opts.window))
            halved = prof.get(best_q, math.inf)
        except (IntegrationAbort, DomainError) as exc:
            halved = math.inf
            diagnostic = f"halving run aborted: {exc}"
        if not (halved <= opts.epsilon and halved < max(1.5 * best, 1e-2 * opts.epsilon)):
            verdict = "undetermined"
            diagnostic = "closed verdict did not persist at h/2"
    return ClosureReport(bounded=True, rotation_number=rotation, rational=rational, recurrence_distance=best,
                         verdict=verdict, radial_period=period, best_multiple=best_q, halved_recurrence=halved,
                         diagnostic=diagnostic, **base)


# --------------------------------------------------------------------------
# conservation


def conservation_drift(traj: Trajectory, obs: Observable | str, stride: int = 1) -> float:
    """``(max - min) / max(|mean|, 1e-30)`` of ``obs`` along the samples.

    ``obs = "H"`` uses the vectorised energy column.
    """
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    if isinstance(obs, str):
        if obs != "H":
            raise ParameterError("obs", f"only the shortcut 'H' is accepted as a string, got {obs!r}")
        vals = traj.energy[::stride]
    else:
        vals = np.array([obs(traj.state(i)) for i in range(0, len(traj), stride)])
    if not np.all(np.isfinite(vals)):
        raise DomainError("observable is not finite along the trajectory")
    return float((vals.max() - vals.min()) / max(abs(vals.mean()), DRIFT_FLOOR))


# --------------------------------------------------------------------------
# initial conditions and scans

X_RANGE = (0.6, 1.6)
P_RANGE = (-0.8, 0.8)


def draw_initial_condition(params: ModelParams, rng: np.random.Generator, max_tries: int = 1000) -> PhaseState:
    """Uniform draw in the sampling box; attractive entries keep only ``E < 0``."""
    for _ in range(max_tries):
        x = rng.uniform(*X_RANGE, size=params.n)
        p = rng.uniform(*P_RANGE, size=params.n)
        state = PhaseState(x, p)
        try:
            energy = eval_hamiltonian(params, state)
        except DomainError:
            continue
        if params.central_sign == -1 and not energy < 0.0:
            continue
        return state
    raise DomainError(f"no admissible initial condition in {max_tries} draws")


@dataclass(frozen=True)
class SampleRun:
    reports: tuple[ClosureReport, ...]
    rejected: int

    @property
    def closure_fraction(self) -> float:
        if not self.reports:
            return 0.0
        return sum(r.verdict == "closed" for r in self.reports) / len(self.reports)

    @property
    def undetermined(self) -> int:
        return sum(r.verdict == "undetermined" for r in self.reports)


def sample_closure(
    params: ModelParams,
    n_ic: int,
    seed: int,
    opts: ClosureOptions | None = None,
    max_rejections: int | None = None,
) -> SampleRun:
    """Closure reports for ``n_ic`` bounded seeded initial conditions.

    Draws whose probe escapes are rejected and replaced.
    """
    opts = opts or ClosureOptions()
    rng = np.random.default_rng(seed)
    max_rejections = 20 * n_ic if max_rejections is None else max_rejections
    reports = []
    rejected = 0
    while len(reports) < n_ic:
        state = draw_initial_condition(params, rng)
        rep = closure_test(params, state, opts)
        if not rep.bounded:
            rejected += 1
            if rejected > max_rejections:
                break
            continue
        reports.append(rep)
    return SampleRun(tuple(reports), rejected)


@dataclass(frozen=True)
class ScanCell:
    k: float
    s: float
    closure_fraction: float
    n_samples: int
    mean_recurrence: float
    undetermined: int
    flagged: bool


@dataclass(frozen=True)
class ScanTable:
    k_grid: tuple[float, ...]
    s_grid: tuple[float, ...]
    cells: tuple[ScanCell, ...]
    seed: int
    template: ModelParams
    n_ic: int

    def cell(self, k: float, s: float) -> ScanCell:
        for c in self.cells:
            if c.k == k and c.s == s:
                return c
        raise KeyError((k, s))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "s", "closure_fraction", "n_samples", "mean_recurrence"])
        for c in self.cells:
            w.writerow([repr(c.k), repr(c.s), repr(c.closure_fraction), c.n_samples, repr(c.mean_recurrence)])
        return buf.getvalue()


def parameter_scan(
    template: ModelParams,
    k_grid: Sequence[float],
    s_grid: Sequence[float],
    n_ic: int,
    seed: int,
    opts: ClosureOptions | None = None,
) -> ScanTable:
    """Closure fraction on every ``(k, s)`` cell; each cell reuses the seed, so sampling is shared.

    Cells whose runs are all undetermined are flagged.  The mean recurrence
    is taken over runs with a finite distance (``nan`` if none).
    """
    if not k_grid or not s_grid:
        raise ParameterError("k_grid" if not k_grid else "s_grid", "grid must be nonempty")
    if n_ic < 1:
        raise ParameterError("n_ic", "must be positive")
    cells = []
    for k in k_grid:
        for s in s_grid:
            try:
                params = template.replace(k=float(k), s=float(s))
            except ConfhamError as exc:
                raise ParameterError("k_grid", f"cell (k={k}, s={s}) is invalid: {exc}") from exc
            run = sample_closure(params, n_ic, seed, opts)
            finite = [r.recurrence_distance for r in run.reports if math.isfinite(r.recurrence_distance)]
            mean_rec = float(np.mean(finite)) if finite else math.nan
            n = len(run.reports)
            cells.append(ScanCell(float(k), float(s), run.closure_fraction, n, mean_rec, run.undetermined,
                                  flagged=(n == 0 or run.undetermined == n)))
    return ScanTable(tuple(map(float, k_grid)), tuple(map(float, s_grid)), tuple(cells), seed, template, n_ic)
