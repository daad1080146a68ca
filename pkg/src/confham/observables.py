"""Phase-space observables, Poisson brackets and independence tests.

Observables are written on generic scalars (floats or :class:`~confham.dual.Dual`)
so brackets come from forward-mode derivatives rather than finite differences.
Nested duals give brackets of brackets, which the Jacobi-identity checks use.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import dual
from .core import ModelParams, PhaseState, hamiltonian_expr
from .dual import Dual
from .errors import DomainError, ParameterError
from .transforms import PolarState

Expr = Callable[[Sequence, Sequence], object]

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Observable:
    """Named function of ``(x, p)``; ``expr`` must accept dual numbers."""

    id: str
    n: int
    expr: Expr

    def __call__(self, state: PhaseState) -> float:
        return float(dual.real_part(self.expr(list(state.x), list(state.p))))

    def scaled(self, c: float) -> Observable:
        return Observable(f"{c:g}*{self.id}", self.n, lambda x, p: c * self.expr(x, p))

    def __mul__(self, other: Observable) -> Observable:
        return Observable(f"({self.id})*({other.id})", self.n, lambda x, p: self.expr(x, p) * other.expr(x, p))


def _split(values: Sequence, n: int):
    return list(values[:n]), list(values[n:])


def phase_gradient(obs: Observable, state: PhaseState) -> np.ndarray:
    """Gradient of ``obs`` with respect to ``(x, p)`` as one vector of length ``2n``."""
    point = [*map(float, state.x), *map(float, state.p)]
    _, g = dual.gradient(lambda z: obs.expr(*_split(z, obs.n)), point)
    return g


def _bracket_terms(f: Expr, g: Expr, n: int, x: Sequence, p: Sequence):
    seeds = Dual.variables([*x, *p])
    xs, ps = _split(seeds, n)
    _, df = dual.derivative_parts(f(xs, ps), 2 * n)
    _, dg = dual.derivative_parts(g(xs, ps), 2 * n)
    value = 0.0
    scale = 0.0
    for i in range(n):
        a = df[i] * dg[n + i]
        b = df[n + i] * dg[i]
        value = value + a - b
        scale = scale + abs(dual.real_part(a)) + abs(dual.real_part(b))
    return value, scale


def poisson_bracket(f: Observable, g: Observable, state: PhaseState) -> float:
    """Canonical bracket ``sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i`` at ``state``."""
    value, _ = _bracket_terms(f.expr, g.expr, f.n, list(state.x), list(state.p))
    return float(value)


def bracket_with_scale(f: Observable, g: Observable, state: PhaseState) -> tuple[float, float]:
    """Bracket value and the sum of the magnitudes of its terms (for relative tests)."""
    value, scale = _bracket_terms(f.expr, g.expr, f.n, list(state.x), list(state.p))
    return float(value), float(scale)


def bracket_observable(f: Observable, g: Observable) -> Observable:
    """``{f, g}`` as an observable in its own right (differentiable again)."""

    def expr(x, p):
        value, _ = _bracket_terms(f.expr, g.expr, f.n, x, p)
        return value

    return Observable(f"{{{f.id},{g.id}}}", f.n, expr)


# --------------------------------------------------------------------------
# concrete observables


def hamiltonian_observable(params: ModelParams) -> Observable:
    return Observable("H", params.n, lambda x, p: hamiltonian_expr(params, x, p))


def coordinate(i: int, n: int) -> Observable:
    return Observable(f"x_{i + 1}", n, lambda x, p: x[i])


def momentum(i: int, n: int) -> Observable:
    return Observable(f"p_{i + 1}", n, lambda x, p: p[i])


def angular_momentum(i: int, j: int, n: int) -> Observable:
    return Observable(f"L_{i + 1}{j + 1}", n, lambda x, p: x[i] * p[j] - x[j] * p[i])


def _check_pair(i: int, j: int, n: int) -> None:
    if not (0 <= i < j < n):
        raise ParameterError("indices", f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")


def _rosochatius_pair_expr(i, j, ai, aj):
    def expr(x, p):
        lij = x[i] * p[j] - x[j] * p[i]
        out = lij * lij
        if ai != 0.0:
            out = out + 2.0 * ai * (x[j] * x[j]) / (x[i] * x[i])
        if aj != 0.0:
            out = out + 2.0 * aj * (x[i] * x[i]) / (x[j] * x[j])
        return out

    return expr


def angular_rosochatius_integral(i: int, j: int, params: ModelParams, state: PhaseState) -> float:
    """``K_ij = L_ij^2 + 2 a_i x_j^2/x_i^2 + 2 a_j x_i^2/x_j^2`` (0-based indices).

    Raises:
        ParameterError: unequal frequencies, where ``K_ij`` is not an integral.
        DomainError: a barrier coordinate vanishes.
    """
    return rosochatius_observable(i, j, params)(state)


def rosochatius_observable(i: int, j: int, params: ModelParams) -> Observable:
    _check_pair(i, j, params.n)
    if not params.equal_frequencies:
        raise ParameterError("omegas", "K_ij is only an integral for equal frequencies")
    ai, aj = params.alphas[i], params.alphas[j]
    return Observable(f"K_{i + 1}{j + 1}", params.n, _rosochatius_pair_expr(i, j, ai, aj))


def axis_energy(i: int, params: ModelParams) -> Observable:
    """One-axis energy of the separable ``k = 1, s = 1`` members."""
    if params.k != 1.0 or params.s != 1.0 or params.central_sign != 1:
        raise ParameterError("k", "axis energies are integrals only for k = 1, s = 1, central_sign = +1")
    w2 = params.omegas[i] ** 2
    a = params.alphas[i]

    def expr(x, p):
        out = 0.5 * p[i] * p[i] + 0.5 * w2 * x[i] * x[i]
        if a != 0.0:
            out = out + a / (x[i] * x[i])
        return out

    return Observable(f"E_{i + 1}", params.n, expr)


def all_rosochatius(params: ModelParams) -> list[Observable]:
    n = params.n
    return [rosochatius_observable(i, j, params) for i in range(n) for j in range(i + 1, n)]


_ID = re.compile(r"^(H|[KL]_(\d)(\d)|[Exp]_(\d+))$")


def observable_from_id(ident: str, params: ModelParams) -> Observable:
    """Resolve ``H``, ``K_ij``, ``L_ij`` (1-based digits), ``E_i``, ``x_i`` or ``p_i``."""
    m = _ID.match(ident)
    if not m:
        raise ParameterError("observable", f"unknown observable id {ident!r}")
    if ident == "H":
        return hamiltonian_observable(params)
    n = params.n
    if m.group(2):
        i, j = int(m.group(2)) - 1, int(m.group(3)) - 1
        _check_pair(i, j, n)
        if ident[0] == "K":
            return rosochatius_observable(i, j, params)
        return angular_momentum(i, j, n)
    i = int(m.group(4)) - 1
    if not 0 <= i < n:
        raise ParameterError("observable", f"index out of range in {ident!r}")
    kind = ident[0]
    if kind == "E":
        return axis_energy(i, params)
    return coordinate(i, n) if kind == "x" else momentum(i, n)


# --------------------------------------------------------------------------
# polar TTW pieces (canonical pair (r, phi; p_r, p_phi) as x = (r, phi))


def ttw_polar_observable(omega: float, alpha: float, beta: float, k: float) -> Observable:
    def expr(x, p):
        r, phi = x
        c = dual.cos(k * phi)
        s = dual.sin(k * phi)
        r2 = r * r
        return (
            0.5 * (p[0] * p[0] + p[1] * p[1] / r2)
            + 0.5 * omega * omega * r2
            + alpha * k * k / (2.0 * r2 * c * c)
            + beta * k * k / (2.0 * r2 * s * s)
        )

    return Observable("H_ttw", 2, expr)


def ttw_second_observable(k: float, alpha: float, beta: float) -> Observable:
    def expr(x, p):
        c = dual.cos(k * x[1])
        s = dual.sin(k * x[1])
        return p[1] * p[1] + alpha * k * k / (c * c) + beta * k * k / (s * s)

    return Observable("X_ttw", 2, expr)


def polar_phase_state(state: PolarState) -> PhaseState:
    return PhaseState([state.r, state.phi], [state.p_r, state.p_phi])


def ttw_second_integral(k: float, alpha: float, beta: float, state: PolarState) -> float:
    """Separation constant ``p_phi^2 + a k^2/cos^2(k phi) + b k^2/sin^2(k phi)``."""
    c, s = math.cos(k * state.phi), math.sin(k * state.phi)
    if not (c > 0.0 and s > 0.0):
        raise DomainError(f"phi={state.phi!r} is outside the sector (0, pi/(2k)) for k={k!r}")
    return state.p_phi**2 + alpha * k * k / (c * c) + beta * k * k / (s * s)


# --------------------------------------------------------------------------
# reports and rank


@dataclass(frozen=True)
class BracketReport:
    pair: tuple[str, str]
    sample_points: int
    max_abs_bracket: float
    scale: float
    max_relative: float

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "sample_points": self.sample_points,
            "max_abs_bracket": self.max_abs_bracket,
            "scale": self.scale,
            "max_relative": self.max_relative,
        }


def bracket_report(f: Observable, g: Observable, points: Sequence[PhaseState]) -> BracketReport:
    """Largest bracket over ``points``; relative values divide by the per-point term scale."""
    max_abs = 0.0
    max_scale = 0.0
    max_rel = 0.0
    for st in points:
        value, scale = bracket_with_scale(f, g, st)
        max_abs = max(max_abs, abs(value))
        max_scale = max(max_scale, scale)
        max_rel = max(max_rel, abs(value) / scale if scale > 0.0 else 0.0)
    return BracketReport((f.id, g.id), len(points), max_abs, max_scale if max_scale > 0 else 1.0, max_rel)


def independence_rank(observables: Sequence[Observable], params: ModelParams, points: Sequence[PhaseState]) -> int:
    """Maximum numerical rank of the stacked phase-space gradients over ``points``."""
    if not observables:
        raise ParameterError("observables", "need at least one observable")
    best = -1
    failures = []
    for st in points:
        try:
            rows = np.vstack([phase_gradient(o, st) for o in observables])
        except (DomainError, ZeroDivisionError, FloatingPointError) as exc:
            failures.append(str(exc))
            continue
        sv = np.linalg.svd(rows, compute_uv=False)
        top = sv[0] if sv.size else 0.0
        rank = int(np.sum(sv > RANK_TOL * top)) if top > 0.0 else 0
        best = max(best, rank)
    if best < 0:
        raise DomainError(f"every evaluation failed; first error: {failures[0] if failures else 'no points'}")
    return best
