"""Planar coordinate chain linking the polar TTW form to the conformal family.

    polar (r, phi)  ->  Cartesian (x, y)  ->  z = x + i y  ->  (u, v) = (Re z^k, Im z^k)

Momenta follow by cotangent lift.  For the last map the lift reads
``p_x - i p_y = k z^(k-1) (p_u - i p_v)``, which is solved directly in
complex arithmetic.  Non-integer ``k`` uses the principal branch; physical
orbits live in the sector ``0 < phi < pi/(2k)`` where both ``u`` and ``v``
are positive.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import PhaseState
from .dual import rpow as rpow_float
from .errors import DomainError


@dataclass(frozen=True)
class PolarState:
    r: float
    phi: float
    p_r: float
    p_phi: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise DomainError(f"polar radius must be positive, got r={self.r!r}")

    def flat(self) -> np.ndarray:
        return np.array([self.r, self.phi, self.p_r, self.p_phi])

    @classmethod
    def from_flat(cls, z) -> PolarState:
        return cls(*(float(v) for v in z))

    def to_dict(self) -> dict[str, float]:
        return {"r": self.r, "phi": self.phi, "p_r": self.p_r, "p_phi": self.p_phi}

    @classmethod
    def from_dict(cls, data) -> PolarState:
        return cls(float(data["r"]), float(data["phi"]), float(data["p_r"]), float(data["p_phi"]))


@dataclass(frozen=True)
class UVState:
    u: float
    v: float
    p_u: float
    p_v: float

    def __post_init__(self):
        if self.u == 0.0 and self.v == 0.0:
            raise DomainError("(u, v) = (0, 0) is excluded")

    def flat(self) -> np.ndarray:
        return np.array([self.u, self.v, self.p_u, self.p_v])

    @classmethod
    def from_flat(cls, z) -> UVState:
        return cls(*(float(v) for v in z))

    def as_phase_state(self) -> PhaseState:
        return PhaseState([self.u, self.v], [self.p_u, self.p_v])

    @classmethod
    def from_phase_state(cls, state: PhaseState) -> UVState:
        if state.n != 2:
            raise DomainError("a (u, v) state needs n = 2")
        return cls(float(state.x[0]), float(state.x[1]), float(state.p[0]), float(state.p[1]))

    def to_dict(self) -> dict[str, float]:
        return {"u": self.u, "v": self.v, "p_u": self.p_u, "p_v": self.p_v}

    @classmethod
    def from_dict(cls, data) -> UVState:
        return cls(float(data["u"]), float(data["v"]), float(data["p_u"]), float(data["p_v"]))


def in_sector(k: float, phi: float) -> bool:
    return math.sin(k * phi) > 0.0 and math.cos(k * phi) > 0.0


def _check_sector(k: float, state: PolarState) -> None:
    if not in_sector(k, state.phi):
        raise DomainError(f"phi={state.phi!r} is outside the sector (0, pi/(2k)) for k={k!r}")


def eval_ttw_polar(omega: float, alpha: float, beta: float, k: float, state: PolarState) -> float:
    """TTW Hamiltonian in polar coordinates."""
    _check_sector(k, state)
    r, phi = state.r, state.phi
    r2 = r * r
    c = math.cos(k * phi)
    s = math.sin(k * phi)
    kinetic = 0.5 * (state.p_r**2 + state.p_phi**2 / r2)
    return (
        kinetic
        + 0.5 * omega * omega * r2
        + alpha * k * k / (2.0 * r2 * c * c)
        + beta * k * k / (2.0 * r2 * s * s)
    )


def eval_ttw_cartesian(omega: float, alpha: float, beta: float, k: float, state: PhaseState) -> float:
    """TTW Hamiltonian in Cartesian form with the complex-power barrier potential."""
    x, y = float(state.x[0]), float(state.x[1])
    z = complex(x, y)
    zk = _principal_power(z, k)
    zbk = zk.conjugate()
    pref = 2.0 * k * k * rpow_float(x * x + y * y, k - 1.0)
    vk = pref * (alpha / ((zk + zbk) ** 2) - beta / ((zk - zbk) ** 2))
    return 0.5 * float(state.p @ state.p) + 0.5 * omega**2 * (x * x + y * y) + vk.real


def polar_to_cartesian(state: PolarState) -> PhaseState:
    c, s = math.cos(state.phi), math.sin(state.phi)
    r = state.r
    x = (r * c, r * s)
    p = (state.p_r * c - state.p_phi / r * s, state.p_r * s + state.p_phi / r * c)
    return PhaseState(x, p)


def cartesian_to_polar(state: PhaseState) -> PolarState:
    x, y = float(state.x[0]), float(state.x[1])
    px, py = float(state.p[0]), float(state.p[1])
    r = math.hypot(x, y)
    if r == 0.0:
        raise DomainError("polar coordinates are undefined at the origin")
    return PolarState(r, math.atan2(y, x), (x * px + y * py) / r, x * py - y * px)


def _is_integer(k: float) -> bool:
    return float(k).is_integer()


def _principal_power(z: complex, k: float) -> complex:
    if _is_integer(k) and k >= 0:
        return z ** int(k)
    if z == 0:
        raise DomainError("zero radius")
    return cmath.exp(k * cmath.log(z))


def cartesian_to_uv(k: float, state: PhaseState) -> UVState:
    """Map ``(x, y, p_x, p_y)`` to ``(u, v, p_u, p_v)`` via ``w = z^k``.

    Raises:
        DomainError: zero radius, or a point on the branch cut (negative real
            axis) for non-integer ``k``.
    """
    if state.n != 2:
        raise DomainError("the complex-power map is planar (n = 2)")
    x, y = float(state.x[0]), float(state.x[1])
    z = complex(x, y)
    if z == 0:
        raise DomainError("zero radius")
    if not _is_integer(k) and y == 0.0 and x < 0.0:
        raise DomainError(f"({x}, {y}) lies on the principal branch cut for k={k!r}")
    w = _principal_power(z, k)
    dw = k * _principal_power(z, k - 1.0) if k != 1.0 else 1.0 + 0j
    pc = complex(float(state.p[0]), -float(state.p[1])) / dw
    return UVState(w.real, w.imag, pc.real, -pc.imag)


def uv_to_cartesian(k: float, state: UVState) -> PhaseState:
    """Inverse of :func:`cartesian_to_uv` using the principal ``k``-th root."""
    w = complex(state.u, state.v)
    z = _principal_power(w, 1.0 / k)
    dw = k * _principal_power(z, k - 1.0) if k != 1.0 else 1.0 + 0j
    pc = dw * complex(state.p_u, -state.p_v)
    return PhaseState([z.real, z.imag], [pc.real, -pc.imag])


def eval_uv_form(omega: float, alpha: float, beta: float, k: float, s: float, state: UVState) -> float:
    """TTW-type Hamiltonian written in ``(u, v)``, with the interpolating exponent ``s``."""
    u, v = state.u, state.v
    if u == 0.0 or v == 0.0:
        raise DomainError(f"(u, v) = ({u}, {v}) lies on a coordinate plane")
    rho2 = u * u + v * v
    inner = (
        0.5 * (state.p_u**2 + state.p_v**2)
        + omega * omega / (2.0 * k * k) * rpow_float(rho2, (s - k + 1.0) / k)
        + alpha / (2.0 * u * u)
        + beta / (2.0 * v * v)
    )
    return k * k * rpow_float(rho2, (k - 1.0) / k) * inner


# --------------------------------------------------------------------------
# canonicity

PhaseMap = Callable[[np.ndarray], np.ndarray]


def symplectic_matrix(n: int) -> np.ndarray:
    """Standard ``Omega = [[0, I], [-I, 0]]`` for coordinates ordered ``(q, p)``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def jacobian_fd(fn: PhaseMap, point, step: float) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    m = point.size
    cols = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = step
        hi, lo = point + e, point - e
        try:
            # divide by the representable step so linear maps differentiate exactly
            cols.append((np.asarray(fn(hi)) - np.asarray(fn(lo))) / (hi[j] - lo[j]))
        except DomainError as exc:
            raise DomainError(f"map evaluation failed inside the stencil at coordinate {j}: {exc}") from exc
    return np.column_stack(cols)


def symplectic_defect(fn: PhaseMap, point, step: float = 1e-5) -> float:
    """Max-norm of ``J^T Omega J - Omega`` for the finite-difference Jacobian ``J``."""
    jac = jacobian_fd(fn, point, step)
    omega = symplectic_matrix(jac.shape[0] // 2)
    return float(np.max(np.abs(jac.T @ omega @ jac - omega)))


def polar_to_cartesian_flat(z: np.ndarray) -> np.ndarray:
    return polar_to_cartesian(PolarState.from_flat(z)).flat()


def cartesian_to_uv_flat(k: float) -> PhaseMap:
    def fn(z: np.ndarray) -> np.ndarray:
        return cartesian_to_uv(k, PhaseState.from_flat(z)).flat()

    return fn


def polar_to_uv(k: float, state: PolarState) -> UVState:
    return cartesian_to_uv(k, polar_to_cartesian(state))


def uv_to_polar(k: float, state: UVState) -> PolarState:
    return cartesian_to_polar(uv_to_cartesian(k, state))
