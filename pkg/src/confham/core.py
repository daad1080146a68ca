"""Parameter record, phase states and the conformal Hamiltonian family.

The classical Hamiltonian evaluated here is

    H = F(x) * (T(p) + W(x)),
    F = (|x|^2 + gamma)^((k-1)/k),
    T = 1/2 |p|^2,
    W = sigma/(2 k^2) * (sum_i omega_i^2 x_i^2)^((s-k+1)/k) + sum_i alpha_i / x_i^2,

with ``sigma = central_sign`` in {+1, -1}.  All formulas below are written on
generic scalars so the same code serves floats, numpy column arrays and dual
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import dual
from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Full parameter record of the family.

    ``n`` may be 1 for the one-dimensional quantum checks; every classical
    construction in the package uses ``n >= 2``.
    """

    n: int
    k: float
    s: float
    gamma: float = 0.0
    central_sign: int = 1
    omegas: tuple[float, ...] = ()
    alphas: tuple[float, ...] = ()

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ParameterError("n", f"must be a positive integer, got {n!r}")
        object.__setattr__(self, "n", int(n))
        for name in ("k", "s", "gamma"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise ParameterError(name, f"must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ParameterError(name, f"must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.k == 0.0:
            raise ParameterError("k", "must be nonzero")
        if self.gamma < 0.0:
            raise ParameterError("gamma", f"must be nonnegative, got {self.gamma!r}")
        if self.central_sign not in (1, -1):
            raise ParameterError("central_sign", f"must be +1 or -1, got {self.central_sign!r}")
        object.__setattr__(self, "central_sign", int(self.central_sign))
        omegas = self.omegas if len(self.omegas) else (1.0,) * self.n
        alphas = self.alphas if len(self.alphas) else (0.0,) * self.n
        object.__setattr__(self, "omegas", _real_tuple("omegas", omegas, self.n))
        object.__setattr__(self, "alphas", _real_tuple("alphas", alphas, self.n))
        if any(w < 0.0 for w in self.omegas):
            raise ParameterError("omegas", "frequencies must be nonnegative")
        if self.central_sign == -1 and len(set(self.omegas)) > 1:
            raise ParameterError("central_sign", "central_sign = -1 requires equal omegas")

    @property
    def central_exponent(self) -> float:
        """Exponent ``(s - k + 1)/k`` of the central term."""
        return (self.s - self.k + 1.0) / self.k

    @property
    def conformal_exponent(self) -> float:
        return (self.k - 1.0) / self.k

    @property
    def equal_frequencies(self) -> bool:
        return len(set(self.omegas)) == 1

    def replace(self, **changes) -> ModelParams:
        data = self.to_dict()
        data.update(changes)
        return ModelParams.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "s": self.s,
            "gamma": self.gamma,
            "central_sign": self.central_sign,
            "omegas": list(self.omegas),
            "alphas": list(self.alphas),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ModelParams:
        allowed = {"n", "k", "s", "gamma", "central_sign", "omegas", "alphas"}
        extra = set(data) - allowed
        if extra:
            raise ParameterError(sorted(extra)[0], "unknown model parameter")
        for key in ("n", "k", "s"):
            if key not in data:
                raise ParameterError(key, "missing")
        return cls(
            n=data["n"],
            k=data["k"],
            s=data["s"],
            gamma=data.get("gamma", 0.0),
            central_sign=data.get("central_sign", 1),
            omegas=tuple(data.get("omegas", ())),
            alphas=tuple(data.get("alphas", ())),
        )


def _real_tuple(name: str, values, n: int) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ParameterError(name, f"must be a list of reals, got {values!r}") from None
    if len(out) != n:
        raise ParameterError(name, f"needs {n} entries, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ParameterError(name, "entries must be finite")
    return out


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Positions ``x`` and conjugate momenta ``p`` (read-only float arrays)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if x.shape != p.shape:
            raise ParameterError("p", f"dimension {p.size} does not match x ({x.size})")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.x.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_flat(cls, z) -> PhaseState:
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return cls(z[:n], z[n:])

    def to_dict(self) -> dict[str, list[float]]:
        return {"x": self.x.tolist(), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PhaseState:
        for key in ("x", "p"):
            if key not in data:
                raise ParameterError(key, "missing from phase state")
        return cls(data["x"], data["p"])

    def __eq__(self, other):
        if not isinstance(other, PhaseState):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True)
class EnergyBreakdown:
    conformal_factor: float
    kinetic: float
    central: float
    rosochatius: float
    total: float

    def to_dict(self) -> dict[str, float]:
        return {
            "conformal_factor": self.conformal_factor,
            "kinetic": self.kinetic,
            "central": self.central,
            "rosochatius": self.rosochatius,
            "total": self.total,
        }


# --------------------------------------------------------------------------
# generic building blocks (floats, arrays or duals)


def conformal_factor(params: ModelParams, x: Sequence):
    if params.conformal_exponent == 0.0:
        return 1.0
    r2 = sum(xi * xi for xi in x) + params.gamma
    return dual.rpow(r2, params.conformal_exponent)


def central_term(params: ModelParams, x: Sequence):
    q = sum((w * w) * xi * xi for w, xi in zip(params.omegas, x))
    coeff = params.central_sign / (2.0 * params.k * params.k)
    if params.central_exponent == 0.0:
        return coeff
    return coeff * dual.rpow(q, params.central_exponent)


def rosochatius_term(params: ModelParams, x: Sequence):
    total = 0.0
    for a, xi in zip(params.alphas, x):
        if a != 0.0:
            total = total + a / (xi * xi)
    return total


def potential(params: ModelParams, x: Sequence):
    """``W(x)``: central plus Rosochatius terms."""
    return central_term(params, x) + rosochatius_term(params, x)


def kinetic_term(p: Sequence):
    return 0.5 * sum(pi * pi for pi in p)


def hamiltonian_expr(params: ModelParams, x: Sequence, p: Sequence):
    """Hamiltonian on generic scalar sequences (used for differentiation)."""
    return conformal_factor(params, x) * (kinetic_term(p) + potential(params, x))


def check_admissible(params: ModelParams, state: PhaseState) -> None:
    """Raise :class:`DomainError` if ``state`` is outside the definition domain."""
    if state.n != params.n:
        raise DomainError(f"state has dimension {state.n}, model has n={params.n}")
    x = state.x
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(state.p))):
        raise DomainError(f"non-finite phase-space point x={x.tolist()}")
    for i, (a, xi) in enumerate(zip(params.alphas, x)):
        if a != 0.0 and xi == 0.0:
            raise DomainError(f"Rosochatius term alpha_{i + 1}/x_{i + 1}^2 undefined at x={x.tolist()}")
    r2 = float(np.dot(x, x))
    if params.gamma == 0.0 and params.k != 1.0 and r2 == 0.0:
        raise DomainError("conformal factor undefined at the origin")
    q = float(np.dot(np.square(params.omegas), np.square(x)))
    if q == 0.0 and params.central_exponent < 0.0:
        raise DomainError(
            f"central term (sum omega^2 x^2)^{params.central_exponent:g} undefined at x={x.tolist()}"
        )


def eval_breakdown(params: ModelParams, state: PhaseState) -> EnergyBreakdown:
    check_admissible(params, state)
    x = [float(v) for v in state.x]
    fac = float(conformal_factor(params, x))
    kin = float(kinetic_term([float(v) for v in state.p]))
    cen = float(central_term(params, x))
    ros = float(rosochatius_term(params, x))
    return EnergyBreakdown(fac, kin, cen, ros, fac * (kin + cen + ros))


def eval_hamiltonian(params: ModelParams, state: PhaseState) -> float:
    """Value of the Hamiltonian at ``state``.

    Raises:
        DomainError: a Rosochatius term, the conformal factor or the central
            power is undefined at ``state``.
    """
    return eval_breakdown(params, state).total


def hamiltonian_columns(params: ModelParams, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Vectorised Hamiltonian over rows of ``x`` and ``p`` (shape ``(m, n)``)."""
    xs = [x[:, i] for i in range(params.n)]
    ps = [p[:, i] for i in range(params.n)]
    fac = conformal_factor(params, xs)
    return fac * (kinetic_term(ps) + potential(params, xs))


def grad_expr(params: ModelParams, x: Sequence, p: Sequence):
    """Closed-form partials ``(dH/dx, dH/dp)`` as lists of generic scalars."""
    k, e = params.k, params.central_exponent
    r2 = sum(xi * xi for xi in x) + params.gamma
    fac = conformal_factor(params, x)
    energy_bracket = kinetic_term(p) + potential(params, x)
    dfac_coeff = 2.0 * params.conformal_exponent
    if dfac_coeff != 0.0:
        dfac_base = dual.rpow(r2, -1.0 / k)
    coeff = params.central_sign / (2.0 * k * k)
    if e != 0.0:
        q = sum((w * w) * xi * xi for w, xi in zip(params.omegas, x))
        dcen_base = 2.0 * coeff * e * dual.rpow(q, e - 1.0)
    dx = []
    for w, a, xi in zip(params.omegas, params.alphas, x):
        dw = 0.0
        if e != 0.0 and w != 0.0:
            dw = dcen_base * (w * w) * xi
        if a != 0.0:
            dw = dw - 2.0 * a / (xi * xi * xi)
        term = fac * dw
        if dfac_coeff != 0.0:
            term = term + dfac_coeff * xi * dfac_base * energy_bracket
        dx.append(term)
    dp = [fac * pi for pi in p]
    return dx, dp


def grad_hamiltonian(params: ModelParams, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient ``(dH/dx, dH/dp)``.

    Requires ``sum omega^2 x^2 > 0`` whenever the central exponent is below 1.
    """
    check_admissible(params, state)
    e = params.central_exponent
    q = float(np.dot(np.square(params.omegas), np.square(state.x)))
    if e != 0.0 and e < 1.0 and q == 0.0:
        raise DomainError("central-term derivative undefined where sum omega^2 x^2 = 0")
    dx, dp = grad_expr(params, [float(v) for v in state.x], [float(v) for v in state.p])
    return np.array(dx, dtype=float), np.array(dp, dtype=float)


def random_admissible_state(
    params: ModelParams,
    rng: np.random.Generator,
    x_range: tuple[float, float] = (0.5, 2.0),
    p_range: tuple[float, float] = (-1.0, 1.0),
) -> PhaseState:
    """Uniform point in the positive orthant box, scale balanced."""
    x = rng.uniform(*x_range, size=params.n)
    p = rng.uniform(*p_range, size=params.n)
    return PhaseState(x, p)
