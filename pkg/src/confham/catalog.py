"""Named specializations of the conformal family.

Each entry binds a :class:`ModelParams`, names the observables known to be
conserved and, where classical mechanics fixes it, the expected rotation
number.  Every entry also carries an independently coded textbook form of its
Hamiltonian so the specialization can be checked pointwise.

Coupling conventions.  With equal frequencies the family's central term is
``sigma/(2k^2) omega^(2e) |x|^(2e)`` where ``e = (s-k+1)/k``.  A textbook
coupling is therefore stored as the frequency ``omega`` solving
``omega^(2e) = coupling'`` for the matching rescaled ``coupling'``.  When
``e = 0`` the coupling cannot be absorbed into ``omega`` and only the value
the family produces by itself is accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Callable, Mapping

import numpy as np

from .core import ModelParams, PhaseState
from .errors import DomainError, ParameterError
from .transforms import UVState, eval_ttw_polar, uv_to_polar

FRAMES = ("cartesian", "polar", "uv")


@dataclass(frozen=True)
class ReductionEntry:
    name: str
    params: ModelParams
    coordinate_frame: str
    known_integrals: tuple[str, ...]
    expected_closure: Fraction | str | None
    notes: str
    bindings: Mapping[str, Any] = field(default_factory=dict)
    initial: PhaseState | None = None

    def reference_hamiltonian(self, state: PhaseState) -> float:
        """Textbook value at ``state`` (coordinates in this entry's frame)."""
        return _REFERENCES[self.name](self, state)

    def default_initial(self) -> PhaseState:
        if self.initial is None:
            raise DomainError(f"entry {self.name!r} has no default initial state")
        return self.initial

    def to_dict(self) -> dict[str, Any]:
        closure = self.expected_closure
        if isinstance(closure, Fraction):
            closure = f"{closure.numerator}/{closure.denominator}"
        return {
            "name": self.name,
            "params": self.params.to_dict(),
            "coordinate_frame": self.coordinate_frame,
            "known_integrals": list(self.known_integrals),
            "expected_closure": closure,
            "notes": self.notes,
            "bindings": dict(self.bindings),
        }


# --------------------------------------------------------------------------
# binding helpers

_ALIASES = {"lambda": "lam", "ω": "omega", "λ": "lam", "γ": "gamma", "α": "alpha", "β": "beta"}


def _normalize(bindings: Mapping[str, Any] | None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in (bindings or {}).items():
        out[_ALIASES.get(key, key)] = value
    return out


def _real(b: Mapping[str, Any], key: str, default: float | None = None) -> float:
    if key not in b:
        if default is None:
            raise ParameterError(key, "missing binding")
        return default
    v = b[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParameterError(key, f"must be a real number, got {v!r}")
    return float(v)


def _positive(b: Mapping[str, Any], key: str, default: float | None = None) -> float:
    v = _real(b, key, default)
    if not v > 0.0:
        raise ParameterError(key, f"must be positive, got {v!r}")
    return v


def _dimension(b: Mapping[str, Any], default: int | None = None, minimum: int = 2) -> int:
    if "n" not in b:
        if default is None:
            raise ParameterError("n", "missing binding")
        return default
    n = b["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < minimum:
        raise ParameterError("n", f"must be an integer >= {minimum}, got {n!r}")
    return n


def _alphas(b: Mapping[str, Any], n: int, default: float) -> tuple[float, ...]:
    if "alphas" not in b:
        return (default,) * n
    vals = b["alphas"]
    if not isinstance(vals, (list, tuple)) or len(vals) != n:
        raise ParameterError("alphas", f"must be a list of {n} reals")
    return tuple(float(v) for v in vals)


def _omega_for(coupling: float, e: float, key: str, natural: float) -> float:
    """Frequency ``w`` with ``w^(2e) = coupling``; ``natural`` is the only value allowed at e = 0."""
    if e == 0.0:
        if not math.isclose(coupling, natural, rel_tol=1e-12):
            raise ParameterError(key, f"the central exponent vanishes here; only {key}={natural:g} is representable")
        return 1.0
    return coupling ** (1.0 / (2.0 * e))


def _as_rational(x: float, q_max: int = 64) -> Fraction | None:
    f = Fraction(x).limit_denominator(q_max)
    return f if abs(float(f) - x) <= 1e-12 * max(1.0, abs(x)) else None


def _pairs(n: int, prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}_{i + 1}{j + 1}" for i, j in combinations(range(n), 2))


def _energies(n: int) -> tuple[str, ...]:
    return tuple(f"E_{i + 1}" for i in range(n))


def _orthant_state(n: int, p_scale: float = 0.3) -> PhaseState:
    x = [1.0 + 0.15 * i for i in range(n)]
    p = [p_scale * (-1.0) ** i * (1.0 - 0.2 * i) for i in range(n)]
    return PhaseState(x, p)


# --------------------------------------------------------------------------
# entries


def _ttw(b):
    k = _positive(b, "k")
    omega = _positive(b, "omega", 1.0)
    alpha = _positive(b, "alpha", 0.1)
    beta = _positive(b, "beta", 0.1)
    e = (2.0 - k) / k
    w = _omega_for(omega * omega, e, "omega", 1.0)
    params = ModelParams(2, k, 1.0, 0.0, 1, (w, w), (alpha / 2.0, beta / 2.0))
    return dict(
        params=params,
        frame="uv",
        integrals=("H", "K_12"),
        closure=None if _as_rational(k) is None else _as_rational(k) / 2,
        notes="TTW in (u, v) = (Re z^k, Im z^k); equals the polar form divided by k^2.",
        bound={"k": k, "omega": omega, "alpha": alpha, "beta": beta},
        initial=PhaseState([1.0, 1.2], [0.3, -0.2]),
    )


def _gks(b):
    k = _positive(b, "k")
    lam = _positive(b, "lam", 2.0)
    alpha = _positive(b, "alpha", 0.1)
    beta = _positive(b, "beta", 0.1)
    e = (0.5 - k) / k
    w = _omega_for(2.0 * lam, e, "lam", 1.0)
    params = ModelParams(2, k, -0.5, 0.0, -1, (w, w), (alpha / 2.0, beta / 2.0))
    return dict(
        params=params,
        frame="uv",
        integrals=("H", "K_12"),
        closure=_as_rational(k),
        notes="Generalized Kepler in (u, v); equals the polar form -lam/r plus barriers, divided by k^2.",
        bound={"k": k, "lam": lam, "alpha": alpha, "beta": beta},
        initial=PhaseState([1.0, 1.2], [0.2, -0.1]),
    )


def _nttw(b):
    n = _dimension(b)
    k = _positive(b, "k")
    omega = _positive(b, "omega", 1.0)
    alphas = _alphas(b, n, 0.05)
    w = _omega_for(omega * omega, (2.0 - k) / k, "omega", 1.0)
    return dict(
        params=ModelParams(n, k, 1.0, 0.0, 1, (w,) * n, alphas),
        frame="cartesian",
        integrals=("H", *_pairs(n, "K")),
        closure=_ttw({"k": k})["closure"] if n == 2 else None,
        notes="n-dimensional TTW generalization; K_ij give 2n-2 integrals with H.",
        bound={"n": n, "k": k, "omega": omega, "alphas": list(alphas)},
        initial=_orthant_state(n),
    )


def _ngks(b):
    n = _dimension(b)
    k = _positive(b, "k")
    omega = _positive(b, "omega", 4.0)
    alphas = _alphas(b, n, 0.05)
    w = _omega_for(omega * omega, (0.5 - k) / k, "omega", 1.0)
    return dict(
        params=ModelParams(n, k, -0.5, 0.0, -1, (w,) * n, alphas),
        frame="cartesian",
        integrals=("H", *_pairs(n, "K")),
        closure="closed",
        notes="n-dimensional generalized Kepler; closed bounded orbits are conjectured for n = 3 and 4.",
        bound={"n": n, "k": k, "omega": omega, "alphas": list(alphas)},
        initial=_orthant_state(n, 0.2),
    )


def _rosochatius(b, n=None, name="rosochatius"):
    n = _dimension(b) if n is None else n
    omega = _positive(b, "omega", 1.0)
    alphas = _alphas(b, n, 0.05)
    if n == 2 and ("alpha" in b or "beta" in b):
        alphas = (_real(b, "alpha", 0.05), _real(b, "beta", 0.05))
    return dict(
        params=ModelParams(n, 1.0, 1.0, 0.0, 1, (omega,) * n, alphas),
        frame="cartesian",
        integrals=("H", *_energies(n), *_pairs(n, "K")),
        closure=Fraction(1, 2),
        notes="Isotropic oscillator with Rosochatius barriers; maximally superintegrable.",
        bound={"n": n, "omega": omega, "alphas": list(alphas)},
        initial=_orthant_state(n),
    )


def _sw1(b):
    out = _rosochatius(b, n=2)
    out["notes"] = "Smorodinsky-Winternitz I: planar isotropic oscillator with two barriers."
    return out


def _sw2(b):
    omega = _positive(b, "omega", 1.0)
    beta = _real(b, "beta", 0.1)
    return dict(
        params=ModelParams(2, 1.0, 1.0, 0.0, 1, (2.0 * omega, omega), (0.0, beta)),
        frame="cartesian",
        integrals=("H", "E_1", "E_2"),
        closure="closed",
        notes="Smorodinsky-Winternitz II: 2:1 oscillator with a barrier on the second axis.",
        bound={"omega": omega, "beta": beta},
        initial=PhaseState([0.3, 1.0], [0.2, 0.3]),
    )


def _kepler(b):
    n = _dimension(b)
    lam = _positive(b, "lam", 1.0)
    w = 1.0 / (2.0 * lam)
    return dict(
        params=ModelParams(n, 1.0, -0.5, 0.0, -1, (w,) * n, (0.0,) * n),
        frame="cartesian",
        integrals=("H", *_pairs(n, "L")),
        closure=Fraction(1, 1),
        notes="Kepler problem -lam/r; bounded orbits are ellipses.",
        bound={"n": n, "lam": lam},
        initial=PhaseState([1.0] + [0.2] * (n - 1), [-0.1, 0.8] + [0.0] * (n - 2)),
    )


def _harmonic(b):
    n = _dimension(b)
    if "omegas" in b:
        vals = b["omegas"]
        if not isinstance(vals, (list, tuple)) or len(vals) != n:
            raise ParameterError("omegas", f"must be a list of {n} reals")
        omegas = tuple(float(v) for v in vals)
    else:
        omegas = (_positive(b, "omega", 1.0),) * n
    equal = len(set(omegas)) == 1
    integrals = ("H", *_energies(n)) + (_pairs(n, "L") if equal else ())
    ratios = [_as_rational(w / omegas[0], 16) if omegas[0] > 0 else None for w in omegas]
    closure = Fraction(1, 2) if equal else ("closed" if all(r is not None for r in ratios) else None)
    return dict(
        params=ModelParams(n, 1.0, 1.0, 0.0, 1, omegas, (0.0,) * n),
        frame="cartesian",
        integrals=integrals,
        closure=closure,
        notes="Harmonic oscillator, possibly anisotropic.",
        bound={"n": n, "omegas": list(omegas)},
        initial=PhaseState([1.0] + [0.2] * (n - 1), [0.0, 0.6] + [0.0] * (n - 2)),
    )


def _behr_curved(b):
    n = _dimension(b)
    gamma = _positive(b, "gamma")
    lam = _positive(b, "lam", 1.0)
    alphas = _alphas(b, n, 0.05)
    # central term with k = 1/2, s = 0 is 2 omega^2 |x|^2
    w = math.sqrt(lam / 2.0)
    return dict(
        params=ModelParams(n, 0.5, 0.0, gamma, 1, (w,) * n, alphas),
        frame="cartesian",
        integrals=("H", *_pairs(n, "K")),
        closure="closed",
        notes="Maximally superintegrable model on a space of nonconstant curvature.",
        bound={"n": n, "gamma": gamma, "lam": lam, "alphas": list(alphas)},
        initial=_orthant_state(n),
    )


def _rw02(b):
    n = _dimension(b)
    lam = _positive(b, "lam", 1.0)
    alphas = _alphas(b, n, 0.05)
    if alphas[-1] != 0.0:
        alphas = alphas[:-1] + (0.0,)
    w = 1.0 / (2.0 * lam)
    return dict(
        params=ModelParams(n, 1.0, -0.5, 0.0, -1, (w,) * n, alphas),
        frame="cartesian",
        integrals=("H", *_pairs(n, "K")),
        closure="closed",
        notes="Kepler with Rosochatius barriers on all but the last axis (exactly solvable).",
        bound={"n": n, "lam": lam, "alphas": list(alphas)},
        initial=_orthant_state(n, 0.4),
    )


_BUILDERS: dict[str, Callable[[dict], dict]] = {
    "ttw": _ttw,
    "gks": _gks,
    "nttw": _nttw,
    "ngks": _ngks,
    "sw1": _sw1,
    "sw2": _sw2,
    "rosochatius": _rosochatius,
    "kepler": _kepler,
    "harmonic": _harmonic,
    "behr_curved": _behr_curved,
    "rw02": _rw02,
}

CATALOG_NAMES = tuple(_BUILDERS)

# bindings used when every entry is exercised at once
SAMPLE_BINDINGS: dict[str, dict[str, Any]] = {
    "ttw": {"k": 3.0, "omega": 1.3, "alpha": 0.4, "beta": 0.7},
    "gks": {"k": 1.5, "lam": 1.7, "alpha": 0.3, "beta": 0.5},
    "nttw": {"n": 3, "k": 1.5, "omega": 1.2, "alphas": [0.1, 0.2, 0.3]},
    "ngks": {"n": 3, "k": 2.0, "omega": 4.0, "alphas": [0.1, 0.2, 0.3]},
    "sw1": {"omega": 1.4, "alpha": 0.2, "beta": 0.3},
    "sw2": {"omega": 1.1, "beta": 0.4},
    "rosochatius": {"n": 3, "omega": 0.9, "alphas": [0.1, 0.2, 0.3]},
    "kepler": {"n": 3, "lam": 1.3},
    "harmonic": {"n": 3, "omegas": [1.0, 2.0, 3.0]},
    "behr_curved": {"n": 3, "gamma": 1.0, "lam": 0.8, "alphas": [0.1, 0.2, 0.3]},
    "rw02": {"n": 3, "lam": 1.2, "alphas": [0.1, 0.2, 0.0]},
}


def instantiate_reduction(name: str, bindings: Mapping[str, Any] | None = None) -> ReductionEntry:
    """Build the catalog entry ``name`` with the given parameter bindings.

    Raises:
        ParameterError: unknown name (field ``name``), a missing required
            binding or an invalid value (field = binding key).
    """
    if name not in _BUILDERS:
        raise ParameterError("name", f"unknown reduction {name!r}; known: {', '.join(CATALOG_NAMES)}")
    b = _normalize(bindings)
    out = _BUILDERS[name](b)
    return ReductionEntry(
        name=name,
        params=out["params"],
        coordinate_frame=out["frame"],
        known_integrals=tuple(out["integrals"]),
        expected_closure=out["closure"],
        notes=out["notes"],
        bindings=out["bound"],
        initial=out["initial"],
    )


# --------------------------------------------------------------------------
# textbook forms, coded without the family's formula


def _polar_gks(lam, alpha, beta, k, ps) -> float:
    r2 = ps.r * ps.r
    c = math.cos(k * ps.phi)
    s = math.sin(k * ps.phi)
    return (
        0.5 * (ps.p_r**2 + ps.p_phi**2 / r2)
        - lam / ps.r
        + alpha * k * k / (2.0 * r2 * c * c)
        + beta * k * k / (2.0 * r2 * s * s)
    )


def _ref_ttw(entry, state):
    b = entry.bindings
    k = b["k"]
    ps = uv_to_polar(k, UVState.from_phase_state(state))
    return eval_ttw_polar(b["omega"], b["alpha"], b["beta"], k, ps) / (k * k)


def _ref_gks(entry, state):
    b = entry.bindings
    k = b["k"]
    ps = uv_to_polar(k, UVState.from_phase_state(state))
    return _polar_gks(b["lam"], b["alpha"], b["beta"], k, ps) / (k * k)


def _barriers(alphas, x) -> float:
    return sum(a / (xi * xi) for a, xi in zip(alphas, x) if a != 0.0)


def _ref_nttw(entry, state):
    b = entry.bindings
    k, w = b["k"], b["omega"]
    r2 = float(np.sum(state.x**2))
    inner = 0.5 * float(np.sum(state.p**2)) + w * w / (2 * k * k) * r2 ** ((2 - k) / k)
    return r2 ** ((k - 1) / k) * (inner + _barriers(b["alphas"], state.x))


def _ref_ngks(entry, state):
    b = entry.bindings
    k, w = b["k"], b["omega"]
    r2 = float(np.sum(state.x**2))
    inner = 0.5 * float(np.sum(state.p**2)) - w * w / (2 * k * k) * r2 ** ((1 - 2 * k) / (2 * k))
    return r2 ** ((k - 1) / k) * (inner + _barriers(b["alphas"], state.x))


def _ref_rosochatius(entry, state):
    b = entry.bindings
    w = b["omega"]
    return (
        0.5 * float(np.sum(state.p**2))
        + 0.5 * w * w * float(np.sum(state.x**2))
        + _barriers(b["alphas"], state.x)
    )


def _ref_sw2(entry, state):
    b = entry.bindings
    x, y = state.x
    w = b["omega"]
    return 0.5 * float(np.sum(state.p**2)) + 0.5 * w * w * (4 * x * x + y * y) + b["beta"] / (y * y)


def _ref_kepler(entry, state):
    return 0.5 * float(np.sum(state.p**2)) - entry.bindings["lam"] / float(np.linalg.norm(state.x))


def _ref_harmonic(entry, state):
    w = np.asarray(entry.bindings["omegas"])
    return 0.5 * float(np.sum(state.p**2)) + 0.5 * float(np.sum((w * state.x) ** 2))


def _ref_behr(entry, state):
    b = entry.bindings
    r2 = float(np.sum(state.x**2))
    top = 0.5 * float(np.sum(state.p**2)) + b["lam"] * r2 + _barriers(b["alphas"], state.x)
    return top / (r2 + b["gamma"])


def _ref_rw02(entry, state):
    b = entry.bindings
    return _ref_kepler(entry, state) + _barriers(b["alphas"], state.x)


_REFERENCES = {
    "ttw": _ref_ttw,
    "gks": _ref_gks,
    "nttw": _ref_nttw,
    "ngks": _ref_ngks,
    "sw1": _ref_rosochatius,
    "sw2": _ref_sw2,
    "rosochatius": _ref_rosochatius,
    "kepler": _ref_kepler,
    "harmonic": _ref_harmonic,
    "behr_curved": _ref_behr,
    "rw02": _ref_rw02,
}
