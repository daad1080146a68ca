"""Forward-mode automatic differentiation with multi-component dual numbers.

A :class:`Dual` carries a value and a whole gradient vector, so one pass of a
function yields all of its first partials.  Values may themselves be duals,
which gives second derivatives by nesting (used for Jacobi-identity checks on
brackets of brackets).

The helpers :func:`rpow`, :func:`sqrt`, :func:`sin`, :func:`cos` accept plain
floats, numpy arrays and duals alike, so model formulas are written once and
reused for evaluation, vectorised trajectory post-processing and
differentiation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


class Dual:
    """Number ``val + der . eps`` with a vector of infinitesimal parts."""

    __slots__ = ("val", "der")

    def __init__(self, val, der):
        self.val = val
        self.der = der

    @classmethod
    def variables(cls, values, offset: int = 0, size: int | None = None) -> list[Dual]:
        """Seed ``values`` as independent variables ``offset, offset+1, ...``."""
        size = len(values) + offset if size is None else size
        eye = np.eye(size)
        return [cls(v, eye[offset + i]) for i, v in enumerate(values)]

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(self.val + other, self.der)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.der - other.der)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(self.val - other, self.der)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(other - self.val, -self.der)

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.der * other.val + other.der * self.val)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(self.val * other, self.der * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if real_part(other.val) == 0.0:
                raise DomainError("division by a dual with zero real part")
            inv = 1.0 / other.val
            val = self.val * inv
            return Dual(val, (self.der - other.der * val) * inv)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(self.val / other, self.der / other)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if real_part(self.val) == 0.0:
            raise DomainError("division by a dual with zero real part")
        inv = 1.0 / self.val
        val = other * inv
        return Dual(val, self.der * (-val * inv))

    def __pow__(self, q):
        if isinstance(q, (Dual, np.ndarray)):
            return NotImplemented
        if float(q).is_integer() and q >= 0:
            return _ipow(self, int(q))
        return rpow(self, float(q))


def _ipow(d: Dual, m: int) -> Dual:
    if m == 0:
        return Dual(1.0, d.der * 0.0)
    if m == 1:
        return d
    return Dual(d.val**m, d.der * (m * d.val ** (m - 1)))


def real_part(v) -> float:
    """Innermost real value of a (possibly nested) dual."""
    while isinstance(v, Dual):
        v = v.val
    return v


def rpow(base, q: float):
    """Real-branch power ``base**q`` for nonnegative bases.

    Follows the conventions ``0**q = 0`` for ``q > 0`` and ``b**0 = 1``
    (a constant, also at ``b = 0``); raises :class:`DomainError` for
    ``q < 0`` at zero or for negative bases.
    """
    if q == 0.0:
        if np.any(np.asarray(real_part(base) if isinstance(base, Dual) else base) < 0.0):
            raise DomainError("negative base in real power")
        return np.ones_like(base, dtype=float) if isinstance(base, np.ndarray) else 1.0
    if isinstance(base, Dual):
        b = real_part(base)
        if b < 0.0:
            raise DomainError(f"negative base {b!r} in real power")
        if b == 0.0:
            if q <= 0.0:
                raise DomainError(f"0**{q!r} is undefined")
            if q < 1.0:
                raise DomainError(f"derivative of x**{q!r} is unbounded at 0")
            if q == 1.0:
                return base
            return Dual(rpow(base.val, q), base.der * (q * rpow(base.val, q - 1.0)))
        pv = rpow(base.val, q)
        return Dual(pv, base.der * (q * pv / base.val))
    if isinstance(base, np.ndarray):
        if np.any(base < 0.0):
            raise DomainError("negative base in real power")
        if q <= 0.0 and np.any(base == 0.0):
            raise DomainError(f"0**{q!r} is undefined")
        return np.power(base, q)
    if base < 0.0:
        raise DomainError(f"negative base {base!r} in real power")
    if base == 0.0:
        if q <= 0.0:
            raise DomainError(f"0**{q!r} is undefined")
        return 0.0
    if q == 0.0:
        return 1.0
    return math.pow(base, q)


def sqrt(x):
    return rpow(x, 0.5)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.val), x.der * cos(x.val))
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.val), x.der * (-sin(x.val)))
    return np.cos(x)


def gradient(fn, values) -> tuple[float, np.ndarray]:
    """Value and gradient of ``fn(list_of_scalars)`` at float ``values``."""
    seeds = Dual.variables(list(values))
    out = fn(seeds)
    if not isinstance(out, Dual):
        return float(out), np.zeros(len(seeds))
    return float(out.val), np.asarray(out.der, dtype=float)


def derivative_parts(v, size: int):
    """Return ``(val, der)`` treating non-duals as constants."""
    if isinstance(v, Dual):
        return v.val, v.der
    return v, np.zeros(size)
