"""Independent reference values and solvers used by the test suite.

Nothing here imports the package: every number is either a hand
substitution or comes from an independent method (shooting, closed forms).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

SQRT2 = math.sqrt(2.0)

# n=2, k=2, s=1, omega=(1,1), alpha=(1,1); x=(1,1), p=(1,0):
# F = sqrt(2), T = 1/2, central = 1/8 (exponent 0), barriers = 1 + 1
H_K2_EXAMPLE = SQRT2 * (0.5 + 0.125 + 2.0)

# polar TTW, omega=alpha=beta=1, k=2 at r=1, phi=pi/8, momenta 0
TTW_POLAR_EXAMPLE = 8.5
# (u, v) form, k=2, s=1, omega=1, alpha=beta=0 at u=v=1, p=(1,0)
UV_FORM_EXAMPLE = 2.5 * SQRT2
# separation constant, k=2, alpha=beta=1 at phi=pi/8, p_phi=0
TTW_X_EXAMPLE = 16.0


def kepler_period(a: float, mu: float = 1.0) -> float:
    return 2.0 * math.pi * a**1.5 / math.sqrt(mu)


def kepler_pericenter_state(a: float, e: float, mu: float = 1.0):
    """Pericenter on the positive x_1 axis, counterclockwise."""
    rp = a * (1.0 - e)
    vp = math.sqrt(mu * (1.0 + e) / rp)
    return [rp, 0.0], [0.0, vp]


def _shoot(energy, omega, alpha, x0, length):
    ell = -0.5 + math.sqrt(0.25 + 2.0 * alpha)

    def rhs(x, y):
        v = 0.5 * omega * omega * x * x + alpha / (x * x)
        return [y[1], 2.0 * (v - energy) * y[0]]

    # regular solution psi ~ x^(l+1) near the barrier
    y0 = [x0 ** (ell + 1.0), (ell + 1.0) * x0**ell]
    sol = solve_ivp(rhs, (x0, length), y0, method="DOP853", rtol=1e-11, atol=1e-14)
    return sol.y[0, -1] / max(abs(sol.y[0]).max(), 1e-300)


def rosochatius_shooting_levels(omega: float, alpha: float, count: int, length: float = 10.0,
                                x0: float = 1e-4, e_step: float = 0.05) -> np.ndarray:
    """Lowest ``count`` Dirichlet levels of ``-psi''/2 + (omega^2 x^2/2 + alpha/x^2) psi`` on ``(0, length]``."""
    found = []
    e_lo = 0.0
    f_lo = _shoot(e_lo, omega, alpha, x0, length)
    while len(found) < count:
        e_hi = e_lo + e_step
        f_hi = _shoot(e_hi, omega, alpha, x0, length)
        if f_lo * f_hi < 0.0:
            found.append(brentq(_shoot, e_lo, e_hi, args=(omega, alpha, x0, length), xtol=1e-12))
        e_lo, f_lo = e_hi, f_hi
    return np.array(found)


# Frozen output of rosochatius_shooting_levels(1.0, alpha, 5), computed once.
ROSOCHATIUS_SHOOTING = {
    1.0: (2.5000000000021823, 4.500000000002175, 6.500000000003623, 8.50000000000508, 10.500000000005109),
    0.3: (1.9219544457293536, 3.921954445730801, 5.921954445732248, 7.921954445732241, 9.921954445733725),
}
