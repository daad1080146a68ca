"""Compiled inner loops for time stepping.

Parameters travel as the flat tuple ``(k, s, gamma, sigma, om2, al)`` where
``om2`` holds squared frequencies.  Kernels signal domain failures through
status codes instead of exceptions:

    0 ok, 1 fixed-point iteration did not converge, 2 domain violation,
    3 escape radius exceeded.
"""

import math

import numpy as np
from numba import njit

OK, NONCONVERGED, DOMAIN, ESCAPED = 0, 1, 2, 3


def pack(params):
    return (
        params.k,
        params.s,
        params.gamma,
        float(params.central_sign),
        np.square(np.asarray(params.omegas, dtype=float)),
        np.asarray(params.alphas, dtype=float),
    )


@njit(cache=True)
def _rpow(b, q):
    if q == 0.0:
        return 1.0
    if b > 0.0:
        return b**q
    if b == 0.0 and q > 0.0:
        return 0.0
    return math.nan


@njit(cache=True)
def ham(x, p, k, s, gamma, sigma, om2, al):
    n = x.size
    r2 = gamma
    q = 0.0
    kin = 0.0
    ros = 0.0
    for i in range(n):
        r2 += x[i] * x[i]
        q += om2[i] * x[i] * x[i]
        kin += 0.5 * p[i] * p[i]
        if al[i] != 0.0:
            if x[i] == 0.0:
                return math.nan
            ros += al[i] / (x[i] * x[i])
    e = (s - k + 1.0) / k
    fac = _rpow(r2, (k - 1.0) / k)
    cen = sigma / (2.0 * k * k) * _rpow(q, e)
    return fac * (kin + cen + ros)


@njit(cache=True)
def grad(x, p, k, s, gamma, sigma, om2, al, gx, gp):
    """Write ``dH/dx`` into ``gx`` and ``dH/dp`` into ``gp``; False on domain error."""
    n = x.size
    r2 = gamma
    q = 0.0
    kin = 0.0
    ros = 0.0
    for i in range(n):
        r2 += x[i] * x[i]
        q += om2[i] * x[i] * x[i]
        kin += 0.5 * p[i] * p[i]
        if al[i] != 0.0:
            if x[i] == 0.0:
                return False
            ros += al[i] / (x[i] * x[i])
    e = (s - k + 1.0) / k
    ce = (k - 1.0) / k
    fac = _rpow(r2, ce)
    coeff = sigma / (2.0 * k * k)
    cen = coeff * _rpow(q, e)
    if not (math.isfinite(fac) and math.isfinite(cen)):
        return False
    bracket = kin + cen + ros
    dfac = 0.0
    if ce != 0.0:
        dfac = 2.0 * ce * _rpow(r2, -1.0 / k) * bracket
        if not math.isfinite(dfac):
            return False
    dcen = 0.0
    if e != 0.0:
        dcen = 2.0 * coeff * e * _rpow(q, e - 1.0)
        if not math.isfinite(dcen):
            return False
    for i in range(n):
        dw = dcen * om2[i] * x[i]
        if al[i] != 0.0:
            dw -= 2.0 * al[i] / (x[i] * x[i] * x[i])
        gx[i] = fac * dw + dfac * x[i]
        gp[i] = fac * p[i]
    return True


@njit(cache=True)
def time_grad(x, p, k, s, gamma, sigma, om2, al, energy, beta, gx, gp):
    """Gradient of ``|x|^beta (H - energy)``; plain ``grad`` when ``beta == 0``."""
    if not grad(x, p, k, s, gamma, sigma, om2, al, gx, gp):
        return False
    if beta == 0.0:
        return True
    r2 = 0.0
    for i in range(x.size):
        r2 += x[i] * x[i]
    if r2 == 0.0:
        return False
    g = r2 ** (0.5 * beta)
    hv = ham(x, p, k, s, gamma, sigma, om2, al) - energy
    dg = beta * r2 ** (0.5 * beta - 1.0)
    for i in range(x.size):
        gx[i] = g * gx[i] + hv * dg * x[i]
        gp[i] = g * gp[i]
    return True


@njit(cache=True)
def midpoint_step(x, p, guess_dx, guess_dp, h, tol, max_iter, k, s, gamma, sigma, om2, al, energy, beta, xo, po):
    """One implicit-midpoint step by fixed-point iteration.

    ``guess_dx, guess_dp`` seed the increment (typically the previous step's).
    With ``beta != 0`` the step is taken for the time-transformed Hamiltonian
    ``|x|^beta (H - energy)``.  The solution lands in ``xo, po``.  Returns
    ``(status, iterations)``.
    """
    n = x.size
    gx = np.empty(n)
    gp = np.empty(n)
    xm = np.empty(n)
    pm = np.empty(n)
    scale = 1.0
    for i in range(n):
        xo[i] = x[i] + guess_dx[i]
        po[i] = p[i] + guess_dp[i]
        scale = max(scale, 1.0 + abs(x[i]), 1.0 + abs(p[i]))
    for it in range(max_iter):
        for i in range(n):
            xm[i] = 0.5 * (x[i] + xo[i])
            pm[i] = 0.5 * (p[i] + po[i])
        for i in range(n):
            if al[i] != 0.0 and (xm[i] == 0.0 or xm[i] * x[i] < 0.0):
                return DOMAIN, it
        if not time_grad(xm, pm, k, s, gamma, sigma, om2, al, energy, beta, gx, gp):
            return DOMAIN, it
        diff = 0.0
        for i in range(n):
            xn = x[i] + h * gp[i]
            pn = p[i] - h * gx[i]
            diff = max(diff, abs(xn - xo[i]), abs(pn - po[i]))
            xo[i] = xn
            po[i] = pn
        if not math.isfinite(diff):
            return DOMAIN, it
        if diff <= tol * scale:
            return OK, it + 1
    return NONCONVERGED, max_iter


@njit(cache=True)
def midpoint_run(x0, p0, h, nsteps, coeffs, tol, max_iter, k, s, gamma, sigma, om2, al, energy, beta, r_escape, X, P):
    """Fill ``X[0..], P[0..]`` with ``nsteps`` steps from ``(x0, p0)``.

    Each step is the composition of implicit-midpoint substeps of sizes
    ``coeffs[m] * h``; ``coeffs = [1.0]`` is the plain rule.  Returns
    ``(completed_steps, status)``; rows past ``completed_steps`` are untouched.
    """
    n = x0.size
    m = coeffs.size
    X[0, :] = x0
    P[0, :] = p0
    dx = np.zeros((m, n))
    dp = np.zeros((m, n))
    gx = np.empty(n)
    gp = np.empty(n)
    if time_grad(x0, p0, k, s, gamma, sigma, om2, al, energy, beta, gx, gp):
        for c in range(m):
            for i in range(n):
                dx[c, i] = coeffs[c] * h * gp[i]
                dp[c, i] = -coeffs[c] * h * gx[i]
    xa = np.empty(n)
    pa = np.empty(n)
    xo = np.empty(n)
    po = np.empty(n)
    for j in range(nsteps):
        xa[:] = X[j]
        pa[:] = P[j]
        for c in range(m):
            st, _ = midpoint_step(
                xa, pa, dx[c], dp[c], coeffs[c] * h, tol, max_iter, k, s, gamma, sigma, om2, al, energy, beta, xo, po
            )
            if st != OK:
                return j, st
            for i in range(n):
                dx[c, i] = xo[i] - xa[i]
                dp[c, i] = po[i] - pa[i]
                xa[i] = xo[i]
                pa[i] = po[i]
        r2 = 0.0
        for i in range(n):
            X[j + 1, i] = xa[i]
            P[j + 1, i] = pa[i]
            r2 += xa[i] * xa[i]
        if r2 > r_escape * r_escape:
            return j + 1, ESCAPED
    return nsteps, OK


@njit(cache=True)
def veff_grad(x, energy, k, s, gamma, sigma, om2, al, g):
    """Gradient of ``W(x) - E (|x|^2 + gamma)^((1-k)/k)`` into ``g``."""
    n = x.size
    r2 = gamma
    q = 0.0
    for i in range(n):
        r2 += x[i] * x[i]
        q += om2[i] * x[i] * x[i]
        if al[i] != 0.0 and x[i] == 0.0:
            return False
    e = (s - k + 1.0) / k
    ie = (1.0 - k) / k
    coeff = sigma / (2.0 * k * k)
    dcen = 0.0
    if e != 0.0:
        dcen = 2.0 * coeff * e * _rpow(q, e - 1.0)
    dinv = 0.0
    if ie != 0.0:
        dinv = -energy * 2.0 * ie * _rpow(r2, ie - 1.0)
    if not (math.isfinite(dcen) and math.isfinite(dinv)):
        return False
    for i in range(n):
        gi = dcen * om2[i] * x[i] + dinv * x[i]
        if al[i] != 0.0:
            gi -= 2.0 * al[i] / (x[i] * x[i] * x[i])
        g[i] = gi
    return True


@njit(cache=True)
def inverse_factor(x, k, gamma):
    r2 = gamma
    for i in range(x.size):
        r2 += x[i] * x[i]
    return _rpow(r2, (1.0 - k) / k)


@njit(cache=True)
def leapfrog_run(x0, p0, h, nsteps, coeffs, energy, k, s, gamma, sigma, om2, al, r_escape, X, P, invF):
    """Position-Verlet (drift-kick-drift) on ``K = |p|^2/2 + V_eff(x)``.

    Each macro step applies one substep of length ``c h`` per entry of
    ``coeffs``.  Also records ``1/F(x)`` per sample for physical-time
    reconstruction.
    """
    n = x0.size
    X[0, :] = x0
    P[0, :] = p0
    invF[0] = inverse_factor(x0, k, gamma)
    x = x0.copy()
    p = p0.copy()
    xh = np.empty(n)
    g = np.empty(n)
    for j in range(nsteps):
        for c in coeffs:
            hc = c * h
            for i in range(n):
                xh[i] = x[i] + 0.5 * hc * p[i]
                if al[i] != 0.0 and xh[i] * x[i] <= 0.0:
                    return j, DOMAIN
            if not veff_grad(xh, energy, k, s, gamma, sigma, om2, al, g):
                return j, DOMAIN
            for i in range(n):
                p[i] = p[i] - hc * g[i]
                xn = xh[i] + 0.5 * hc * p[i]
                if al[i] != 0.0 and xn * xh[i] <= 0.0:
                    return j, DOMAIN
                x[i] = xn
        r2 = 0.0
        for i in range(n):
            P[j + 1, i] = p[i]
            X[j + 1, i] = x[i]
            r2 += x[i] * x[i]
        invF[j + 1] = inverse_factor(X[j + 1], k, gamma)
        if not math.isfinite(invF[j + 1]):
            return j, DOMAIN
        if r2 > r_escape * r_escape:
            return j + 1, ESCAPED
    return nsteps, OK
