"""Closed-form solutions of u_t = Δ(u^m) and a pointwise residual oracle.

All fields are radial: ``x`` is a radius r >= 0 (or a signed coordinate
when n = 1) and the dimension only enters through the radial Laplacian
and the surface measure of the unit sphere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy import integrate

from .reports import CheckReport

if TYPE_CHECKING:
    from .elliptic_profile import GiantProfile

FLOAT_MAX = np.finfo(float).max
LOG_FLOAT_MAX = math.log(FLOAT_MAX)


@dataclass(frozen=True)
class PmeParams:
    m: float
    n: int = 1

    def __post_init__(self):
        if not self.m > 1.0:
            raise ValueError(f"slow diffusion requires m > 1, got m={self.m}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n, 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, radius: float = 1.0) -> float:
    return sphere_area(n) * radius**n / n


def barenblatt_lambda(pme: PmeParams) -> float:
    return pme.n / (pme.n * (pme.m - 1.0) + 2.0)


@dataclass(frozen=True)
class BarenblattParams:
    pme: PmeParams
    C: float = 1.0
    t_shift: float = 0.0
    center: float = 0.0

    def __post_init__(self):
        if not self.C > 0.0:
            raise ValueError(f"profile constant must be positive, got C={self.C}")

    @property
    def lam(self) -> float:
        return barenblatt_lambda(self.pme)

    @property
    def bracket_coef(self) -> float:
        """Coefficient lambda (m-1) / (2 m n) multiplying |x|^2 in the bracket."""
        m, n = self.pme.m, self.pme.n
        return self.lam * (m - 1.0) / (2.0 * m * n)


def _barenblatt_bracket(bp: BarenblattParams, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    tau = t - bp.t_shift
    pos = tau > 0
    tau_safe = np.where(pos, tau, 1.0)
    r = np.abs(x - bp.center)
    lam, n = bp.lam, bp.pme.n
    bracket = bp.C - bp.bracket_coef * r**2 / tau_safe ** (2.0 * lam / n)
    # clamp before the fractional power
    bracket = np.where(pos, np.maximum(bracket, 0.0), 0.0)
    return bracket, tau_safe, pos, r


def barenblatt_value(bp: BarenblattParams, x, t):
    """Evaluate the Barenblatt solution; identically zero for t <= t_shift."""
    bracket, tau, pos, _ = _barenblatt_bracket(bp, x, t)
    m = bp.pme.m
    val = np.where(pos, tau ** (-bp.lam) * bracket ** (1.0 / (m - 1.0)), 0.0)
    return val if val.ndim else float(val)


def barenblatt_grad_um(bp: BarenblattParams, x, t):
    """d/dx of u^m for the Barenblatt solution (signed along x - center)."""
    bracket, tau, pos, _ = _barenblatt_bracket(bp, x, t)
    m, lam, n = bp.pme.m, bp.lam, bp.pme.n
    dx = np.asarray(x, dtype=float) - bp.center
    g = (
        tau ** (-lam * m)
        * (m / (m - 1.0))
        * bracket ** (1.0 / (m - 1.0))
        * (-2.0 * bp.bracket_coef * dx / tau ** (2.0 * lam / n))
    )
    g = np.where(pos, g, 0.0)
    return g if g.ndim else float(g)


def barenblatt_support_radius(bp: BarenblattParams, t: float) -> float:
    tau = t - bp.t_shift
    if not tau > 0:
        raise ValueError("Barenblatt solution vanishes identically for t <= t_shift")
    return math.sqrt(bp.C / bp.bracket_coef) * tau ** (bp.lam / bp.pme.n)


def barenblatt_mass(bp: BarenblattParams, t: float, tol: float = 1e-12) -> float:
    """Total mass over R^n by adaptive radial quadrature."""
    radius = barenblatt_support_radius(bp, t)
    n = bp.pme.n
    omega = sphere_area(n)
    center = bp.center

    def integrand(r):
        return omega * r ** (n - 1) * barenblatt_value(bp, center + r, t)

    # The bracket power is singular at the edge for m > 2: let QUADPACK see the endpoint.
    val, err = integrate.quad(integrand, 0.0, radius, epsabs=0.0, epsrel=tol, limit=400)
    if not err <= max(100 * tol * abs(val), 1e-300):
        raise ArithmeticError(f"mass quadrature did not converge: value={val}, error estimate={err}")
    return val


def giant_value(profile: "GiantProfile", t0: float, x, t):
    """Friendly giant U(x) (t - t0)^{-1/(m-1)}, zero for t <= t0."""
    m = profile.pme.m
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    U = profile.U(x)
    tau = t - t0
    pos = tau > 0
    val = np.where(pos, U * np.where(pos, tau, 1.0) ** (-1.0 / (m - 1.0)), 0.0)
    return val if val.ndim else float(val)


def giant_grad_um(profile: "GiantProfile", t0: float, x, t):
    m = profile.pme.m
    x = np.asarray(x, dtype=float)
    tau = np.asarray(t, dtype=float) - t0
    pos = tau > 0
    g = np.where(pos, profile.dw(x) * np.where(pos, tau, 1.0) ** (-m / (m - 1.0)), 0.0)
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class FastBlowupParams:
    profile: "GiantProfile"
    f: Callable[[float], float]


def fast_blowup_value(fb: FastBlowupParams, x, t, return_flag: bool = False):
    """U(x) exp(f(t)/(m-1)); overflow saturates at the largest finite float.

    With ``return_flag`` the result is ``(value, saturated)``.
    """
    m = fb.profile.pme.m
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("fast blow-up family is defined for t > 0 only")
    U = fb.profile.U(x)
    expo = np.vectorize(fb.f, otypes=[float])(t) / (m - 1.0)
    with np.errstate(divide="ignore"):
        logv = np.log(U) + expo
    saturated = logv > LOG_FLOAT_MAX
    val = np.where(U > 0, np.exp(np.minimum(logv, LOG_FLOAT_MAX)), 0.0)
    val = np.where(saturated, FLOAT_MAX, val)
    if np.any(saturated) and not return_flag:
        warnings.warn("fast blow-up value saturated at the largest finite float", RuntimeWarning, stacklevel=2)
    val = val if val.ndim else float(val)
    if return_flag:
        return val, bool(np.any(saturated))
    return val


def pme_residual_pointwise(u: Callable, x: float, t: float, h: float, pme: PmeParams) -> float:
    """Centered-difference approximation of u_t - Δ_r(u^m) at (x, t).

    ``u(r, t)`` must be evaluable at r = x, x ± h and t ± h.  At x < h the
    field is reflected evenly through the origin.  Positive values indicate
    supersolution behaviour.  Unreliable within a few h of a free boundary.
    """
    m, n = pme.m, pme.n
    ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h)
    w0 = u(x, t) ** m
    wp = u(x + h, t) ** m
    wm = u(abs(x - h), t) ** m
    if x == 0.0:
        lap = n * (wp - 2.0 * w0 + wm) / h**2
    else:
        lap = (wp - 2.0 * w0 + wm) / h**2 + (n - 1.0) / x * (wp - wm) / (2.0 * h)
    return float(ut - lap)


def fast_blowup_condition_check(
    f: Callable[[float], float],
    f_prime: Callable[[float], float],
    t_grid,
    tol: float = 1e-12,
    consistency_rtol: float = 1e-6,
) -> CheckReport:
    """Check f'(t) + exp(f(t)) >= 0 on ``t_grid``.

    A few grid points are spot-checked for consistency between ``f`` and
    ``f_prime`` by central differences; a mismatch raises ``ValueError``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    probes = t_grid[np.linspace(0, t_grid.size - 1, min(7, t_grid.size)).astype(int)]
    for s in probes:
        step = 1e-5 * max(abs(s), 1e-3)
        if s - step <= 0 and s > 0:
            step = 0.5 * s
        fd = (f(s + step) - f(s - step)) / (2.0 * step)
        fp = f_prime(s)
        if abs(fd - fp) > consistency_rtol * max(1.0, abs(fp)):
            raise ValueError(f"f_prime inconsistent with f at t={s}: finite difference {fd} vs {fp}")
    with np.errstate(over="ignore"):
        vals = np.array([f_prime(s) + math.exp(min(f(s), LOG_FLOAT_MAX)) for s in t_grid])
    i = int(np.argmin(vals))
    vmin = float(vals[i])
    return CheckReport(
        name="fast_blowup_condition",
        lhs=vmin,
        rhs=-tol,
        fitted_constant=vmin,
        passed=vmin >= -tol,
        details={"argmin_t": float(t_grid[i]), "n_points": int(t_grid.size)},
    )

