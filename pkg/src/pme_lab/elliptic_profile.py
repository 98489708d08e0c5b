"""Radial shooting for Δ(U^m) + U/(m-1) = 0 on a ball with U = 0 on the boundary.

The solver works in w = U^m, integrating

    w'' + (n-1)/r w' = -w^{1/m} / (m-1),   w(0) = w0,  w'(0) = 0

outward with classical RK4 and bisecting on w0 until w vanishes at r = R.
Near the boundary w is linear in R - r but w'' behaves like (R - r)^{1/m},
so a uniform mesh caps the accuracy of second differences.  Nodes are
clustered toward r = R (see ``boundary_graded_mesh``) and RK4 steps
between the stored nodes, so w is a discrete solution on exactly the
grid that is later differenced.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .exact_solutions import PmeParams

GRADING_POWER = 3.5
GRADING_SHIFT = 10.0
DEFAULT_STEPS = 2000
DEFAULT_TOL = 1e-8
# accepted |w(R)| / w(0) for stored profiles
BOUNDARY_WTOL = 1e-6


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class GiantProfile:
    """Samples of the positive profile U on [0, R].

    ``dw_values`` holds (U^m)' at the nodes when known from the integrator;
    it makes interpolation fourth-order accurate.
    """

    pme: PmeParams
    R: float
    r_grid: np.ndarray
    U_values: np.ndarray
    w0: float
    residual_max: float
    dw_values: np.ndarray | None = None
    boundary_residual: float = 0.0
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        U = np.asarray(self.U_values, dtype=float)
        if r.ndim != 1 or r.shape != U.shape or r.size < 3:
            raise ValueError("r_grid and U_values must be 1-D arrays of equal length >= 3")
        if r[0] != 0.0 or not math.isclose(r[-1], self.R, rel_tol=1e-12) or np.any(np.diff(r) <= 0):
            raise ValueError("r_grid must increase strictly from 0 to R")
        if not U[0] > 0.0:
            raise ValueError("profile must be positive at the origin (U = 0 is excluded)")
        if np.any(U < 0):
            raise ValueError("profile values must be nonnegative")
        if np.any(np.diff(U) >= 0):
            raise ValueError("profile must decrease strictly in r")
        if U[-1] ** self.pme.m > BOUNDARY_WTOL * U[0] ** self.pme.m:
            raise ValueError("profile must vanish at r = R")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "U_values", U)
        w = U**self.pme.m
        if self.dw_values is not None:
            dw = np.asarray(self.dw_values, dtype=float)
            object.__setattr__(self, "dw_values", dw)
            interp = CubicHermiteSpline(r, w, dw)
        else:
            interp = CubicSpline(r, w, bc_type=((1, 0.0), "not-a-knot"))
        object.__setattr__(self, "_interp", interp)

    @property
    def w_values(self) -> np.ndarray:
        return self.U_values**self.pme.m

    def _check_domain(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if np.any(x > self.R * (1 + 1e-12)):
            raise ValueError(f"radius outside profile domain [0, {self.R}]")
        return np.minimum(x, self.R)

    def w(self, x):
        x = self._check_domain(x)
        return np.maximum(self._interp(x), 0.0)

    def U(self, x):
        val = self.w(x) ** (1.0 / self.pme.m)
        return val if np.ndim(val) else float(val)

    def dw(self, x):
        """Radial derivative of U^m, signed for n = 1 coordinates."""
        xa = np.asarray(x, dtype=float)
        val = self._interp(self._check_domain(xa), 1) * np.sign(xa)
        return val if np.ndim(val) else float(val)


@njit(cache=True)
def _rhs(r, w, dw, n, m):
    src = -max(w, 0.0) ** (1.0 / m) / (m - 1.0)
    if r == 0.0:
        # l'Hopital at the origin: n w'' = src
        return dw, src / n
    return dw, src - (n - 1.0) / r * dw


def boundary_graded_mesh(R: float, steps: int, power: float = GRADING_POWER, shift: float = GRADING_SHIFT) -> np.ndarray:
    """Nodes r_i = R - s_i with s proportional to (eta + shift/steps)^power - (shift/steps)^power.

    Spacing near r = R shrinks like steps^-power but stays locally uniform
    over the last ``shift`` cells, which keeps three-point differences of
    the sqrt-type term in w'' accurate there.
    """
    eta = np.linspace(1.0, 0.0, steps + 1)
    e0 = shift / steps
    s = ((eta + e0) ** power - e0**power) / ((1.0 + e0) ** power - e0**power)
    r = R * (1.0 - s)
    r[0] = 0.0
    r[-1] = R
    return r


@njit(cache=True)
def _series_start(w0, r, n, m):
    a2 = -(w0 ** (1.0 / m)) / (2.0 * n * (m - 1.0))
    a4 = -(w0 ** (1.0 / m - 1.0)) * a2 / (m * (m - 1.0) * 4.0 * (n + 2.0))
    return w0 + a2 * r**2 + a4 * r**4, 2.0 * a2 * r + 4.0 * a4 * r**3


@njit(cache=True)
def _integrate(w0, r, n, m):
    """RK4 between consecutive nodes of ``r``; stops at the first negative w before the last node.

    Returns (status, w_end, w, dw) with status 0 = reached r[-1],
    1 = crossed zero early, 2 = non-finite values.
    """
    steps = r.size - 1
    w_arr = np.zeros(steps + 1)
    dw_arr = np.zeros(steps + 1)
    w, dw = _series_start(w0, r[1], n, m)
    w_arr[0] = w0
    w_arr[1] = w
    dw_arr[1] = dw
    for i in range(1, steps):
        h = r[i + 1] - r[i]
        rm = r[i] + 0.5 * h
        k1w, k1d = _rhs(r[i], w, dw, n, m)
        k2w, k2d = _rhs(rm, w + 0.5 * h * k1w, dw + 0.5 * h * k1d, n, m)
        k3w, k3d = _rhs(rm, w + 0.5 * h * k2w, dw + 0.5 * h * k2d, n, m)
        k4w, k4d = _rhs(r[i + 1], w + h * k3w, dw + h * k3d, n, m)
        w = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        dw = dw + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if not (np.isfinite(w) and np.isfinite(dw)):
            return 2, w, w_arr, dw_arr
        w_arr[i + 1] = w
        dw_arr[i + 1] = dw
        if w < 0.0 and i + 1 < steps:
            return 1, w, w_arr, dw_arr
    return 0, w, w_arr, dw_arr


def _shoot(w0: float, r: np.ndarray, pme: PmeParams):
    status, w_end, w, dw = _integrate(float(w0), r, float(pme.n), float(pme.m))
    if status == 2:
        raise ShootingError(f"ODE integration produced non-finite values for w0={w0}")
    return status == 1, w_end, w, dw


def _too_small(w0, r, pme) -> bool:
    crossed, w_end, _, _ = _shoot(w0, r, pme)
    return crossed or w_end < 0.0


def solve_profile(
    pme: PmeParams,
    R: float,
    tol: float = DEFAULT_TOL,
    steps: int = DEFAULT_STEPS,
    w_seed: float = 1.0,
    max_doublings: int = 200,
) -> GiantProfile:
    """Shoot on w(0) until the first zero of w lands on r = R.

    The bracket is located by scanning w0 over ``w_seed * 2**j``; a larger
    w0 pushes the first zero outward, so bisection is monotone.  Bisection
    runs to float resolution and keeps the endpoint with w(R) >= 0.  The
    boundary condition is checked as w(R) <= tol * w(0).  U(R) keeps the
    tiny computed value w(R)^{1/m} so that U^m stays a consistent
    discrete solution on the nodes.

    The achieved ODE residual is stored in ``residual_max``; it is not
    forced below ``tol`` because w'' is only Hoelder continuous at r = R.
    """
    if not R > 0 or not tol > 0:
        raise ValueError("R and tol must be positive")
    if steps < 4:
        raise ValueError("need at least 4 integration steps")
    r = boundary_graded_mesh(float(R), int(steps))
    lo = hi = None
    scanned = []
    w = w_seed
    if _too_small(w, r, pme):
        lo = w
        for _ in range(max_doublings):
            w *= 2.0
            scanned.append(w)
            if not _too_small(w, r, pme):
                hi = w
                break
            lo = w
    else:
        hi = w
        for _ in range(max_doublings):
            w *= 0.5
            scanned.append(w)
            if _too_small(w, r, pme):
                lo = w
                break
            hi = w
    if lo is None or hi is None:
        raise ShootingError(f"no shooting bracket in w0 range [{min(scanned + [w_seed])}, {max(scanned + [w_seed])}]")

    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _too_small(mid, r, pme):
            lo = mid
        else:
            hi = mid

    _, w_end, w_arr, dw_arr = _shoot(hi, r, pme)
    if abs(w_end) > tol * hi:
        raise ShootingError(f"boundary value w(R)={w_end} exceeds tolerance {tol} * w0={hi}")
    U = np.maximum(w_arr, 0.0) ** (1.0 / pme.m)
    profile = GiantProfile(
        pme=pme,
        R=R,
        r_grid=r,
        U_values=U,
        w0=hi,
        residual_max=0.0,
        dw_values=dw_arr,
        boundary_residual=float(w_end),
    )
    return replace(profile, residual_max=profile_residual(profile))


def rescale_profile(p: GiantProfile, R_new: float) -> GiantProfile:
    """U_new(x) = s^{2/(m-1)} U(x/s) with s = R_new / R; no new solve."""
    if not R_new > 0:
        raise ValueError("R_new must be positive")
    if R_new == p.R:
        return p
    m = p.pme.m
    s = R_new / p.R
    amp = s ** (2.0 / (m - 1.0))
    dw = None if p.dw_values is None else p.dw_values * s ** (2.0 * m / (m - 1.0) - 1.0)
    r = p.r_grid * s
    r[-1] = R_new
    res = p.residual_max * s ** (2.0 * m / (m - 1.0) - 2.0)
    return GiantProfile(
        pme=p.pme,
        R=R_new,
        r_grid=r,
        U_values=p.U_values * amp,
        w0=p.w0 * amp**m,
        residual_max=res,
        dw_values=dw,
        boundary_residual=p.boundary_residual * amp**m,
    )


def profile_residual(p: GiantProfile) -> float:
    """Max over interior nodes of |w'' + (n-1)/r w' + w^{1/m}/(m-1)|.

    Three-point second differences on the (possibly nonuniform) grid.
    """
    r = p.r_grid
    if r.size < 5:
        raise ValueError("need at least 5 grid points")
    m, n = p.pme.m, p.pme.n
    w = p.U_values**m
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    wl, wc, wr = w[:-2], w[1:-1], w[2:]
    d2 = 2.0 * (hm * wr - (hm + hp) * wc + hp * wl) / (hm * hp * (hm + hp))
    d1 = (hm**2 * wr + (hp**2 - hm**2) * wc - hp**2 * wl) / (hm * hp * (hm + hp))
    res = d2 + (n - 1.0) / r[1:-1] * d1 + wc ** (1.0 / m) / (m - 1.0)
    return float(np.max(np.abs(res)))


def inf_on_ball(p: GiantProfile, radius: float) -> float:
    """inf of U over B(0, radius); U is radially decreasing."""
    return float(p.U(min(radius, p.R)))


def write_profile_csv(p: GiantProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["r", "U"])
        for r, u in zip(p.r_grid, p.U_values):
            wr.writerow([f"{r:.17g}", f"{u:.17g}"])


def read_profile_csv(path, pme: PmeParams) -> GiantProfile:
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    if not rows or rows[0] != ["r", "U"]:
        raise ValueError(f"{path}: expected header 'r,U'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    p = GiantProfile(pme=pme, R=float(data[-1, 0]), r_grid=data[:, 0], U_values=data[:, 1], w0=data[0, 1] ** pme.m, residual_max=0.0)
    return replace(p, residual_max=profile_residual(p))
