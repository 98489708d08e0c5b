"""Blow-up rate fitting and the giant-minorant comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..elliptic_profile import GiantProfile
from ..fields import FieldFunction, TrajectoryField, as_field
from ..pme_solver import Trajectory
from ..reports import CheckReport

MIN_SAMPLES = 5


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit u(x0, t) ≈ amplitude (t - t0)^exponent."""

    exponent: float
    amplitude: float
    times: tuple[float, ...]
    values: tuple[float, ...]
    decades: float


def blowup_rate_fit(u, x0: float, t0: float, delta: float = 1.0, decades: float = 3.0, samples: int = 25) -> RateFit:
    """Fit log u(x0, t) against log(t - t0) for t in (t0, t0 + delta].

    Closed-form fields are sampled at ``samples`` geometric times spanning
    ``decades`` decades below t0 + delta.  Trajectories use their own
    snapshot times inside the window.
    """
    if isinstance(u, Trajectory):
        times = u.times[(u.times > t0) & (u.times <= t0 + delta)]
        f: FieldFunction = TrajectoryField(u)
    else:
        f = as_field(u)
        times = t0 + delta * np.logspace(-decades, 0.0, samples)
    if times.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} sample times after t0, got {times.size}")
    span = math.log10((times[-1] - t0) / (times[0] - t0))
    if span < 1.0 - 1e-9:
        raise ValueError(f"sample times cover {span:.2f} decades of t - t0, need at least 1")
    vals = np.array([float(f.value(x0, t)) for t in times])
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("field must be positive and finite at the sampled points")
    slope, icpt = np.polyfit(np.log(times - t0), np.log(vals), 1)
    return RateFit(float(slope), float(math.exp(icpt)), tuple(map(float, times)), tuple(map(float, vals)), span)


def _minorant(profile: GiantProfile, r, t: float, t0: float) -> np.ndarray:
    return profile.U(np.abs(r)) * (t - t0) ** (-1.0 / (profile.pme.m - 1.0))


def minorant_check(u, profile: GiantProfile, t0: float = 0.0, tol: float = 0.0, times=None, radii=None) -> CheckReport:
    """Check u(x, t) >= U(x) (t - t0)^{-1/(m-1)} - tol at sampled points.

    Trajectories are sampled at their snapshots and cell centres inside the
    profile ball; closed-form fields need ``times`` (``radii`` defaults to
    257 points on [0, R]).  The first sampled slice must already dominate the
    minorant up to ``tol``; otherwise the data has no total blow-up at t0
    and ``ValueError`` is raised.
    """
    if isinstance(u, Trajectory):
        f: FieldFunction = TrajectoryField(u)
        if times is None:
            times = u.times
        if radii is None:
            radii = u.grid.centers[u.grid.centers <= profile.R]
    else:
        f = as_field(u)
        if times is None:
            raise ValueError("closed-form fields need explicit sample times")
        if radii is None:
            radii = np.linspace(0.0, profile.R, 257)
    if profile.R > f.R * (1 + 1e-12):
        raise ValueError("profile ball must lie inside the trajectory domain")
    if profile.pme.m != f.m or profile.pme.n != f.n:
        raise ValueError("profile and field solve different equations")
    times = np.asarray([t for t in times if t > t0], dtype=float)
    radii = np.asarray(radii, dtype=float)
    if times.size == 0:
        raise ValueError("no sample time after t0")
    margins = []
    for t in times:
        margins.append(float(np.min(np.asarray(f.value(radii, t)) - _minorant(profile, radii, t, t0))))
    if margins[0] < -tol:
        raise ValueError(
            f"first slice at t={times[0]} falls below the giant minorant by {-margins[0]:.3g}; no total blow-up at t0"
        )
    i = int(np.argmin(margins))
    worst = margins[i]
    return CheckReport(
        name="minorant",
        lhs=worst,
        rhs=-tol,
        fitted_constant=worst,
        passed=worst >= -tol,
        details={"t0": t0, "tol": tol, "worst_time": float(times[i]), "n_times": int(times.size), "n_radii": int(radii.size)},
    )
