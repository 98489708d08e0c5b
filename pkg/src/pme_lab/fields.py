"""Space-time field functions with a common interface.

Every field exposes ``value(r, t)`` and ``grad_um(r, t)`` (the radial
derivative of u^m) as vectorised callables, plus ``m``, ``n``, the spatial
radius ``R`` and the time range ``t_range`` where it is defined.  ``grad``
gives the radial derivative of u itself, zero where u vanishes.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import exact_solutions as ex
from .elliptic_profile import GiantProfile
from .pme_solver import Field, Grid1D, Trajectory


class FieldFunction:
    m: float
    n: int
    R: float = math.inf
    t_range: tuple[float, float] = (-math.inf, math.inf)

    def value(self, r, t):
        raise NotImplementedError

    def grad_um(self, r, t):
        raise NotImplementedError

    def grad(self, r, t):
        u = np.asarray(self.value(r, t), dtype=float)
        g = np.asarray(self.grad_um(r, t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u > 0, g / (self.m * np.where(u > 0, u, 1.0) ** (self.m - 1.0)), 0.0)
        return out

    def __call__(self, r, t):
        return self.value(r, t)


def _bcast(r, t):
    return np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))


class BarenblattField(FieldFunction):
    def __init__(self, bp: ex.BarenblattParams):
        self.bp = bp
        self.m, self.n = bp.pme.m, bp.pme.n

    def value(self, r, t):
        r, t = _bcast(r, t)
        return np.asarray(ex.barenblatt_value(self.bp, r, t))

    def grad_um(self, r, t):
        r, t = _bcast(r, t)
        return np.asarray(ex.barenblatt_grad_um(self.bp, r, t))


class GiantField(FieldFunction):
    """U(r) (t - t0)^{-1/(m-1)}; defined on B(0, R) for all t, zero up to t0."""

    def __init__(self, profile: GiantProfile, t0: float = 0.0):
        self.profile = profile
        self.t0 = t0
        self.m, self.n = profile.pme.m, profile.pme.n
        self.R = profile.R

    def value(self, r, t):
        r, t = _bcast(r, t)
        return np.asarray(ex.giant_value(self.profile, self.t0, r, t))

    def grad_um(self, r, t):
        r, t = _bcast(r, t)
        return np.asarray(ex.giant_grad_um(self.profile, self.t0, r, t))


class FastBlowupField(FieldFunction):
    def __init__(self, fb: ex.FastBlowupParams):
        self.fb = fb
        self.m, self.n = fb.profile.pme.m, fb.profile.pme.n
        self.R = fb.profile.R
        self.t_range = (0.0, math.inf)

    def value(self, r, t):
        r, t = _bcast(r, t)
        return np.asarray(ex.fast_blowup_value(self.fb, r, t))

    def grad_um(self, r, t):
        r, t = _bcast(r, t)
        expo = np.vectorize(self.fb.f, otypes=[float])(t) * self.m / (self.m - 1.0)
        return self.fb.profile.dw(r) * np.exp(expo)


class ConstantField(FieldFunction):
    def __init__(self, c: float, m: float, n: int = 1, R: float = math.inf):
        if c < 0:
            raise ValueError("constant must be nonnegative")
        self.c, self.m, self.n, self.R = float(c), m, n, R

    def value(self, r, t):
        r, _ = _bcast(r, t)
        return np.full(r.shape, self.c)

    def grad_um(self, r, t):
        r, _ = _bcast(r, t)
        return np.zeros(r.shape)


class TruncatedField(FieldFunction):
    """Clamp of a field to [lower, upper]; the gradient vanishes where clamped."""

    def __init__(self, base: FieldFunction, lower: float | None = None, upper: float | None = None):
        self.base, self.lower, self.upper = base, lower, upper
        self.m, self.n, self.R, self.t_range = base.m, base.n, base.R, base.t_range

    def value(self, r, t):
        u = np.asarray(self.base.value(r, t), dtype=float)
        lo = -np.inf if self.lower is None else self.lower
        hi = np.inf if self.upper is None else self.upper
        return np.clip(u, lo, hi)

    def grad_um(self, r, t):
        u = np.asarray(self.base.value(r, t), dtype=float)
        g = np.asarray(self.base.grad_um(r, t), dtype=float)
        inside = np.ones(u.shape, dtype=bool)
        if self.lower is not None:
            inside &= u > self.lower
        if self.upper is not None:
            inside &= u < self.upper
        return np.where(inside, g, 0.0)


def truncate(field: FieldFunction, upper: float | None = None, lower: float | None = None) -> TruncatedField:
    """min{max{u, lower}, upper}."""
    return TruncatedField(field, lower=lower, upper=upper)


class ScaledField(FieldFunction):
    """Intrinsic rescaling u_s(x, t) = s u(x, s^{m-1} t), again a solution."""

    def __init__(self, base: FieldFunction, s: float):
        if not s > 0:
            raise ValueError("scale must be positive")
        self.base, self.s = base, s
        self.m, self.n, self.R = base.m, base.n, base.R
        k = s ** (1.0 - base.m)
        self.t_range = (base.t_range[0] * k, base.t_range[1] * k)

    def _t(self, t):
        return np.asarray(t, dtype=float) * self.s ** (self.m - 1.0)

    def value(self, r, t):
        return self.s * np.asarray(self.base.value(r, self._t(t)))

    def grad_um(self, r, t):
        return self.s**self.m * np.asarray(self.base.grad_um(r, self._t(t)))


class PowerField(FieldFunction):
    """u^a for a > 0; ``grad`` is a u^{a-1} grad u."""

    def __init__(self, base: FieldFunction, a: float):
        self.base, self.a = base, a
        self.m, self.n, self.R, self.t_range = base.m, base.n, base.R, base.t_range

    def value(self, r, t):
        return np.asarray(self.base.value(r, t), dtype=float) ** self.a

    def grad(self, r, t):
        u = np.asarray(self.base.value(r, t), dtype=float)
        du = np.asarray(self.base.grad(r, t), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u > 0, self.a * np.where(u > 0, u, 1.0) ** (self.a - 1.0) * du, 0.0)

    def grad_um(self, r, t):
        v = self.value(r, t)
        return self.m * v ** (self.m - 1.0) * self.grad(r, t)


class TrajectoryField(FieldFunction):
    """Piecewise-linear interpolation of solver snapshots.

    Linear in r between cell centres (even extension through r = 0, zero
    at the wall) and linear in t between snapshots.
    """

    def __init__(self, traj: Trajectory):
        self.traj = traj
        g = traj.grid
        self.m, self.n, self.R = traj.m, g.n, g.R
        self.times = traj.times
        self.t_range = (float(self.times[0]), float(self.times[-1]))
        self._r = np.concatenate([[0.0], g.centers, [g.R]])
        vals = traj.values
        self._u = np.concatenate([vals[:, :1], vals, np.zeros((vals.shape[0], 1))], axis=1)
        self._w = self._u**self.m

    def _interp(self, table, r, t):
        r, t = _bcast(r, t)
        ra = np.abs(r)
        if np.any(ra > self.R * (1 + 1e-12)):
            raise ValueError("radius outside trajectory grid")
        lo, hi = self.t_range
        if np.any((t < lo - 1e-12 * max(1.0, abs(lo))) | (t > hi + 1e-12 * max(1.0, abs(hi)))):
            raise ValueError("time outside trajectory range")
        tc = np.clip(t, lo, hi)
        j = np.clip(np.searchsorted(self.times, tc, side="right") - 1, 0, max(len(self.times) - 2, 0))
        if len(self.times) == 1:
            wt = np.zeros_like(tc)
            j1 = j
        else:
            span = self.times[j + 1] - self.times[j]
            wt = (tc - self.times[j]) / span
            j1 = j + 1
        i = np.clip(np.searchsorted(self._r, ra, side="right") - 1, 0, self._r.size - 2)
        wr = (ra - self._r[i]) / (self._r[i + 1] - self._r[i])
        a = table[j, i] * (1 - wr) + table[j, i + 1] * wr
        b = table[j1, i] * (1 - wr) + table[j1, i + 1] * wr
        return a * (1 - wt) + b * wt

    def value(self, r, t):
        return self._interp(self._u, r, t)

    def grad_um(self, r, t):
        r, t = _bcast(r, t)
        d = 0.5 * self.traj.grid.h
        ra = np.abs(r)
        rp = np.minimum(ra + d, self.R)
        rm = np.maximum(ra - d, 0.0)
        w = lambda x: self._interp(self._w, x, t)  # noqa: E731
        with np.errstate(invalid="ignore", divide="ignore"):
            g = (w(rp) - w(rm)) / np.where(rp > rm, rp - rm, 1.0)
        return g * np.sign(np.where(r == 0, 1.0, r)) * (rp > rm)


def as_field(obj) -> FieldFunction:
    if isinstance(obj, FieldFunction):
        return obj
    if isinstance(obj, Trajectory):
        return TrajectoryField(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a field function")


def sample_trajectory(field: FieldFunction, grid: Grid1D, times: Sequence[float], mode: str = "center") -> Trajectory:
    """Snapshots of a closed-form field on ``grid``.

    ``mode="center"`` samples cell centres; ``mode="sup"`` takes the largest
    of the values at the two cell edges and the centre, so a singularity at
    r = 0 is seen by the origin cell.
    """
    if mode not in ("center", "sup"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    snaps = []
    for t in times:
        if mode == "center":
            vals = field.value(grid.centers, t)
        else:
            f = grid.faces
            probes = [grid.centers, f[:-1], f[1:] * (1 - 1e-12)]
            vals = np.max([np.asarray(field.value(p, t), dtype=float) for p in probes], axis=0)
        vals = np.minimum(np.asarray(vals, dtype=float), ex.FLOAT_MAX)
        snaps.append(Field(grid, vals, float(t)))
    empty = np.empty(0)
    return Trajectory(grid, field.m, tuple(snaps), empty, empty, snaps[0].mass())
