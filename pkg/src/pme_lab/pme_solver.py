"""Explicit monotone finite-volume stepping for u_t = Δ(u^m) on [0, R].

Cells are [i h, (i+1) h] with centres (i + 1/2) h.  The face at r = 0 is a
symmetry face (zero flux) and u = 0 at r = R is imposed through the odd
ghost value w_ghost = -w_{N-1}.  The update is in conservation form on
w = u^m, so mass only leaves through the wall.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .exact_solutions import sphere_area
from .reports import to_json

EPS_FLOOR = 1e-300
# steps per kernel call; bounds the size of a single history chunk
_CHUNK = 200_000


class NumericalAbort(RuntimeError):
    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class CflViolation(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell grid on [0, R]; ``geometry`` is "slab" or "radial"."""

    geometry: str
    R: float
    N: int
    n: int = 1

    def __post_init__(self):
        if self.geometry not in ("slab", "radial"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.N < 8:
            raise ValueError("need at least 8 cells")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.geometry == "slab" and self.n != 1:
            raise ValueError("slab geometry is one-dimensional")

    @property
    def h(self) -> float:
        return self.R / self.N

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h

    @property
    def faces(self) -> np.ndarray:
        f = np.arange(self.N + 1) * self.h
        f[-1] = self.R
        return f

    @property
    def n_eff(self) -> float:
        # the wall cell sees 1 + 2 face weights (odd ghost), so at least 1.5
        return max(float(self.n), 1.5) if self.geometry == "radial" else 1.5

    def face_areas(self) -> np.ndarray:
        if self.geometry == "slab":
            return np.ones(self.N + 1)
        return sphere_area(self.n) * self.faces ** (self.n - 1)

    def volumes(self) -> np.ndarray:
        f = self.faces
        if self.geometry == "slab":
            return np.diff(f)
        return sphere_area(self.n) * np.diff(f**self.n) / self.n

    def ball_overlap(self, radius: float) -> np.ndarray:
        """Measure of each cell inside the ball (or interval) of the given radius."""
        f = np.minimum(self.faces, radius)
        if self.geometry == "slab":
            return np.diff(f)
        return sphere_area(self.n) * np.diff(f**self.n) / self.n

    def to_dict(self) -> dict:
        return {"geometry": self.geometry, "R": self.R, "N": self.N, "n": self.n}


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} cell values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if np.any(v < 0):
            raise ValueError("field values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable, time: float = 0.0) -> "Field":
        """Sample ``func(r)`` at the cell centres."""
        return cls(grid, np.asarray(func(grid.centers), dtype=float), time)

    def mass(self) -> float:
        return float(np.dot(self.values, self.grid.volumes()))


def indicator_field(grid: Grid1D, radius: float, amplitude: float = 1.0, time: float = 0.0) -> Field:
    """amplitude * indicator of B(0, radius) as exact cell averages."""
    frac = grid.ball_overlap(radius) / grid.volumes()
    return Field(grid, amplitude * frac, time)


@dataclass(frozen=True)
class SolveConfig:
    t_end: float
    cfl_safety: float = 0.4
    snapshot_times: tuple[float, ...] = ()
    dt_max: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        snaps = tuple(float(s) for s in self.snapshot_times) or (float(self.t_end),)
        if any(b <= a for a, b in zip(snaps, snaps[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        if snaps[-1] > self.t_end:
            raise ValueError("snapshot_times must not exceed t_end")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        object.__setattr__(self, "snapshot_times", snaps)

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "cfl_safety": self.cfl_safety,
            "snapshot_times": list(self.snapshot_times),
            "dt_max": self.dt_max,
        }


@dataclass(frozen=True)
class Trajectory:
    grid: Grid1D
    m: float
    snapshots: tuple[Field, ...]
    dt_history: np.ndarray = field(repr=False)
    mass_history: np.ndarray = field(repr=False)
    initial_mass: float = 0.0

    def __post_init__(self):
        ts = [s.time for s in self.snapshots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot times must increase strictly")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def values(self) -> np.ndarray:
        """Snapshot-major array of shape (n_snapshots, N)."""
        return np.array([s.values for s in self.snapshots])

    @property
    def steps(self) -> int:
        return int(self.dt_history.size)

    def mass_drift(self) -> float:
        if self.initial_mass == 0.0:
            return float(np.max(np.abs(self.mass_history))) if self.mass_history.size else 0.0
        if not self.mass_history.size:
            return 0.0
        return float(np.max(np.abs(self.mass_history - self.initial_mass)) / self.initial_mass)

    def at(self, t: float) -> Field:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.snapshots[i].time, t, rel_tol=1e-12, abs_tol=1e-15):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[i]


def _coefficients(grid: Grid1D):
    A = grid.face_areas()
    vh = grid.volumes() * grid.h
    a_in = A[:-1] / vh
    a_out = A[1:] / vh
    a_in[0] = 0.0  # symmetry face
    return a_in, a_out


def cfl_limit(f: Field, m: float, cfl_safety: float = 0.4, dt_max: float | None = None) -> float:
    """safety * h^2 / (2 n_eff m max(u)^{m-1} + eps); dt_max when u vanishes."""
    umax = float(np.max(f.values))
    denom = 2.0 * f.grid.n_eff * m * umax ** (m - 1.0) + EPS_FLOOR
    if umax == 0.0:
        if dt_max is None:
            raise ValueError("u vanishes identically: cfl_limit needs a dt_max fallback")
        return dt_max
    lim = cfl_safety * f.grid.h**2 / denom
    return lim if dt_max is None else min(lim, dt_max)


@njit(cache=True)
def _advance(u, t, t_stop, a_in, a_out, vol, m, safety, denom_h, dt_cap, max_steps, dt_hist, mass_hist):
    """Advance every row of ``u`` in place with a shared dt until t_stop.

    Returns (t, steps_taken, status); status 0 = reached t_stop,
    1 = step budget used, 2 = non-finite value.
    """
    K, N = u.shape
    w = np.empty(N)
    du = np.empty(N)
    for s in range(max_steps):
        if t >= t_stop:
            return t, s, 0
        umax = 0.0
        for k in range(K):
            for i in range(N):
                if u[k, i] > umax:
                    umax = u[k, i]
        dt = safety * denom_h / (m * umax ** (m - 1.0) + 1e-300)
        if dt > dt_cap:
            dt = dt_cap
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
        mass = 0.0
        for k in range(K):
            for i in range(N):
                w[i] = u[k, i] ** m
            for i in range(N):
                right = -w[N - 1] if i == N - 1 else w[i + 1]
                left = w[i - 1] if i > 0 else 0.0
                du[i] = a_out[i] * (right - w[i]) + a_in[i] * (left - w[i])
            for i in range(N):
                v = u[k, i] + dt * du[i]
                if not np.isfinite(v):
                    return t, s, 2
                u[k, i] = v if v > 0.0 else 0.0
                if k == 0:
                    mass += u[k, i] * vol[i]
        t = t_stop if last else t + dt
        dt_hist[s] = dt
        mass_hist[s] = mass
    return t, max_steps, 1


def _run(u: np.ndarray, t: float, t_stop: float, grid: Grid1D, m: float, safety: float, dt_cap: float, log: list):
    a_in, a_out = _coefficients(grid)
    vol = grid.volumes()
    denom_h = grid.h**2 / (2.0 * grid.n_eff)
    while t < t_stop:
        dt_hist = np.empty(_CHUNK)
        mass_hist = np.empty(_CHUNK)
        t, taken, status = _advance(u, t, t_stop, a_in, a_out, vol, float(m), float(safety), denom_h, float(dt_cap), _CHUNK, dt_hist, mass_hist)
        log.append((dt_hist[:taken].copy(), mass_hist[:taken].copy()))
        if status == 2:
            done = sum(len(d) for d, _ in log)
            raise NumericalAbort(f"non-finite value at step {done}", done)
    return t


def step(f: Field, dt: float, m: float, cfl_safety: float = 1.0) -> Field:
    """One explicit update; ``dt`` above ``cfl_limit(f, m, cfl_safety)`` is rejected."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    lim = cfl_limit(f, m, cfl_safety, dt_max=math.inf)
    if dt > lim * (1.0 + 1e-12):
        raise CflViolation(f"dt={dt} exceeds CFL limit {lim}")
    u = np.array(f.values, dtype=float)[None, :]
    # a single step: the CFL test above already bounds dt
    _run(u, 0.0, dt, f.grid, m, math.inf, dt, [])
    return Field(f.grid, u[0], f.time + dt)


def _dt_cap(cfg: SolveConfig, t0: float) -> float:
    return cfg.dt_max if cfg.dt_max is not None else max(cfg.t_end - t0, EPS_FLOOR)


def solve_ivp_many(u0s: Sequence[Field], m: float, cfg: SolveConfig) -> list[Trajectory]:
    """Co-evolve fields on one grid with a shared time step.

    The step is set by the largest value over all fields, so each run is
    a valid monotone evolution and ordered inputs can be compared
    snapshot by snapshot.  Mass history tracks the first field.
    """
    if not u0s:
        return []
    grid = u0s[0].grid
    t = u0s[0].time
    if any(f.grid != grid or f.time != t for f in u0s):
        raise ValueError("fields must share grid and start time")
    if not cfg.t_end > t:
        raise ValueError("t_end must exceed the start time")
    if cfg.snapshot_times[0] < t:
        raise ValueError("snapshot times precede the initial time")
    u = np.array([f.values for f in u0s], dtype=float)
    cap = _dt_cap(cfg, t)
    log: list = []
    snaps: list[list[Field]] = [[] for _ in u0s]
    for ts in cfg.snapshot_times:
        t = _run(u, t, ts, grid, m, cfg.cfl_safety, cap, log) if ts > t else t
        for k in range(len(u0s)):
            snaps[k].append(Field(grid, u[k].copy(), ts))
    if t < cfg.t_end:
        _run(u, t, cfg.t_end, grid, m, cfg.cfl_safety, cap, log)
    dts = np.concatenate([d for d, _ in log]) if log else np.empty(0)
    masses = np.concatenate([mh for _, mh in log]) if log else np.empty(0)
    return [
        Trajectory(grid, m, tuple(snaps[k]), dts, masses if k == 0 else np.empty(0), u0s[k].mass())
        for k in range(len(u0s))
    ]


def solve_ivp(u0: Field, m: float, cfg: SolveConfig) -> Trajectory:
    """Evolve ``u0`` with dt = min(CFL, time to next snapshot)."""
    return solve_ivp_many([u0], m, cfg)[0]


def slice_integral(f: Field, sub_radius: float | None = None) -> float:
    """sum u_i |cell_i ∩ B(0, sub_radius)|; the whole domain by default."""
    if sub_radius is None:
        return f.mass()
    if sub_radius > f.grid.R * (1 + 1e-12):
        raise ValueError("sub_radius exceeds the domain radius")
    return float(np.dot(f.values, f.grid.ball_overlap(sub_radius)))


def l1_distance(f: Field, other) -> float:
    """Grid L1 distance to another field or to an array of cell values."""
    v = other.values if isinstance(other, Field) else np.asarray(other, dtype=float)
    return float(np.dot(np.abs(f.values - v), f.grid.volumes()))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    r = traj.grid.centers
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "r", "u"])
        for snap in traj.snapshots:
            for ri, ui in zip(r, snap.values):
                wr.writerow([f"{snap.time:.17g}", f"{ri:.17g}", f"{ui:.17g}"])


def trajectory_metadata(traj: Trajectory, cfg: SolveConfig | None = None) -> dict:
    meta = {
        "grid": traj.grid.to_dict(),
        "m": traj.m,
        "total_steps": traj.steps,
        "mass_drift": traj.mass_drift(),
        "snapshot_times": traj.times.tolist(),
    }
    if cfg is not None:
        meta["config"] = cfg.to_dict()
    return meta


def write_trajectory_meta(traj: Trajectory, path, cfg: SolveConfig | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(trajectory_metadata(traj, cfg)))
        fh.write("\n")


def read_trajectory_csv(path, grid: Grid1D, m: float) -> Trajectory:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "r", "u"]:
        raise ValueError(f"{path}: expected header 't,r,u'")
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    times = np.unique(data[:, 0])
    snaps = []
    for t in times:
        vals = data[data[:, 0] == t, 2]
        snaps.append(Field(grid, vals, float(t)))
    return Trajectory(grid, m, tuple(snaps), np.empty(0), np.empty(0), snaps[0].mass())


def coarsen(f: Field, grid: Grid1D) -> Field:
    """Volume-weighted average of a field onto a grid with half as many cells."""
    g = f.grid
    if g.N != 2 * grid.N or (g.geometry, g.R, g.n) != (grid.geometry, grid.R, grid.n):
        raise ValueError("target grid must halve the source grid")
    mv = f.values * g.volumes()
    return Field(grid, (mv[0::2] + mv[1::2]) / grid.volumes(), f.time)


def refinement_l1_error(coarse: Trajectory, fine: Trajectory) -> float:
    """Largest grid L1 distance between matching snapshots of an N and a 2N run."""
    if not np.allclose(coarse.times, fine.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories must share snapshot times")
    return max(l1_distance(c, coarsen(f, coarse.grid)) for c, f in zip(coarse.snapshots, fine.snapshots))
