"""Grid approximations of the infinity sets approached vertically or through full neighbourhoods."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..pme_solver import Trajectory


def _windows(traj: Trajectory, t0: float, count: int, min_snapshots: int = 2):
    times = traj.times
    after = times[times > t0]
    if after.size < min_snapshots:
        raise ValueError(f"insufficient snapshots after t0={t0}: {after.size}")
    span = after[-1] - t0
    tau = after[0] - t0
    # δ_i shrinks geometrically from the full span to the first snapshot
    return [span * (tau / span) ** ((i + 1) / count) for i in range(count)]


def _window_min(traj: Trajectory, t0: float, delta: float) -> np.ndarray:
    times = traj.times
    sel = (times > t0) & (times <= t0 + delta * (1 + 1e-12))
    return traj.values[sel].min(axis=0)


def infinity_set_vertical(traj: Trajectory, t0: float, thresholds: Sequence[float], windows: Sequence[float] | None = None) -> frozenset[int]:
    """Cells i with min over snapshots in (t0, t0 + δ_k] of u_i above k, for every threshold k.

    Threshold j is paired with window δ_j; windows shrink toward the first
    snapshot after t0 unless given explicitly.
    """
    ks = list(thresholds)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("thresholds must increase")
    deltas = list(windows) if windows is not None else _windows(traj, t0, len(ks))
    ok = np.ones(traj.grid.N, dtype=bool)
    for k, d in zip(ks, deltas):
        ok &= _window_min(traj, t0, d) > k
    return frozenset(int(i) for i in np.flatnonzero(ok))


def infinity_set_full(traj: Trajectory, t0: float, thresholds: Sequence[float], windows: Sequence[float] | None = None) -> frozenset[int]:
    """Like the vertical variant, but the minimum also runs over cells within max(δ_k, h).

    The neighbourhood always contains the adjacent cells, so the result
    is a subset of the vertical set.
    """
    ks = list(thresholds)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("thresholds must increase")
    deltas = list(windows) if windows is not None else _windows(traj, t0, len(ks))
    N, h = traj.grid.N, traj.grid.h
    ok = np.ones(N, dtype=bool)
    for k, d in zip(ks, deltas):
        wmin = _window_min(traj, t0, d)
        reach = max(1, int(math.ceil(d / h - 1e-12)))
        nb = wmin.copy()
        for s in range(1, reach + 1):
            if s >= N:
                break
            nb[:-s] = np.minimum(nb[:-s], wmin[s:])
            nb[s:] = np.minimum(nb[s:], wmin[:-s])
        ok &= nb > k
    return frozenset(int(i) for i in np.flatnonzero(ok))


def is_all_or_nothing(cells: frozenset[int], N: int, small: int = 2, large: float = 0.9) -> bool:
    """True when the set has at most ``small`` cells or covers at least ``large`` of the grid."""
    return len(cells) <= small or len(cells) >= large * N
