"""Refinement trends for L^q norms, gradient norms and slice suprema, and the classifier."""

from __future__ import annotations

import math

import numpy as np

from ..fields import FieldFunction, as_field
from ..pme_solver import Trajectory, slice_integral
from ..reports import ClassLabel, InconclusiveError, Label, RefinementTrend, Verdict
from .quadrature import Region, check_inside, default_resolutions, spacetime_integral, spacetime_max, spatial_integral


def _trend(fn, levels: int, base: int) -> RefinementTrend:
    if levels < 3:
        raise ValueError("a refinement trend needs at least 3 levels")
    res = default_resolutions(levels, base)
    return RefinementTrend.from_levels(res, [fn(N) for N in res])


def lq_spacetime_trend(u, region: Region, q: float, levels: int = 3, base: int = 256) -> RefinementTrend:
    """∬_region u^q at increasing graded resolutions."""
    if not q > 0:
        raise ValueError("q must be positive")
    f = as_field(u)
    check_inside(f, region)

    def integrand(r, t):
        with np.errstate(over="ignore"):
            return np.asarray(f.value(r, t), dtype=float) ** q

    return _trend(lambda N: spacetime_integral(integrand, region, f.n, N), levels, base)


def gradient_lq_trend(u, region: Region, q: float, levels: int = 3, base: int = 256) -> RefinementTrend:
    """∬_region |∇(u^m)|^q at increasing graded resolutions."""
    if not q >= 1:
        raise ValueError("q must be at least 1")
    f = as_field(u)
    check_inside(f, region)

    def integrand(r, t):
        with np.errstate(over="ignore"):
            return np.abs(np.asarray(f.grad_um(r, t), dtype=float)) ** q

    return _trend(lambda N: spacetime_integral(integrand, region, f.n, N), levels, base)


def max_trend(u, region: Region, levels: int = 3, base: int = 256) -> RefinementTrend:
    f = as_field(u)
    check_inside(f, region)
    return _trend(lambda N: spacetime_max(lambda r, t: f.value(r, t), region, f.n, N), levels, base)


def slice_sup_trend(
    u,
    D: float,
    window: tuple[float, float],
    samples: int = 32,
    levels: int = 3,
    shrink: float = 4.0,
) -> RefinementTrend:
    """sup over t in (t_a + δ, t_b) of ∫_{B(0,D)} u(·, t), with δ shrinking by ``shrink`` per level.

    The reported resolution of a level is 1/δ.  Closed-form fields are
    sampled at ``samples`` times spaced geometrically from the left end;
    trajectories use their snapshots inside the window.
    """
    t_a, t_b = window
    if not t_b > t_a:
        raise ValueError("empty time window")
    deltas = [(t_b - t_a) * shrink ** (-(j + 1)) for j in range(levels)]
    vals = []
    if isinstance(u, Trajectory):
        if t_a < u.times[0] - 1e-12 or t_b > u.times[-1] + 1e-12:
            raise ValueError("window outside trajectory time range")
        for d in deltas:
            sel = [s for s in u.snapshots if t_a + d <= s.time <= t_b]
            if not sel:
                raise ValueError(f"no snapshots in ({t_a + d}, {t_b})")
            vals.append(max(slice_integral(s, D) for s in sel))
    else:
        f: FieldFunction = as_field(u)
        if D > f.R * (1 + 1e-12):
            raise ValueError("slice ball exceeds field domain")
        for d in deltas:
            ts = t_a + d * (((t_b - t_a) / d) ** np.linspace(0.0, 1.0, samples))
            vals.append(max(spatial_integral(lambda r: f.value(r, t), D, f.n) for t in ts))
    return RefinementTrend.from_levels([1.0 / d for d in deltas], vals)


def classify(u, region: Region, levels: int = 3, base: int = 256) -> ClassLabel:
    """BOUNDED, CLASS_B or CLASS_M from the L^{m-1} trend over ``region``.

    A bounded maximum across refinement gives BOUNDED.  Otherwise the
    pressure trend decides.  An inconclusive trend raises InconclusiveError.
    """
    f = as_field(u)
    q = f.m - 1.0
    mt = max_trend(f, region, levels, base)
    if mt.verdict is Verdict.FINITE and math.isfinite(mt.last):
        lq = lq_spacetime_trend(f, region, q, levels, base)
        return ClassLabel(Label.BOUNDED, q, lq, mt)
    if mt.verdict is Verdict.INCONCLUSIVE:
        raise InconclusiveError("maximum neither bounded nor clearly growing under refinement", mt)
    lq = lq_spacetime_trend(f, region, q, levels, base)
    if lq.verdict is Verdict.FINITE:
        return ClassLabel(Label.CLASS_B, q, lq, mt)
    if lq.verdict is Verdict.DIVERGENT:
        return ClassLabel(Label.CLASS_M, q, lq, mt)
    raise InconclusiveError(f"L^{q:g} trend inconclusive", lq)
