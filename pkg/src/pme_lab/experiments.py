"""End-to-end runs: the concentrated-data dichotomy family, comparison harnesses
and the giant-minorant scenario.

The dichotomy family solves u_t = Δ(u^m) on B(0, 1) with zero lateral data
and u(·, 0) = a_k χ_{B(0, 1/k)}.  Only the normalised problem with
v(·, 0) = χ_{B(0, 1/k)} is solved; u_k(x, t) = a_k v(x, a_k^{m-1} t).
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import exact_solutions as ex
from .diagnostics.measure import TestFunction, default_bumps
from .diagnostics.quadrature import spatial_integral
from .diagnostics.rates import minorant_check
from .elliptic_profile import GiantProfile, solve_profile
from .fields import FieldFunction
from .pme_solver import (
    Field,
    Grid1D,
    SolveConfig,
    Trajectory,
    indicator_field,
    l1_distance,
    refinement_l1_error,
    slice_integral,
    solve_ivp,
    solve_ivp_many,
)
from .reports import CheckReport, ClassLabel, InconclusiveError, Label, RefinementTrend, Verdict

# radius of the ball where the lower bound at time θ is checked
BOUND_RADIUS = 0.25
MEASURE_RTOL = 0.03
MIN_BLOWUP_FACTOR = 4.0
ORDER_TOL = 1e-12


class Direction(str, enum.Enum):
    BLOWUP = "BLOWUP"
    MEASURE = "MEASURE"


class ComparisonViolation(RuntimeError):
    """Ordering between two solutions broke beyond tolerance."""

    def __init__(self, message: str, time: float, cell: int, excess: float):
        super().__init__(message)
        self.time, self.cell, self.excess = time, cell, excess


@dataclass(frozen=True)
class PowerRule:
    """a_k = coef * k^power; a plain closure would not serialise."""

    coef: float = 1.0
    power: float = 2.0

    def __call__(self, k: int) -> float:
        return self.coef * float(k) ** self.power

    def to_dict(self) -> dict:
        return {"coef": self.coef, "power": self.power}


def bracket_coef(pme: ex.PmeParams) -> float:
    return ex.BarenblattParams(pme).bracket_coef


def default_C0(pme: ex.PmeParams) -> float:
    """C0 with 𝓑(0, 0) = 1 exactly; 𝓑(0, 0) = C0^{n/2 + 1/(m-1)} A^{1/(m-1)} for every k."""
    m, n = pme.m, pme.n
    p = 1.0 / (m - 1.0)
    return bracket_coef(pme) ** (-p / (n / 2.0 + p))


@dataclass(frozen=True)
class DichotomyConfig:
    pme: ex.PmeParams
    k_values: tuple[int, ...] = (4, 8, 16, 32)
    a_rule: Callable[[int], float] = PowerRule(1.0, 2.0)
    C0: float | None = None
    N: int = 256
    snapshots: int = 40
    cfl_safety: float = 0.4
    refine: bool = True
    slice_radius: float = BOUND_RADIUS
    slice_time: float | None = None
    measure_time: float = 0.02

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        if not ks or any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_values must be positive and strictly increasing")
        object.__setattr__(self, "k_values", ks)
        if any(not self.a_rule(k) > 0 for k in ks):
            raise ValueError("a_k must be positive")
        C0 = default_C0(self.pme) if self.C0 is None else float(self.C0)
        if not C0 > 0:
            raise ValueError("C0 must be positive")
        object.__setattr__(self, "C0", C0)
        if not 0 < self.slice_radius <= 1:
            raise ValueError("slice_radius must lie in (0, 1]")
        if self.snapshots < 2:
            raise ValueError("need at least two snapshots")

    def a(self, k: int) -> float:
        return float(self.a_rule(k))

    def grid(self, refine: int = 1) -> Grid1D:
        return Grid1D("radial", 1.0, self.N * refine, self.pme.n)

    def to_dict(self) -> dict:
        rule = self.a_rule.to_dict() if hasattr(self.a_rule, "to_dict") else repr(self.a_rule)
        return {
            "m": self.pme.m,
            "n": self.pme.n,
            "k_values": list(self.k_values),
            "a_rule": rule,
            "C0": self.C0,
            "N": self.N,
            "snapshots": self.snapshots,
            "cfl_safety": self.cfl_safety,
            "refine": self.refine,
            "slice_radius": self.slice_radius,
            "slice_time": self.slice_time,
            "measure_time": self.measure_time,
        }


@dataclass(frozen=True)
class ExampleConstants:
    """Shifted Barenblatt 𝓑(x, t) = (t + t0)^{-λ}(C - A|x|²/(t + t0)^{2λ/n})_+^{1/(m-1)} below v."""

    pme: ex.PmeParams
    k: int
    C0: float
    beta: float
    C: float
    t0: float
    theta: float

    @property
    def lam(self) -> float:
        return ex.barenblatt_lambda(self.pme)

    def barenblatt(self) -> ex.BarenblattParams:
        return ex.BarenblattParams(self.pme, C=self.C, t_shift=-self.t0)

    def value(self, x, t):
        return ex.barenblatt_value(self.barenblatt(), x, t)

    def to_dict(self) -> dict:
        return {"k": self.k, "beta": self.beta, "C": self.C, "t0": self.t0, "theta": self.theta, "C0": self.C0}


def example_constants(pme: ex.PmeParams, k: int, C0: float) -> ExampleConstants:
    """β, C, t0 and θ for member k.

    t0 makes 𝓑(·, 0) vanish on |x| = 1/k and θ makes 𝓑(·, θ) vanish on
    |x| = 1; both come from the root of the bracket, so
    θ + t0 = C0^{-n/(2λ)} k^β.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not C0 > 0:
        raise ValueError("C0 must be positive")
    m, n = pme.m, pme.n
    lam = ex.barenblatt_lambda(pme)
    A = bracket_coef(pme)
    beta = (m - 1.0) * n
    C = C0 * A * float(k) ** (-2.0 * beta * lam / n)
    # bracket root: (τ)^{2λ/n} = A r² / C  at r = 1/k (t = 0) and r = 1 (t = θ)
    scale = C0 ** (-n / (2.0 * lam))
    t0 = scale * float(k) ** -2.0
    theta = scale * float(k) ** beta - t0
    return ExampleConstants(pme, int(k), C0, beta, C, t0, theta)


def bound_exponent(pme: ex.PmeParams) -> float:
    """λβ(1 + 2/(n(m-1))), which reduces to n."""
    lam = ex.barenblatt_lambda(pme)
    beta = (pme.m - 1.0) * pme.n
    return lam * beta * (1.0 + 2.0 / (pme.n * (pme.m - 1.0)))


def fit_bound_constant(pme: ex.PmeParams, C0: float, k_values: Sequence[int] = (2, 4, 8, 16, 32, 64), probes: int = 257) -> float:
    """Largest c with 𝓑(x, θ) >= c k^{-λβ(1+2/(n(m-1)))} on B(0, 1/4), from the closed form."""
    e = bound_exponent(pme)
    x = np.linspace(0.0, BOUND_RADIUS, probes)
    vals = []
    for k in k_values:
        ec = example_constants(pme, k, C0)
        vals.append(float(np.min(ec.value(x, ec.theta))) * float(k) ** e)
    return min(vals)


@dataclass
class MemberResult:
    k: int
    a_k: float
    constants: ExampleConstants
    trajectory: Trajectory
    tolerance: float
    comparison_margin: float
    bound_min: float
    bound_rhs: float
    initial_mass: float

    @property
    def comparison_ok(self) -> bool:
        return self.comparison_margin >= -self.tolerance

    @property
    def bound_ok(self) -> bool:
        return self.bound_min >= self.bound_rhs

    @property
    def T(self) -> float:
        """Original-variable time θ a_k^{1-m}."""
        return self.constants.theta * self.a_k ** (1.0 - self.constants.pme.m)

    def u_slice(self, t: float) -> Field:
        """u_k(·, t) = a_k v(·, a_k^{m-1} t); needs a snapshot at the rescaled time."""
        tv = t * self.a_k ** (self.constants.pme.m - 1.0)
        snap = self.trajectory.at(tv)
        return Field(snap.grid, self.a_k * snap.values, t)


def _snapshot_times(theta: float, count: int, extra: Sequence[float]) -> tuple[float, ...]:
    ts = set(float(t) for t in np.linspace(0.0, theta, count + 1)[1:])
    ts.update(float(t) for t in extra if t > 0)
    out = sorted(ts)
    merged = [out[0]]
    for t in out[1:]:
        if t - merged[-1] > 1e-12 * max(1.0, t):
            merged.append(t)
    return tuple(merged)


def _solve_member(cfg: DichotomyConfig, k: int, times: tuple[float, ...], refine: int) -> Trajectory:
    grid = cfg.grid(refine)
    v0 = indicator_field(grid, 1.0 / k)
    return solve_ivp(v0, cfg.pme.m, SolveConfig(t_end=times[-1], cfl_safety=cfg.cfl_safety, snapshot_times=times))


def run_dichotomy_member(cfg: DichotomyConfig, k: int, extra_times: Sequence[float] = ()) -> MemberResult:
    """Solve the normalised member k and compare it with the shifted Barenblatt below it.

    ``extra_times`` are v-times that also need snapshots.  The tolerance is
    twice the largest L1 difference between the N and 2N solves; a
    comparison margin below minus the tolerance raises
    ``ComparisonViolation``.
    """
    ec = example_constants(cfg.pme, k, cfg.C0)
    times = _snapshot_times(ec.theta, cfg.snapshots, extra_times)
    traj = _solve_member(cfg, k, times, 1)
    tol = 0.0
    if cfg.refine:
        tol = 2.0 * refinement_l1_error(traj, _solve_member(cfg, k, times, 2))
    centres = traj.grid.centers
    margin, worst = math.inf, (0.0, 0)
    for snap in traj.snapshots:
        if snap.time > ec.theta * (1 + 1e-12):
            break
        d = snap.values - ec.value(centres, snap.time)
        i = int(np.argmin(d))
        if d[i] < margin:
            margin, worst = float(d[i]), (snap.time, i)
    if margin < -tol:
        raise ComparisonViolation(
            f"member k={k}: v falls below the shifted Barenblatt by {-margin:.3g} at t={worst[0]}, cell {worst[1]}",
            worst[0],
            worst[1],
            -margin,
        )
    at_theta = traj.at(_closest(times, ec.theta))
    inner = at_theta.values[centres <= BOUND_RADIUS]
    c = fit_bound_constant(cfg.pme, cfg.C0)
    return MemberResult(
        k=int(k),
        a_k=cfg.a(k),
        constants=ec,
        trajectory=traj,
        tolerance=tol,
        comparison_margin=margin,
        bound_min=float(np.min(inner)),
        bound_rhs=c * float(k) ** (-bound_exponent(cfg.pme)),
        initial_mass=indicator_field(traj.grid, 1.0 / k).mass(),
    )


def _closest(times: Sequence[float], t: float) -> float:
    return min(times, key=lambda s: abs(s - t))


@dataclass
class DichotomyRow:
    k: int
    a_k: float
    direction: Direction
    slice_integral: float
    T_k: float
    rate_bound_ok: bool
    label: str


@dataclass
class DichotomyResult:
    direction: Direction
    label: ClassLabel
    rows: list[DichotomyRow]
    members: list[MemberResult] = field(repr=False)
    evidence: dict = field(default_factory=dict)


def _ratios(cfg: DichotomyConfig, direction: Direction) -> list[float]:
    m, n = cfg.pme.m, cfg.pme.n
    if direction is Direction.BLOWUP:
        return [(k**n / cfg.a(k)) ** (m - 1.0) for k in cfg.k_values]
    return [cfg.a(k) / k**n for k in cfg.k_values]


def check_direction(cfg: DichotomyConfig, direction: Direction) -> float | None:
    """Validate the growth of a_k for ``direction``; returns the limit a for MEASURE.

    BLOWUP needs (k^n/a_k)^{m-1} strictly decreasing toward 0; MEASURE needs
    a_k/k^n to settle (last two within 5%).
    """
    r = _ratios(cfg, direction)
    if direction is Direction.BLOWUP:
        if len(r) > 1 and (any(b >= a for a, b in zip(r, r[1:])) or r[-1] > 0.5 * r[0]):
            raise ValueError(f"(k^n/a_k)^(m-1) does not decrease toward 0 along k_values: {r}")
        return None
    if len(r) > 1 and abs(r[-1] - r[-2]) > 0.05 * abs(r[-1]):
        raise ValueError(f"a_k/k^n does not settle along k_values: {r}")
    return r[-1]


def barenblatt_with_mass(pme: ex.PmeParams, mass: float) -> ex.BarenblattParams:
    """Barenblatt solution centred at (0, 0) with the given total mass."""
    ref = ex.barenblatt_mass(ex.BarenblattParams(pme), 1.0)
    p = pme.n / 2.0 + 1.0 / (pme.m - 1.0)
    return ex.BarenblattParams(pme, C=(mass / ref) ** (1.0 / p))


def initial_pairing(cfg: DichotomyConfig, k: int, phi: TestFunction, cells: int = 4096) -> float:
    """∫ a_k χ_{B(0,1/k)} φ(·, 0) dx."""
    return cfg.a(k) * spatial_integral(lambda r: phi.value(r, 0.0), 1.0 / k, cfg.pme.n, cells=cells, focus=None)


def classify_dichotomy_limit(cfg: DichotomyConfig, direction: Direction | str) -> DichotomyResult:
    """Label the limit of the family along k_values.

    BLOWUP: every member must satisfy u_k(·, T_k) >= c_T T_k^{-1/(m-1)} on
    B(0, 1/4), and the slice integrals over B(0, slice_radius) at a common
    time must diverge (trend DIVERGENT, growth factor >= 4) for CLASS_M.

    MEASURE: the initial pairings with at least three bumps must match
    a |B(0,1)| φ(0, 0) within 3%, and the slice integrals at
    ``measure_time`` must settle (trend FINITE) for CLASS_B.

    Evidence that does not support the direction's label raises
    ``InconclusiveError`` carrying the slice trend.
    """
    direction = Direction(direction)
    a_lim = check_direction(cfg, direction)
    m, n = cfg.pme.m, cfg.pme.n
    ecs = {k: example_constants(cfg.pme, k, cfg.C0) for k in cfg.k_values}
    T = {k: ecs[k].theta * cfg.a(k) ** (1.0 - m) for k in cfg.k_values}
    if direction is Direction.BLOWUP:
        t_slice = cfg.slice_time if cfg.slice_time is not None else min(T.values())
    else:
        t_slice = cfg.measure_time
    members = [run_dichotomy_member(cfg, k, extra_times=(t_slice * cfg.a(k) ** (m - 1.0),)) for k in cfg.k_values]

    c = fit_bound_constant(cfg.pme, cfg.C0)
    # c_T T^{-1/(m-1)} <= c k^{-n} for every member: θ k^{-β} is increasing in k
    c_T = c * min((ecs[k].theta * float(k) ** -ecs[k].beta) ** (1.0 / (m - 1.0)) for k in cfg.k_values)
    slices, maxima, rate_ok = [], [], []
    for mem in members:
        u = mem.u_slice(t_slice)
        slices.append(slice_integral(u, cfg.slice_radius))
        maxima.append(float(np.max(u.values)))
        u_T = mem.a_k * mem.bound_min
        rate_ok.append(u_T >= c_T * mem.T ** (-1.0 / (m - 1.0)))
    ks = list(cfg.k_values)
    trend = RefinementTrend.from_levels(ks, slices)
    max_trend = RefinementTrend.from_levels(ks, maxima)
    evidence: dict = {
        "c": c,
        "c_T": c_T,
        "slice_time": t_slice,
        "slice_radius": cfg.slice_radius,
        "comparison_margins": [mem.comparison_margin for mem in members],
        "comparison_tolerances": [mem.tolerance for mem in members],
        "bound_min": [mem.bound_min for mem in members],
        "bound_rhs": [mem.bound_rhs for mem in members],
    }

    if direction is Direction.BLOWUP:
        factor = slices[-1] / slices[0] if slices[0] > 0 else math.inf
        evidence.update(growth_factor=factor, monotone=bool(np.all(np.diff(slices) >= 0)))
        ok = trend.verdict is Verdict.DIVERGENT and factor >= MIN_BLOWUP_FACTOR and all(rate_ok)
        if not ok:
            raise InconclusiveError(
                f"blow-up evidence incomplete: trend {trend.verdict.value}, growth factor {factor:.3g}, rate bounds {rate_ok}",
                trend,
            )
        label = Label.CLASS_M
    else:
        bumps = default_bumps()[:3]
        target_scale = a_lim * ex.ball_volume(n)
        pairings = []
        for phi in bumps:
            got = initial_pairing(cfg, ks[-1], phi)
            want = target_scale * float(phi.value(0.0, 0.0))
            pairings.append({"pairing": got, "target": want, "rel_err": abs(got - want) / abs(want)})
        bp = barenblatt_with_mass(cfg.pme, target_scale)
        dists = []
        for mem in members:
            u = mem.u_slice(t_slice)
            ref = ex.barenblatt_value(bp, u.grid.centers, t_slice)
            dists.append(l1_distance(u, ref) / u.mass() if u.mass() > 0 else math.inf)
        evidence.update(
            a=a_lim,
            pairings=pairings,
            barenblatt_C=bp.C,
            l1_to_barenblatt=dists,
            initial_masses=[mem.a_k * mem.initial_mass for mem in members],
        )
        ok = trend.verdict is Verdict.FINITE and all(p["rel_err"] <= MEASURE_RTOL for p in pairings) and dists[-1] <= dists[0]
        if not ok:
            raise InconclusiveError(
                f"measure evidence incomplete: trend {trend.verdict.value}, pairings {[p['rel_err'] for p in pairings]}",
                trend,
            )
        label = Label.CLASS_B
    cl = ClassLabel(label, m - 1.0, trend, max_trend)
    rows = [
        DichotomyRow(mem.k, mem.a_k, direction, s, mem.T, ok_k, label.value)
        for mem, s, ok_k in zip(members, slices, rate_ok)
    ]
    return DichotomyResult(direction, cl, rows, members, evidence)


CSV_HEADER = ("k", "a_k", "direction", "slice_integral", "T_k", "rate_bound_ok", "label")


def rows_to_csv(rows: Sequence[DichotomyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.k, f"{r.a_k:.17g}", r.direction.value, f"{r.slice_integral:.17g}", f"{r.T_k:.17g}", str(r.rate_bound_ok).lower(), r.label])
    return buf.getvalue()


def manifest(cfg: DichotomyConfig, results: Sequence[DichotomyResult]) -> dict:
    return {
        "config": cfg.to_dict(),
        "constants": [example_constants(cfg.pme, k, cfg.C0).to_dict() for k in cfg.k_values],
        "bound_constant": fit_bound_constant(cfg.pme, cfg.C0),
        "results": [
            {"direction": r.direction.value, "label": r.label.label.value, "record": r.label.record(), "evidence": r.evidence}
            for r in results
        ],
    }


def rescaling_discrepancy(pme: ex.PmeParams, k: int, a: float, tau: float, N: int = 256) -> tuple[float, float]:
    """L1 distance between evolving a χ for a^{1-m} τ and a times (χ evolved for τ).

    Returns (distance, tolerance) with tolerance twice the N-vs-2N error of
    the scaled run.
    """
    m = pme.m

    def run(amplitude, t_end, refine):
        g = Grid1D("radial", 1.0, N * refine, pme.n)
        return solve_ivp(indicator_field(g, 1.0 / k, amplitude), m, SolveConfig(t_end=t_end))

    direct = run(a, a ** (1.0 - m) * tau, 1)
    unit = run(1.0, tau, 1)
    dist = l1_distance(direct.snapshots[-1], a * unit.snapshots[-1].values)
    fine = run(1.0, tau, 2)
    tol = 2.0 * a * refinement_l1_error(unit, fine)
    return dist, tol


def comparison_harness(u0: Field, v0: Field, m: float, cfg: SolveConfig, tol: float = ORDER_TOL) -> CheckReport:
    """Co-evolve u0 >= v0 with a shared step and report the worst v - u."""
    if np.any(v0.values > u0.values):
        raise ValueError("initial data must be ordered: u0 >= v0")
    tu, tv = solve_ivp_many([u0, v0], m, cfg)
    worst, where = -math.inf, (u0.time, 0)
    for su, sv in zip(tu.snapshots, tv.snapshots):
        d = sv.values - su.values
        i = int(np.argmax(d))
        if d[i] > worst:
            worst, where = float(d[i]), (su.time, i)
    violations = sum(int(np.sum(sv.values - su.values > tol)) for su, sv in zip(tu.snapshots, tv.snapshots))
    return CheckReport(
        name="comparison",
        lhs=worst,
        rhs=tol,
        fitted_constant=worst,
        passed=violations == 0,
        details={"violations": violations, "worst_time": where[0], "worst_cell": where[1], "snapshots": len(tu.snapshots)},
    )


def subcylinder_comparison(
    u: FieldFunction,
    radius: float,
    t_start: float,
    t_end: float,
    cap: float,
    N: int = 200,
    snapshots: int = 20,
    tol: float = 0.0,
) -> CheckReport:
    """Solve h from min(u(·, t_start), cap) on B(0, radius) with zero lateral data and check h <= u inside.

    The lateral data is below u whenever u >= 0, so the ordering on the
    parabolic boundary holds by construction.
    """
    if radius > u.R:
        raise ValueError("sub-cylinder must lie inside the field domain")
    grid = Grid1D("radial", radius, N, u.n)
    h0 = Field(grid, np.minimum(np.asarray(u.value(grid.centers, t_start), dtype=float), cap), t_start)
    times = tuple(np.linspace(t_start, t_end, snapshots + 1)[1:])
    traj = solve_ivp(h0, u.m, SolveConfig(t_end=t_end, snapshot_times=times))
    worst, where = -math.inf, (t_start, 0)
    for snap in traj.snapshots:
        d = snap.values - np.asarray(u.value(grid.centers, snap.time), dtype=float)
        i = int(np.argmax(d))
        if d[i] > worst:
            worst, where = float(d[i]), (snap.time, i)
    return CheckReport(
        name="subcylinder_comparison",
        lhs=worst,
        rhs=tol,
        fitted_constant=worst,
        passed=worst <= tol,
        details={"radius": radius, "cap": cap, "worst_time": where[0], "worst_cell": where[1]},
    )


@dataclass
class MinorantRun:
    report: CheckReport
    trajectory: Trajectory
    tolerance: float
    profile: GiantProfile


def minorant_scenario(
    pme: ex.PmeParams,
    amplitude: float = 50.0,
    N: int = 128,
    t_end: float = 0.5,
    snapshots: int = 24,
    profile: GiantProfile | None = None,
) -> MinorantRun:
    """Evolve amplitude·U on B(0, R) and check u >= U t^{-1/(m-1)} - tol.

    The run starts at t = amplitude^{-(m-1)}, where the data coincides
    with the giant blowing up at t = 0.  tol is twice the largest L1
    difference between the N and 2N runs.
    """
    profile = profile or solve_profile(pme, 1.0)
    m = pme.m
    t_start = amplitude ** (-(m - 1.0))
    if not t_end > t_start:
        raise ValueError("t_end must exceed the start time amplitude^{-(m-1)}")
    times = tuple(np.linspace(t_start, t_end, snapshots + 1))

    def run(refine):
        g = Grid1D("radial", profile.R, N * refine, pme.n)
        u0 = Field(g, amplitude * profile.U(g.centers), t_start)
        return solve_ivp(u0, m, SolveConfig(t_end=t_end, snapshot_times=times))

    coarse = run(1)
    tol = 2.0 * refinement_l1_error(coarse, run(2))
    report = minorant_check(coarse, profile, t0=0.0, tol=tol)
    return MinorantRun(report, coarse, tol, profile)
