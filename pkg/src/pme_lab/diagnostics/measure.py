"""Polynomial bump test functions, cutoffs and the measure functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fields import as_field
from .quadrature import graded_nodes, row_integrals


def _bump(s, p):
    """(1 - s^2)^p on |s| < 1 and its derivative in s."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    base = np.where(inside, 1.0 - s * s, 0.0)
    val = base**p
    der = np.where(inside, -2.0 * p * s * base ** (p - 1), 0.0)
    return val, der


@dataclass(frozen=True)
class TestFunction:
    """φ(x, t) = A (1 - |x|²/ρ²)_+^p (1 - (t - t_c)²/τ²)_+^p, radial about the origin."""

    __test__ = False  # not a pytest class

    rho: float
    tau: float
    t_c: float = 0.0
    amplitude: float = 1.0
    power: int = 3

    def __post_init__(self):
        if not (self.rho > 0 and self.tau > 0 and self.amplitude > 0):
            raise ValueError("bump radii and amplitude must be positive")
        if self.power < 2:
            raise ValueError("power >= 2 keeps the derivatives continuous")

    @property
    def t_support(self) -> tuple[float, float]:
        return self.t_c - self.tau, self.t_c + self.tau

    def value(self, r, t):
        a, _ = _bump(np.asarray(r) / self.rho, self.power)
        b, _ = _bump((np.asarray(t) - self.t_c) / self.tau, self.power)
        return self.amplitude * a * b

    def dt(self, r, t):
        a, _ = _bump(np.asarray(r) / self.rho, self.power)
        _, db = _bump((np.asarray(t) - self.t_c) / self.tau, self.power)
        return self.amplitude * a * db / self.tau

    def dr(self, r, t):
        _, da = _bump(np.asarray(r) / self.rho, self.power)
        b, _ = _bump((np.asarray(t) - self.t_c) / self.tau, self.power)
        return self.amplitude * da * b / self.rho


def _ramp(s):
    """1 for s <= 0, (1 - s²)³ on (0, 1), 0 beyond; and its derivative."""
    s = np.asarray(s, dtype=float)
    c = np.clip(s, 0.0, 1.0)
    val = (1.0 - c * c) ** 3
    der = np.where((s > 0) & (s < 1), -6.0 * c * (1.0 - c * c) ** 2, 0.0)
    return val, der


@dataclass(frozen=True)
class CutoffFunction:
    """ζ = 1 on B(0, r_in) x [t_in0, t_in1], decaying to 0 at radius r_out and times t_out0, t_out1."""

    r_in: float
    r_out: float
    t_in: tuple[float, float]
    t_out: tuple[float, float]

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ValueError("need 0 <= r_in < r_out")
        if not self.t_out[0] < self.t_in[0] <= self.t_in[1] < self.t_out[1]:
            raise ValueError("time plateau must sit strictly inside the support")

    def _space(self, r):
        return _ramp((np.abs(np.asarray(r, dtype=float)) - self.r_in) / (self.r_out - self.r_in))

    def _time(self, t):
        t = np.asarray(t, dtype=float)
        up, dup = _ramp((self.t_in[0] - t) / (self.t_in[0] - self.t_out[0]))
        down, ddown = _ramp((t - self.t_in[1]) / (self.t_out[1] - self.t_in[1]))
        val = up * down
        der = -dup / (self.t_in[0] - self.t_out[0]) * down + up * ddown / (self.t_out[1] - self.t_in[1])
        return val, der

    def value(self, r, t):
        return self._space(r)[0] * self._time(t)[0]

    def dr(self, r, t):
        return self._space(r)[1] / (self.r_out - self.r_in) * self._time(t)[0]

    def dt(self, r, t):
        return self._space(r)[0] * self._time(t)[1]


def measure_functional(u, phi: TestFunction, resolution: int = 1024, focus: tuple[float, float] | None = (0.0, 0.0)) -> float:
    """L_u(φ) = ∬ (-u φ_t + ∇(u^m)·∇φ) dx dt over the support of φ.

    The quadrature grid is graded toward ``focus`` (r, t) when it lies in
    the support, which is where a point source sits for the Barenblatt
    solution.
    """
    f = as_field(u)
    ta, tb = phi.t_support
    if phi.rho > f.R * (1 + 1e-12):
        raise ValueError("test function support leaks outside the field domain")
    lo, hi = f.t_range
    if ta < lo or tb > hi:
        raise ValueError("test function support leaks outside the field time range")
    fr, ft = focus if focus is not None else (None, None)
    r = graded_nodes(0.0, phi.rho, resolution, fr)
    t = graded_nodes(ta, tb, resolution, ft if ft is not None and ta <= ft <= tb else None)

    def integrand(R, T):
        return -f.value(R, T) * phi.dt(R, T) + f.grad_um(R, T) * phi.dr(R, T)

    _, dt, S = row_integrals(integrand, r, t, f.n)
    return float(np.dot(S, dt))


@dataclass(frozen=True)
class DiracEstimate:
    mean: float
    spread: float
    ratios: tuple[float, ...]
    accepted: bool


SPREAD_LIMIT = 0.05


def default_bumps() -> list[TestFunction]:
    """Five bumps of different shape, all containing (0, 0) in their support."""
    return [
        TestFunction(rho=1.0, tau=1.0),
        TestFunction(rho=0.5, tau=0.25, power=4),
        TestFunction(rho=2.0, tau=0.5, t_c=0.1),
        TestFunction(rho=1.5, tau=2.0, t_c=-0.5, amplitude=3.0),
        TestFunction(rho=0.75, tau=0.6, t_c=0.2, power=5),
    ]


def dirac_mass_estimate(u, phis: list[TestFunction] | None = None, resolution: int = 1024) -> DiracEstimate:
    """Mean and relative spread (max - min)/mean of L_u(φ)/φ(0, 0) over the family."""
    phis = default_bumps() if phis is None else phis
    if len(phis) < 5:
        raise ValueError("need at least 5 test functions")
    ratios = []
    for phi in phis:
        p0 = float(phi.value(0.0, 0.0))
        if p0 == 0.0:
            raise ValueError("every test function must be nonzero at (0, 0)")
        ratios.append(measure_functional(u, phi, resolution) / p0)
    r = np.array(ratios)
    mean = float(r.mean())
    spread = float((r.max() - r.min()) / abs(mean)) if mean != 0 else float("inf")
    return DiracEstimate(mean, spread, tuple(float(x) for x in r), spread <= SPREAD_LIMIT)
