"""Result records shared by the checkers, trend estimators and classifier."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SCHEMA_VERSION = 1

# verdict thresholds for refinement trends
DIVERGENT_SLOPE = 0.2
PLATEAU_RTOL = 0.05


class Verdict(str, enum.Enum):
    FINITE = "FINITE"
    DIVERGENT = "DIVERGENT"
    INCONCLUSIVE = "INCONCLUSIVE"


class Label(str, enum.Enum):
    CLASS_B = "CLASS_B"
    CLASS_M = "CLASS_M"
    BOUNDED = "BOUNDED"


class InconclusiveError(RuntimeError):
    """Raised when a refinement trend cannot separate finite from divergent."""

    def __init__(self, message: str, trend: "RefinementTrend | None" = None):
        super().__init__(message)
        self.trend = trend


def _jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj: Any, **kwargs) -> str:
    payload = _jsonable(obj)
    if isinstance(payload, dict):
        payload = {"schema": SCHEMA_VERSION, **payload}
    return json.dumps(payload, indent=2, **kwargs)


@dataclass(frozen=True)
class RefinementTrend:
    """Values of a functional at increasing resolutions and the resulting verdict.

    ``FINITE`` means the last two values agree within 5%.  ``DIVERGENT``
    means the values increase monotonically and the least-squares slope of
    log(value) against log(resolution) exceeds 0.2.  Anything else is
    ``INCONCLUSIVE``.
    """

    levels: tuple[tuple[float, float], ...]
    verdict: Verdict
    growth_exponent: float

    @classmethod
    def from_levels(cls, resolutions: Sequence[float], values: Sequence[float]) -> "RefinementTrend":
        res = np.asarray(resolutions, dtype=float)
        val = np.asarray(values, dtype=float)
        if res.size != val.size:
            raise ValueError("resolutions and values differ in length")
        levels = tuple((float(r), float(v)) for r, v in zip(res, val))
        if res.size < 3 or np.any(np.diff(res) <= 0):
            slope = _log_slope(res, val) if res.size >= 2 else float("nan")
            return cls(levels, Verdict.INCONCLUSIVE, slope)
        slope = _log_slope(res, val)
        a, b = val[-2], val[-1]
        scale = max(abs(a), abs(b))
        if np.isfinite(a) and np.isfinite(b) and (scale == 0.0 or abs(b - a) <= PLATEAU_RTOL * scale):
            verdict = Verdict.FINITE
        elif np.all(np.diff(val) > 0) and slope > DIVERGENT_SLOPE:
            verdict = Verdict.DIVERGENT
        else:
            verdict = Verdict.INCONCLUSIVE
        return cls(levels, verdict, slope)

    @property
    def resolutions(self) -> np.ndarray:
        return np.array([lv[0] for lv in self.levels])

    @property
    def values(self) -> np.ndarray:
        return np.array([lv[1] for lv in self.levels])

    @property
    def last(self) -> float:
        return self.levels[-1][1]


def _log_slope(res: np.ndarray, val: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        lv = np.log(np.abs(val))
    ok = np.isfinite(lv)
    if ok.sum() < 2:
        return 0.0 if np.all(val == 0) else float("inf")
    return float(np.polyfit(np.log(res[ok]), lv[ok], 1)[0])


@dataclass(frozen=True)
class ClassLabel:
    label: Label
    q: float
    trend: RefinementTrend
    max_trend: RefinementTrend
    slice_sup: RefinementTrend | None = None

    def record(self) -> str:
        """One-line machine-readable verdict ``label,q,growth_exponent``."""
        return f"{self.label.value},{self.q!r},{self.trend.growth_exponent!r}"


@dataclass
class CheckReport:
    """Outcome of an inequality or property check.

    ``fitted_constant`` is the smallest constant that makes the inequality
    hold on the sampled data (usually ``lhs / rhs``); ``refinement_stability``
    compares it across two resolutions when both were evaluated.
    """

    name: str
    lhs: float
    rhs: float
    fitted_constant: float
    passed: bool
    refinement_stability: float = float("nan")
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return to_json(self)


def ratio(a: float, b: float) -> float:
    """``a/b`` with 0/0 = 0."""
    if b == 0.0:
        return 0.0 if a == 0.0 else float("inf")
    return a / b


def stability(c1: float, c2: float) -> float:
    """max/min ratio of two fitted constants (1.0 is perfectly stable)."""
    lo, hi = sorted((abs(c1), abs(c2)))
    if hi == 0.0:
        return 1.0
    if lo == 0.0:
        return float("inf")
    return hi / lo
