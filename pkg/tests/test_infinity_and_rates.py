import numpy as np
import pytest

from pme_lab.diagnostics import (
    Region,
    blowup_rate_fit,
    classify,
    infinity_set_full,
    infinity_set_vertical,
    is_all_or_nothing,
    minorant_check,
)
from pme_lab.exact_solutions import FastBlowupParams
from pme_lab.fields import ConstantField, FastBlowupField, GiantField, sample_trajectory
from pme_lab.pme_solver import Grid1D
from pme_lab.reports import Label

THRESHOLDS = [1, 10, 100, 1000]
TIMES = np.logspace(-12, 0, 49)


@pytest.fixture(scope="module")
def grid():
    return Grid1D("radial", 1.0, 200, 1)


@pytest.fixture(scope="module")
def corpus(grid, barenblatt21, giant21):
    return {
        "barenblatt": (sample_trajectory(barenblatt21, grid, TIMES, mode="sup"), barenblatt21, Region(1.0, -1.0, 1.0, 0.0, 0.0)),
        "giant": (sample_trajectory(giant21, grid, TIMES, mode="sup"), giant21, Region(0.5, -0.5, 0.5, 0.0, 0.0)),
        "constant": (
            sample_trajectory(ConstantField(5.0, 2.0, 1, R=1.0), grid, TIMES),
            ConstantField(5.0, 2.0, 1, R=1.0),
            Region(0.5, -0.5, 0.5, 0.0, 0.0),
        ),
    }


def test_barenblatt_sets(corpus):
    traj = corpus["barenblatt"][0]
    assert infinity_set_vertical(traj, 0.0, THRESHOLDS) == {0}
    assert infinity_set_full(traj, 0.0, THRESHOLDS) == frozenset()


def test_giant_sets_cover_every_cell(corpus, grid):
    traj = corpus["giant"][0]
    full = infinity_set_full(traj, 0.0, THRESHOLDS)
    vert = infinity_set_vertical(traj, 0.0, THRESHOLDS)
    assert len(full) == grid.N and full <= vert


def test_bounded_field_has_no_infinity(corpus):
    traj = corpus["constant"][0]
    assert infinity_set_vertical(traj, 0.0, THRESHOLDS) == frozenset()


def test_subset_relation_and_all_or_nothing(corpus, grid):
    for traj, _, _ in corpus.values():
        for t0 in (0.0, 1e-6, 0.5):
            vert = infinity_set_vertical(traj, t0, THRESHOLDS)
            assert infinity_set_full(traj, t0, THRESHOLDS) <= vert
            assert is_all_or_nothing(vert, grid.N)


def test_later_slice_of_barenblatt_is_empty(corpus):
    assert infinity_set_vertical(corpus["barenblatt"][0], 0.5, THRESHOLDS) == frozenset()


def test_total_blowup_iff_class_m(corpus, grid):
    for name, (traj, field, region) in corpus.items():
        label = classify(field, region).label
        total = len(infinity_set_vertical(traj, 0.0, THRESHOLDS)) >= 0.9 * grid.N
        assert total == (label is Label.CLASS_M), name


def test_infinity_set_needs_snapshots(corpus):
    with pytest.raises(ValueError, match="insufficient"):
        infinity_set_vertical(corpus["giant"][0], 1.0, THRESHOLDS)
    with pytest.raises(ValueError):
        infinity_set_full(corpus["giant"][0], 0.0, [10, 1])


def test_is_all_or_nothing():
    assert is_all_or_nothing(frozenset({3}), 100)
    assert is_all_or_nothing(frozenset(range(95)), 100)
    assert not is_all_or_nothing(frozenset(range(50)), 100)


# blow-up rates


def test_giant_rate(giant21):
    fit = blowup_rate_fit(giant21, 0.3, 0.0)
    assert fit.exponent == pytest.approx(-1.0, rel=0.05)
    assert fit.exponent <= -1.0 + 0.1


def test_barenblatt_rate(barenblatt21):
    assert blowup_rate_fit(barenblatt21, 0.0, 0.0).exponent == pytest.approx(-1 / 3, rel=0.05)


def test_fast_blowup_rate_diverges(profile21):
    fb = FastBlowupField(FastBlowupParams(profile21, lambda t: 1.0 / t))
    exps = [blowup_rate_fit(fb, 0.2, 0.0, delta=d, decades=1, samples=10).exponent for d in (1.0, 0.3, 0.1)]
    assert exps[0] > exps[1] > exps[2]
    assert exps[2] < 5 * exps[0]


def test_rate_fit_from_trajectory(giant21):
    g = Grid1D("radial", 1.0, 64, 1)
    traj = sample_trajectory(giant21, g, np.logspace(-3, 0, 16))
    fit = blowup_rate_fit(traj, 0.0, 0.0)
    assert fit.exponent == pytest.approx(-1.0, rel=0.05)


def test_rate_fit_preconditions(giant21):
    with pytest.raises(ValueError, match="at least 5"):
        blowup_rate_fit(giant21, 0.3, 0.0, samples=4)
    with pytest.raises(ValueError, match="decades"):
        blowup_rate_fit(giant21, 0.3, 0.0, decades=0.5)


# minorant


def test_giant_saturates_its_minorant(giant21, profile21):
    rep = minorant_check(giant21, profile21, times=np.linspace(0.05, 0.5, 10))
    assert rep.passed
    assert abs(rep.lhs) < 1e-12


def test_earlier_giant_falls_below_minorant(profile21):
    early = GiantField(profile21, -0.01)
    # U (t + 0.01)^{-1} < U t^{-1}
    with pytest.raises(ValueError, match="no total blow-up"):
        minorant_check(early, profile21, times=[0.05, 0.1])


def test_barenblatt_rejected_as_minorant_data(profile21, barenblatt21):
    with pytest.raises(ValueError, match="no total blow-up"):
        minorant_check(barenblatt21, profile21, times=np.linspace(0.05, 0.5, 10))


def test_minorant_closed_form_needs_times(giant21, profile21):
    with pytest.raises(ValueError):
        minorant_check(giant21, profile21)
