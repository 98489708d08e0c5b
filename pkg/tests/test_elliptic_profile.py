import dataclasses

import numpy as np
import pytest

from conftest import GIANT_U0
from pme_lab.elliptic_profile import (
    GiantProfile,
    ShootingError,
    inf_on_ball,
    profile_residual,
    read_profile_csv,
    rescale_profile,
    solve_profile,
    write_profile_csv,
)
from pme_lab.exact_solutions import PmeParams, giant_value, pme_residual_pointwise


@pytest.mark.parametrize("mn", sorted(GIANT_U0))
def test_center_value_matches_shooting_oracle(mn):
    p = solve_profile(PmeParams(*mn), 1.0)
    assert p.U(0.0) == pytest.approx(GIANT_U0[mn], rel=1e-9)
    assert np.all(np.diff(p.U_values) < 0)
    assert p.U_values[-1] ** mn[0] <= 1e-8 * p.w0


def test_center_value_closed_form_m2_n1(profile21):
    # for m=2, n=1: U(0) = 1/K^2, K = B(2/3, 1/2)/sqrt(3)
    from scipy.special import beta

    K = beta(2 / 3, 0.5) / np.sqrt(3)
    assert profile21.U(0.0) == pytest.approx(1 / K**2, rel=1e-10)


def test_radius_two_scales_by_four(profile21, pme21):
    p2 = solve_profile(pme21, 2.0)
    assert p2.U(0.0) == pytest.approx(4 * profile21.U(0.0), rel=1e-6)


def test_infimum_on_half_ball_positive(profile21):
    assert inf_on_ball(profile21, 0.5) > 0
    assert inf_on_ball(profile21, 0.5) == pytest.approx(profile21.U(0.5))


def test_residual_at_default_resolution(profile21):
    assert profile21.residual_max <= 1e-6
    assert profile_residual(profile21) == profile21.residual_max


def test_residual_refinement(pme21):
    res = [solve_profile(pme21, 1.0, steps=N).residual_max for N in (250, 500, 1000, 2000)]
    for a, b in zip(res, res[1:]):
        assert a / b >= 3.0


def test_shooting_insensitive_to_seed(pme21):
    a = solve_profile(pme21, 1.0, w_seed=1.0)
    b = solve_profile(pme21, 1.0, w_seed=1e-4)
    c = solve_profile(pme21, 1.0, w_seed=37.0)
    assert abs(a.w0 - b.w0) / a.w0 < 1e-8
    assert abs(a.w0 - c.w0) / a.w0 < 1e-8


def test_shooting_bracket_failure(pme21):
    with pytest.raises(ShootingError, match="w0 range"):
        solve_profile(pme21, 1.0, max_doublings=2, w_seed=1e6)


def test_invalid_arguments(pme21):
    with pytest.raises(ValueError):
        solve_profile(pme21, 0.0)
    with pytest.raises(ValueError):
        solve_profile(pme21, 1.0, tol=0.0)


def test_perturbation_detected(profile21):
    U = profile21.U_values.copy()
    # pick a node where a 10% bump keeps U strictly decreasing
    ok = [i for i in range(1, U.size - 1) if 1.1 * U[i] < U[i - 1]]
    i = ok[len(ok) // 2]
    U[i] *= 1.1
    bumped = dataclasses.replace(profile21, U_values=U, dw_values=None)
    assert profile_residual(bumped) > 100 * profile21.residual_max


def test_zero_profile_rejected(profile21):
    with pytest.raises(ValueError, match="positive"):
        GiantProfile(profile21.pme, 1.0, profile21.r_grid, np.zeros_like(profile21.U_values), 0.0, 0.0)


def test_rescale_identity_and_round_trip(profile21):
    assert rescale_profile(profile21, 1.0) is profile21
    back = rescale_profile(rescale_profile(profile21, 2.0), 1.0)
    assert np.allclose(back.U_values, profile21.U_values, rtol=1e-12, atol=0)
    assert np.allclose(back.r_grid, profile21.r_grid, rtol=1e-12, atol=0)


@pytest.mark.parametrize("s", [0.3, 2.0, 5.0])
def test_scaling_covariance(profile21, s):
    big = rescale_profile(profile21, s)
    x = profile21.r_grid[:-1]
    lhs = big.U(s * x)
    rhs = s ** (2.0 / (profile21.pme.m - 1)) * profile21.U(x)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)


def test_rescaled_profile_is_a_solution(profile21, pme21):
    big = rescale_profile(profile21, 3.0)

    def u(x, t):
        return giant_value(big, 0.0, x, t)

    res = [abs(pme_residual_pointwise(u, 1.1, 0.7, h, pme21)) for h in (1e-2, 5e-3, 2.5e-3)]
    assert res[2] < res[0]
    assert res[2] < 1e-3 * u(1.1, 0.7)


def test_csv_round_trip(profile21, tmp_path):
    path = tmp_path / "profile.csv"
    write_profile_csv(profile21, path)
    assert path.read_text().splitlines()[0] == "r,U"
    back = read_profile_csv(path, profile21.pme)
    assert np.array_equal(back.U_values, profile21.U_values)
    assert np.array_equal(back.r_grid, profile21.r_grid)
    assert back.U(0.3) == pytest.approx(profile21.U(0.3), rel=1e-8)
