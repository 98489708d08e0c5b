import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from pme_lab.exact_solutions import BarenblattParams, PmeParams, barenblatt_value, pme_residual_pointwise
from pme_lab.fields import BarenblattField, ScaledField
from pme_lab.pme_solver import Field, Grid1D, SolveConfig, cfl_limit, solve_ivp_many, step

ms = st.sampled_from([1.5, 2.0, 3.0])
ns = st.sampled_from([1, 2, 3])
fast = settings(max_examples=30, deadline=None)


def random_field(grid, seed, scale):
    rng = np.random.default_rng(seed)
    return rng.random(grid.N) * scale * (rng.random(grid.N) < 0.7)


@fast
@given(m=ms, n=ns, seed=st.integers(0, 2**32 - 1), scale=st.floats(0.1, 5.0))
def test_step_preserves_nonnegativity(m, n, seed, scale):
    g = Grid1D("radial", 1.0, 32, n)
    f = Field(g, random_field(g, seed, scale))
    out = step(f, cfl_limit(f, m, 1.0), m)
    assert np.all(out.values >= 0)
    assert out.values.max() <= f.values.max() * (1 + 1e-12)


@fast
@given(m=ms, n=ns, seed=st.integers(0, 2**32 - 1), geometry=st.sampled_from(["slab", "radial"]))
def test_ordered_pairs_stay_ordered(m, n, seed, geometry):
    n = 1 if geometry == "slab" else n
    g = Grid1D(geometry, 1.0, 24, n)
    lo = random_field(g, seed, 2.0)
    hi = lo + random_field(g, seed + 1, 1.0)
    a, b = solve_ivp_many([Field(g, lo), Field(g, hi)], m, SolveConfig(0.02, snapshot_times=(0.005, 0.01, 0.02)))
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert np.all(sa.values <= sb.values + 1e-12)


@fast
@given(m=ms, n=ns, c1=st.floats(0.1, 3.0), c2=st.floats(0.1, 3.0), t=st.floats(0.01, 10.0))
def test_barenblatt_monotone_in_C(m, n, c1, c2, t):
    lo, hi = sorted((c1, c2))
    pme = PmeParams(m, n)
    x = np.linspace(0.0, 10.0, 64)
    assert np.all(barenblatt_value(BarenblattParams(pme, C=lo), x, t) <= barenblatt_value(BarenblattParams(pme, C=hi), x, t))


@fast
@given(s=st.floats(0.3, 4.0), x=st.floats(0.0, 0.5), t=st.floats(0.5, 2.0))
def test_intrinsic_rescaling_is_a_solution(s, x, t):
    pme = PmeParams(2.0, 1)
    f = ScaledField(BarenblattField(BarenblattParams(pme)), s)
    u = lambda y, tt: float(f.value(y, tt))  # noqa: E731
    h = 1e-3
    res = pme_residual_pointwise(u, x, t, h, pme)
    assert abs(res) <= 1e-3 * max(u(x, t) / t, 1.0)
