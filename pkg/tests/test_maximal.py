import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracmax.derivatives import refine
from fracmax.geometry import build_average_table
from fracmax.maximal import (KINDS, VariantSpec, good_radius_stats, maximal_1d, maximal_profile,
                             maximal_radial, maximize)
from fracmax.profiles import (LineFunction, lp_norm, make_line, make_profile, modulus,
                              unit_ball_volume, zero_profile)


def tent(d=2, h=0.02, a=1.0, t_max=2.0):
    return make_profile("tent", {"a": a}, (d, h, t_max))


def indicator(d=2, h=0.01):
    return make_profile("smoothed_indicator", {"a": 1.0, "ramp": 0.02}, (d, h, 2.0))


def test_variant_spec():
    with pytest.raises(ValueError):
        VariantSpec("lacunary", 0.5)
    v = VariantSpec("inner_only", 0.5)
    assert v.admits(0.3, 0.2, 0.5) and not v.admits(0.4, 0.2, 0.5)
    assert VariantSpec("outer_only").admits(0.7, 0.2, 0.5)
    assert not VariantSpec("truncated_quarter").admits(1.0, 0.3, 1.0)
    assert VariantSpec("centered").admits(1.0, 0.7, 1.0)


def test_centered_indicator_value():
    f = indicator()
    res = maximal_profile(f, 0.7, "centered", [0.0, 0.5, 1.0])
    assert res.values[0] == pytest.approx(1.0, rel=0.02)
    assert abs(res.best_r[0] - 1.0) <= 0.03


def test_centered_tent_closed_form_1d():
    h = 0.002
    f = tent(d=1, h=h)
    value, good = maximal_radial(build_average_table(f, 0.5, [0.0], np.arange(1, 1001) * h),
                                 0.0, VariantSpec("centered", 0.5))
    assert value == pytest.approx((2 / 3) ** 1.5, abs=1e-6)
    assert abs(good.balls[np.argmax(good.balls[:, 2]), 1] - 2 / 3) <= h


def test_centered_off_grid_uses_exact_column():
    f = tent(d=2, h=0.02)
    table = build_average_table(f, 0.5, np.arange(0, 50) * 0.02, np.arange(1, 100) * 0.02)
    with pytest.raises(ValueError):
        maximal_radial(table, 0.333, VariantSpec("centered", 0.5))
    v, gb = maximal_radial(table, 0.333, VariantSpec("centered", 0.5), f=f)
    assert v > 0 and np.allclose(gb.balls[:, 0], 0.333)


def test_maximize_contract():
    f = tent()
    table = build_average_table(f, 0.5, np.arange(0, 50) * 0.02, np.arange(1, 60) * 0.02)
    with pytest.raises(ValueError):
        maximize(table, [0.1], VariantSpec("noncentered", 0.7))
    with pytest.raises(ValueError):
        maximize(table, [5.0], VariantSpec("noncentered", 0.5))


def test_zero_profile():
    z = zero_profile(2, 0.05, 1.0)
    res = maximal_profile(z, 0.5, "noncentered")
    assert np.all(res.values == 0)
    assert all(len(g) == 0 for g in res.good)
    stats = good_radius_stats(res)
    assert stats.count == 0 and math.isnan(stats.r_min)


def test_variant_ordering_and_scaling():
    f = tent(h=0.02)
    grid = np.arange(0, 101) * 0.02
    vals = {k: maximal_profile(f, 0.5, k, grid).values for k in KINDS}
    full = vals["noncentered"]
    for k in ("centered", "truncated_quarter", "inner_only", "outer_only"):
        assert np.all(vals[k] <= full * (1 + 1e-12) + 1e-15), k
    # truncation bites near the origin
    small = grid < 0.5
    assert np.all(vals["truncated_quarter"][small] < full[small])
    doubled = maximal_profile(f * 2.0, 0.5, "noncentered", grid).values
    assert np.allclose(doubled, 2 * full, rtol=1e-12)


def test_good_ball_sets_respect_variant():
    f = make_profile("bump_sum", {"bumps": [[0.5, 0.3, 1.0], [1.2, 0.2, 0.6]]}, (2, 0.02, 2.0))
    grid = np.arange(0, 101) * 0.02
    for kind in KINDS:
        res = maximal_profile(f, 0.6, kind, grid)
        v = res.variant
        for gb in res.good:
            if gb.value > 0:
                assert len(gb) > 0
                assert gb.r_min > 0
            for s, r, a in gb.balls:
                assert v.admits(s, r, gb.t, tol=1e-9)
                assert a >= (1 - 1e-6) * gb.value


def test_csv_header():
    res = maximal_profile(tent(), 0.5, "noncentered", np.arange(0, 11) * 0.02)
    lines = res.to_csv().splitlines()
    assert lines[0] == "t,value,r_min,r_max,s_best,r_best"
    assert len(lines) == 12


def test_cache_dir_reuse(tmp_path):
    f = tent()
    a = maximal_profile(f, 0.5, "noncentered", cache_dir=tmp_path)
    b = maximal_profile(f, 0.5, "noncentered", cache_dir=tmp_path)
    assert np.array_equal(a.values, b.values)
    assert len(list(tmp_path.iterdir())) == 1


def test_good_radius_stats():
    res = maximal_profile(indicator(h=0.02), 0.7, "noncentered")
    st_ = good_radius_stats(res)
    assert st_.r_min >= 0.5
    assert st_.count > 0
    # beta = 0 on a plateau: M f = f there and radius-zero limits appear
    p = make_profile("smoothed_indicator", {"a": 1.0, "ramp": 0.5}, (2, 0.02, 2.0))
    st0 = good_radius_stats(maximal_profile(p, 0.0, "noncentered"))
    assert st0.zero_radius_points > 0


def test_grid_stability():
    for f in (tent(h=0.02), indicator(h=0.02),
              make_profile("bump_sum", {"bumps": [[0.6, 0.4, 1.0]]}, (2, 0.02, 2.0))):
        grid = np.arange(0, 101) * 0.02
        a = maximal_profile(f, 0.5, "noncentered", grid).values
        b = maximal_profile(refine(f), 0.5, "noncentered", grid, 0.01).values
        assert np.max(np.abs(a - b)) <= 0.02 * np.max(b)


# -- the line ----------------------------------------------------------------------

def test_line_centered_tent():
    f = make_line([-1, 0, 1], [0, 1, 0], 0.001, pad=1.0)
    res = maximal_1d(f, 0.5, centered=True)
    i = int(np.argmin(np.abs(res.eval_grid)))
    assert res.values[i] == pytest.approx((2 / 3) ** 1.5, abs=1e-6)
    assert abs(res.best_r[i] - 2 / 3) <= 2 * f.h


def test_line_noncentered_dominates_and_lebesgue_bound():
    f = make_line([-1, -0.3, 0.2, 1], [0, 1, -0.5, 0], 0.01, pad=1.0)
    nc = maximal_1d(f, 0.0)
    c = maximal_1d(f, 0.0, centered=True)
    assert np.all(nc.values >= c.values - 1e-12)
    # M_0 f >= |f| at nodes, up to one grid cell of interpolation
    slack = np.max(np.abs(np.diff(f.values)))
    assert np.all(nc.values >= np.abs(f.values) - slack)


def test_line_translation_equivariance():
    f = make_line([-1, 0, 0.5, 1], [0, 1, 0.3, 0], 0.01, pad=1.0)
    shift = 7
    g = LineFunction(f.x_min, f.h, np.concatenate([np.zeros(shift), f.values[:-shift]]))
    for centered in (True, False):
        a = maximal_1d(f, 0.4, centered).values
        b = maximal_1d(g, 0.4, centered).values
        # away from the right edge, where the shifted copy loses room
        assert np.allclose(b[shift:-60], a[:-shift - 60], rtol=1e-12, atol=1e-15)


def test_line_errors_and_zero():
    f = make_line([-1, 0, 1], [0, 1, 0], 0.05, pad=1.0)
    with pytest.raises(ValueError):
        maximal_1d(f, 1.0)
    z = LineFunction(0.0, 0.1, np.zeros(11))
    assert np.all(maximal_1d(z, 0.5).values == 0)


def test_line_matches_radial_for_even_functions():
    # the even line tent is the d = 1 radial tent; the two pipelines must agree
    h = 0.01
    line = make_line([-1, 0, 1], [0, 1, 0], h, pad=1.0)
    rad = tent(d=1, h=h)
    grid = np.arange(0, 151) * h
    for centered in (True, False):
        lv = maximal_1d(line, 0.5, centered)
        kind = "centered" if centered else "noncentered"
        rv = maximal_profile(rad, 0.5, kind, grid).values
        idx = np.searchsorted(lv.eval_grid, grid - 1e-9)
        assert np.allclose(lv.values[idx], rv, rtol=2e-3)


# -- properties --------------------------------------------------------------------

def rand_profile(seed, d, h=0.05):
    return make_profile("random_pl", {"n_knots": 4, "support": 1.0}, (d, h, 1.5), seed=seed)


@given(st.integers(0, 5000), st.integers(0, 5000), st.integers(1, 3), st.floats(0, 0.95),
       st.sampled_from(KINDS))
def test_sublinearity(s1, s2, d, frac, kind):
    f, g = rand_profile(s1, d), rand_profile(s2, d)
    beta = frac * d
    grid = np.arange(0, 31) * 0.05
    a = maximal_profile(f, beta, kind, grid).values
    b = maximal_profile(g, beta, kind, grid).values
    c = maximal_profile(f + g, beta, kind, grid).values
    assert np.all(c <= (a + b) * (1 + 1e-12) + 1e-15)


@given(st.integers(0, 5000), st.integers(1, 4), st.floats(0.05, 0.95))
def test_radius_lower_bound_and_envelope(seed, d, frac):
    f = rand_profile(seed, d)
    beta = frac * d
    res = maximal_profile(f, beta, "noncentered")
    g = modulus(f)
    linf = np.max(g.values)
    l1w = lp_norm(g, 1) / unit_ball_volume(d)
    envelope = linf ** ((d - beta) / d) * l1w ** (beta / d)
    assert np.all(res.values <= envelope * (1 + 1e-9))
    for gb in res.good:
        if gb.value > 0:
            assert gb.r_min >= (gb.value * (1 - 1e-6) / linf) ** (1 / beta) - res.h - 1e-12


@given(st.integers(0, 5000), st.floats(0, 0.9))
def test_line_sublinear_and_centered_below(seed, beta):
    from fracmax.profiles import random_line
    f, g = random_line(seed, 0.05), random_line(seed + 1, 0.05)
    s = LineFunction(f.x_min, f.h, f.values + g.values)
    for centered in (True, False):
        a, b, c = (maximal_1d(x, beta, centered).values for x in (f, g, s))
        assert np.all(c <= a + b + 1e-12)
    assert np.all(maximal_1d(f, beta, True).values <= maximal_1d(f, beta).values + 1e-12)
