import numpy as np
import pytest

from fracmax.maximal import maximal_profile
from fracmax.oracle2d import (Grid2D, compare_with_radial, default_radius_set, oracle_maximal_2d,
                              rasterize_radial)
from fracmax.profiles import lp_norm, make_profile


@pytest.fixture(scope="module")
def tent_case():
    f = make_profile("tent", {"a": 1.0}, (2, 0.01, 2.0))
    g = rasterize_radial(f, 2.0, 0.05)
    out = oracle_maximal_2d(g, 0.5)
    return f, g, out


def test_rasterize(tent_case):
    f, g, _ = tent_case
    mid = g.n // 2
    assert g.samples[mid, mid] == 1.0
    ax = g.axis
    rho = np.hypot(ax[None, :], ax[:, None])
    assert np.all(g.samples[rho >= 1.0] == 0)
    assert np.array_equal(g.samples, np.rot90(g.samples))
    assert g.l1() == pytest.approx(lp_norm(f, 1), rel=0.02)


def test_rasterize_errors():
    with pytest.raises(ValueError):
        rasterize_radial(make_profile("tent", {"a": 1.0}, (3, 0.01, 2.0)), 2.0, 0.05)
    with pytest.raises(ValueError):
        rasterize_radial(make_profile("tent", {"a": 1.0}, (2, 0.01, 2.0)), 1.5, 0.05)
    with pytest.raises(ValueError):
        Grid2D(1.0, 0.5, np.ones((5, 5)))


def test_plateau_beta_zero():
    L, h2 = 3.0, 0.1
    n = int(round(2 * L / h2)) + 1
    a = np.ones((n, n))
    a[0] = a[-1] = 0
    a[:, 0] = a[:, -1] = 0
    out = oracle_maximal_2d(Grid2D(L, h2, a), 0.0, radius_set=[0.2, 0.5])
    inner = out.grid.samples[10:-10, 10:-10]
    assert np.allclose(inner, 1.0, atol=1e-12)


def test_monotone_in_beta_on_plateau():
    L, h2 = 3.0, 0.1
    n = int(round(2 * L / h2)) + 1
    a = np.zeros((n, n))
    a[5:-5, 5:-5] = 1.0
    g = Grid2D(L, h2, a)
    radii = [1.0, 1.5, 2.0]
    prev = None
    for beta in (0.0, 0.5, 1.0, 1.5):
        v = oracle_maximal_2d(g, beta, radius_set=radii).grid.samples
        if prev is not None:
            assert np.all(v >= prev - 1e-12)
        prev = v


def test_radial_symmetry(tent_case):
    f, _, out = tent_case
    s = out.grid.samples
    assert np.allclose(s, np.rot90(s), atol=1e-12)
    assert np.allclose(s, s.T, atol=1e-12)
    # diagonal lattice points against the radial pipeline
    rad = maximal_profile(f, 0.5, "noncentered", np.arange(0, 201) * 0.01)
    mid = out.grid.n // 2
    k = np.arange(0, 28)
    diag = s[mid + k, mid + k]
    truth = np.interp(k * 0.05 * np.sqrt(2), rad.eval_grid, rad.values)
    assert np.max(np.abs(diag - truth) / truth) <= 0.02


def test_compare_with_radial(tent_case):
    f, _, out = tent_case
    rad = maximal_profile(f, 0.5, "noncentered", np.arange(0, 201) * 0.01)
    gap = compare_with_radial(out, rad)
    assert gap.max_gap <= 0.02
    assert gap.median_gap <= gap.max_gap
    with pytest.raises(ValueError):
        compare_with_radial(out, maximal_profile(f, 0.7, "noncentered", np.arange(0, 201) * 0.01))


def test_oracle_dominates_constrained_variants(tent_case):
    f, _, out = tent_case
    grid = np.arange(0, 201) * 0.01
    for kind in ("inner_only", "outer_only"):
        rad = maximal_profile(f, 0.5, kind, grid)
        gap = compare_with_radial(out, rad)
        assert np.all(gap.oracle >= gap.radial * 0.99)


def test_zero_field_and_errors():
    g = Grid2D(1.0, 0.1, np.zeros((21, 21)))
    out = oracle_maximal_2d(g, 0.5, radius_set=[0.1, 0.3])
    assert np.all(out.grid.samples == 0)
    f = make_profile("tent", {"a": 1.0}, (2, 0.05, 1.0))
    rad = maximal_profile(make_profile("tent", {"a": 0.5}, (2, 0.05, 1.0)) * 0.0, 0.5, "noncentered")
    assert compare_with_radial(out, rad).max_gap == 0.0
    with pytest.raises(ValueError):
        oracle_maximal_2d(g, 0.5, radius_set=[])
    with pytest.raises(ValueError):
        oracle_maximal_2d(g, 0.5, radius_set=[-0.1])
    assert f.d == 2


def test_csv_and_radius_set():
    g = Grid2D(0.2, 0.1, np.zeros((5, 5)))
    lines = g.to_csv().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 26
    r = default_radius_set(0.05, 1.0)
    assert r[0] == pytest.approx(0.025) and r[-1] == pytest.approx(1.0)
