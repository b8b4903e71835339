import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracmax.convergence import (SequenceError, SequenceSpec, brezis_lieb_diagnostic,
                                 conjecture_probe_1d, interpolation_constant, make_sequence,
                                 modulus_convergence_check, mollify, run_convergence,
                                 tail_smallness, uniform_convergence_check)
from fracmax.profiles import (LineFunction, grad_l1, lp_norm, make_line, make_profile, random_line,
                              zero_profile)


def tent(d=2, h=0.02, t_max=2.0):
    return make_profile("tent", {"a": 1.0}, (d, h, t_max))


def test_amplitude_distances_exact():
    f = tent()
    g = make_profile("tent", {"a": 0.5}, (2, 0.02, 2.0))
    seq, d = make_sequence(f, SequenceSpec("amplitude", 6, g=g))
    norm_g = lp_norm(g, 1) + grad_l1(g)
    assert len(seq) == 6
    assert np.allclose(d, norm_g * 2.0 ** -np.arange(1, 7), rtol=1e-12)


def test_translate_rate():
    f = tent(t_max=2.5)
    seq, d = make_sequence(f, SequenceSpec("translate", 6))
    ratios = d[1:] / d[:-1]
    assert np.all(np.abs(ratios - 0.5) < 0.05)


def test_mollify_is_average():
    f = tent(h=0.01)
    w = 0.1
    m = mollify(f, w)
    # away from the kinks the average of a linear function is itself
    t = np.array([0.3, 0.5, 0.8])
    assert np.allclose(m(t), f(t), atol=1e-12)
    # at the apex: mean of 1 - |t| over [-w/2, w/2]
    assert m(0.0) == pytest.approx(1 - w / 4, rel=1e-12)


def test_sequence_edge_cases(monkeypatch):
    seq, d = make_sequence(tent(), SequenceSpec("amplitude", 0))
    assert seq == [] and len(d) == 0
    with pytest.raises(ValueError):
        SequenceSpec("wiggle", 3)
    monkeypatch.setattr(SequenceSpec, "rate", lambda self, j: 0.1)
    with pytest.raises(SequenceError):
        make_sequence(tent(), SequenceSpec("amplitude", 3))


@given(st.sampled_from(["amplitude", "mollify", "translate", "node_jitter"]), st.integers(0, 1000))
def test_generated_sequences_decrease(kind, seed):
    f = make_profile("random_pl", {"n_knots": 4, "support": 1.0}, (2, 0.05, 2.0), seed=seed)
    seq, d = make_sequence(f, SequenceSpec(kind, 5, seed=seed))
    assert np.all(np.diff(d) < 0)
    assert np.all(d <= 4 * 2.0 ** -np.arange(1, 6))


def test_identity_sequence_all_zero():
    f = tent()
    spec = SequenceSpec("amplitude", 4, g=zero_profile(2, 0.02, 2.0))
    rep = run_convergence(f, spec, 0.5)
    for arr in (rep.w11_dist, rep.lq_grad_dist, rep.sup_dist, rep.modulus_w11_dist):
        assert np.all(arr == 0)
    assert rep.converges
    assert brezis_lieb_diagnostic(rep).consistent


@pytest.mark.parametrize("beta,variant", [(0.5, "noncentered"), (1.5, "centered")])
def test_run_convergence_converges(beta, variant):
    rep = run_convergence(tent(), SequenceSpec("amplitude", 6), beta, variant, tail_radii=(0.5, 1.0))
    assert rep.converges and rep.decreasing
    assert rep.verdict == "converges"
    for arr in (rep.w11_dist, rep.lq_grad_dist, rep.bl_integral, rep.sup_dist, rep.tail_mass):
        assert np.all(arr >= 0)
        assert len(arr) == 6
    bl = brezis_lieb_diagnostic(rep)
    assert bl.consistent and bl.pointwise_fraction == 1.0
    lines = rep.to_csv().splitlines()
    assert lines[0] == "j,w11_dist,lq_grad_dist,bl_integral,sup_dist,tail_mass"
    assert len(lines) == 7
    assert rep.to_long_csv().splitlines()[0] == "j,metric,value"


def test_pointwise_samples_deterministic():
    spec = SequenceSpec("mollify", 4)
    a = run_convergence(tent(), spec, 0.5)
    b = run_convergence(tent(), spec, 0.5)
    assert len(a.sample_t) == 32
    assert np.array_equal(a.sample_t, b.sample_t)
    assert a.to_csv() == b.to_csv()
    assert brezis_lieb_diagnostic(a) == brezis_lieb_diagnostic(b)


def test_tail_smallness():
    f = tent()
    rep = tail_smallness(f, SequenceSpec("amplitude", 5), 0.5, [0.5, 1.0, 2.0])
    assert rep.monotone_in_k and rep.uniformly_small
    assert rep.reference_tail[-1] < 0.1 * rep.reference_total
    assert all(j is not None for j in rep.j_eps)
    with pytest.raises(ValueError):
        tail_smallness(f, SequenceSpec("amplitude", 2), 0.5, [1.0, 0.5])
    same = tail_smallness(f, SequenceSpec("amplitude", 2, g=zero_profile(2, 0.02, 2.0)), 0.5, [0.5])
    assert np.all(same.tail_mass == 0)


def test_tail_vanishes_for_far_radius():
    f = tent()
    rep = tail_smallness(f, SequenceSpec("amplitude", 2), 0.5, [0.5, 3.0], eval_top=9.0)
    assert rep.tail_mass[0, 1] < 1e-3 * rep.tail_mass[0, 0]


def test_uniform_bound():
    f = tent()
    rep = uniform_convergence_check(f, SequenceSpec("amplitude", 6), 1.5)
    assert rep.violations == 0 and rep.sup_decreasing
    same = uniform_convergence_check(f, SequenceSpec("amplitude", 2, g=zero_profile(2, 0.02, 2.0)), 1.5)
    assert np.all(same.sup_dist == 0) and np.all(same.lp_dist == 0)
    with pytest.raises(ValueError):
        uniform_convergence_check(f, SequenceSpec("amplitude", 2), 0.5)


def test_modulus_convergence():
    f = tent()
    rep = modulus_convergence_check(f, SequenceSpec("amplitude", 5))
    assert np.allclose(rep.modulus_dist, rep.w11_dist, rtol=1e-12)
    g = make_profile("random_pl", {"n_knots": 6, "support": 1.5}, (2, 0.02, 2.0), seed=3)
    assert g.values.min() < 0
    assert modulus_convergence_check(g, SequenceSpec("amplitude", 8)).converges
    one = modulus_convergence_check(g, SequenceSpec("amplitude", 1))
    assert len(one.modulus_dist) == 1 and one.converges


def test_interpolation_sanity():
    f = tent()
    for kind in ("amplitude", "mollify", "node_jitter"):
        c = interpolation_constant(f, SequenceSpec(kind, 5), 1.5)
        assert np.isfinite(c) and c > 0
    with pytest.raises(ValueError):
        interpolation_constant(tent(d=1), SequenceSpec("amplitude", 2), 1.5)
    # d = 1: sup |f_j - f| <= ||f_j' - f'||_{L^1(R)}
    f1 = tent(d=1)
    seq, _ = make_sequence(f1, SequenceSpec("node_jitter", 5, seed=4))
    for fj in seq:
        diff = fj - f1
        assert lp_norm(diff, np.inf) <= grad_l1(diff) + 1e-12


def test_probe_examples():
    t = make_line([-1, 0, 1], [0, 1, 0], 0.01, pad=3.0)
    rep = conjecture_probe_1d([t, t.scaled(2.0)], 0.5)
    assert np.isfinite(rep.max_ratio)
    assert rep.ratios[0] == pytest.approx(rep.ratios[1], rel=1e-12)
    assert np.all(rep.drift <= 0.1)
    assert "PROBE" in rep.summary()
    with pytest.raises(ValueError):
        conjecture_probe_1d([], 0.5)
    with pytest.raises(ValueError):
        conjecture_probe_1d([t], 1.0)


def test_probe_corpus_reports_argmax():
    corpus = [random_line(i, 0.02) for i in range(20)]
    rep = conjecture_probe_1d(corpus, 0.5)
    assert len(rep.ratios) == 20
    assert rep.ratios[rep.argmax] == rep.max_ratio
    assert rep.to_csv().splitlines()[0] == "function_id,ratio,ratio_refined,drift"
