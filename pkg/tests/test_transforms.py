import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeprob import fock, io, series, transforms
from freeprob.algebra import Algebra, NotInvertible
from freeprob.series import Jet, MultilinearMap
from freeprob.transforms import MomentData

from conftest import assert_close
from oracles import deterministic_moments, scalar_r_coeffs, scalar_s_coeffs

C1 = Algebra.matrix(1)


def scalar_moments(vals):
    return MomentData(C1, [np.full((1,) * (n + 2), v, dtype=complex) for n, v in enumerate(vals)])


def test_psi_phi_c_scalar_examples():
    m = scalar_moments([1, 2, 5])
    assert np.allclose(transforms.psi_jet(m).scalars(), [0, 1, 2, 5])
    assert np.allclose(transforms.phi_jet(m).scalars(), [1, 2, 5])
    assert np.allclose(transforms.c_jet(m).scalars(), [0, 1, 1, 2, 5])


def test_catalan_moments_give_alternating_s():
    res = transforms.s_transform(scalar_moments([1, 2, 5, 14]))
    assert_close(res.jet.scalars(), [1, -1, 1, -1], 1e-9)
    assert res.ok


def test_semicircle_r_transform():
    res = transforms.r_transform(scalar_moments([0, 1, 0, 2]))
    assert_close(res.jet.scalars(), [0, 1, 0, 0], 1e-10)
    assert res.diagnostics["residual"] <= 1e-12


def test_constant_one():
    # a = 1: every moment is 1 and both transforms are the constant germ 1
    m = scalar_moments([1] * 5)
    assert_close(transforms.s_transform(m).jet.scalars(), [1, 0, 0, 0, 0], 1e-12)
    assert_close(transforms.r_transform(m).jet.scalars(), [1, 0, 0, 0, 0], 1e-12)


def test_first_s_term_depends_on_second_moment():
    # S_1 = 1/m1 - m2/m1^3 for scalars
    s = transforms.s_transform(scalar_moments([2, 3])).jet.scalars()
    assert np.allclose(s, [0.5, 0.5 - 3 / 8])


@settings(max_examples=25, deadline=None)
@given(
    m=st.lists(st.integers(-9, 9), min_size=1, max_size=5).filter(lambda v: v[0] != 0),
)
def test_scalar_s_matches_series_reversion(m):
    got = transforms.s_transform(scalar_moments(m)).jet.scalars()
    want = scalar_s_coeffs(m)
    scale = max(1.0, max(abs(w) for w in want))
    assert np.abs(np.array(got) - want).max() <= 1e-9 * scale


@settings(max_examples=25, deadline=None)
@given(m=st.lists(st.integers(-9, 9), min_size=1, max_size=5))
def test_scalar_r_matches_noncrossing_cumulants(m):
    got = transforms.r_transform(scalar_moments(m)).jet.scalars()
    want = scalar_r_coeffs(m)
    scale = max(1.0, max(abs(w) for w in want))
    assert np.abs(np.array(got) - want).max() <= 1e-9 * scale


@pytest.mark.parametrize("k", [1, 2, 3])
def test_deterministic_variable(k):
    # with E = id on B, S_a = a^{-1} and R_a = a
    alg = Algebra.matrix(k)
    a = alg.unit + alg.random(k, 0.4)
    m = deterministic_moments(alg, a, 4)
    s = transforms.s_transform(m)
    r = transforms.r_transform(m)
    assert series.equal(s.jet, Jet.constant(alg, alg.inv(a), 3), 1e-10)
    assert series.equal(r.jet, Jet.constant(alg, a, 3), 1e-10)
    assert s.ok and r.ok


def _moments_times_constant(m, a, side):
    """Moments of ``a y`` (side="left") or ``y a`` (side="right")."""
    alg = m.algebra
    ra = alg.right_matrix(a)
    la = alg.left_matrix(a)
    mu = []
    for n, t in enumerate(m.mu, start=1):
        if side == "left":
            # mu_y(b_1 a, ..., b_n a)
            for ax in range(1, n + 1):
                t = np.moveaxis(np.tensordot(t, ra, axes=([ax], [0])), -1, ax)
        else:
            # mu_y(b_1, a b_2, ..., a b_n) a
            for ax in range(2, n + 1):
                t = np.moveaxis(np.tensordot(t, la, axes=([ax], [0])), -1, ax)
            t = np.tensordot(ra, t, axes=([1], [0]))
        mu.append(t)
    return MomentData(alg, mu)


@pytest.mark.parametrize("seed", range(4))
def test_twist_with_deterministic_factor(seed):
    """Elements of B are free from everything, so the product formula must hold."""
    alg = Algebra.matrix(2)
    a = alg.unit + alg.random((seed, 7), 0.4)
    y = fock.random_model(alg, 1, "s", 3, seed).moments(4)
    sa = Jet.constant(alg, alg.inv(a), 3)
    sy = transforms.s_transform(y).jet
    s_ay = transforms.s_transform(_moments_times_constant(y, a, "left")).jet
    s_ya = transforms.s_transform(_moments_times_constant(y, a, "right")).jet
    assert series.equal(s_ay, transforms.twisted_rhs(sa, sy), 1e-9)
    assert series.equal(s_ya, transforms.twisted_rhs(sy, sa), 1e-9)
    # the untwisted product is wrong for the noncommuting order
    assert not series.equal(s_ya, series.mul(sy, sa), 1e-3)


def test_psi_round_trip(m2):
    x = fock.random_model(m2, 1, "s", 3, 5)
    m = x.moments(4)
    s = transforms.s_transform(m).jet
    back = transforms.psi_from_s(s)
    assert series.equal(back, transforms.psi_jet(m), 1e-10)


@pytest.mark.parametrize("flavor", ["s", "r"])
def test_model_closed_forms(alg, flavor):
    x = fock.random_model(alg, 1, flavor, 3, 17)
    m = x.moments(4)
    if flavor == "s":
        got = transforms.s_transform(m).jet
        want = transforms.s_from_model_coeffs(alg, x.coeffs)
        assert series.equal(got, want, 1e-7)
    else:
        res = transforms.r_transform(m)
        assert series.equal(res.jet, x.coefficient_jet(), 1e-8)
        assert res.diagnostics["residual"] <= 1e-7


def test_scaling_covariance(m2):
    lam = 1.7 - 0.3j
    m = fock.random_model(m2, 1, "s", 3, 3).moments(4)
    s, s_l = transforms.s_transform(m).jet, transforms.s_transform(m.scaled(lam)).jet
    assert series.equal(s_l, s * (1 / lam), 1e-10)
    r, r_l = transforms.r_transform(m).jet, transforms.r_transform(m.scaled(lam)).jet
    want = Jet(m2, [lam ** (n + 1) * t for n, t in enumerate(r.terms)])
    assert series.equal(r_l, want, 1e-10)


def test_degrees(m2):
    m = fock.random_model(m2, 1, "s", 2, 0).moments(3)
    assert transforms.s_transform(m).jet.degree == 2
    assert transforms.r_transform(m).jet.degree == 2
    assert transforms.c_jet(m).degree == 4


def test_non_invertible_mean_rejected(m2):
    m = deterministic_moments(m2, m2.basis(1), 2)
    with pytest.raises(NotInvertible):
        transforms.s_transform(m)


def test_moment_shape_and_bimodularity_checks(m2):
    with pytest.raises(ValueError):
        MomentData(m2, [np.zeros((4, 4, 4))])
    good = fock.random_model(m2, 1, "s", 1, 0).moments(2)
    assert good.check() <= 1e-12
    bad = MomentData(m2, [good.mu[0], np.random.default_rng(0).standard_normal((4, 4, 4))])
    with pytest.raises(ValueError):
        bad.check()


def test_mean_is_first_moment_at_unit(m2):
    a = m2.random(4)
    m = deterministic_moments(m2, a, 1)
    assert_close(m.mean(), a, 1e-14)
    assert isinstance(m.moment(1), MultilinearMap)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_r_locality(m2, n):
    m = fock.random_model(m2, 1, "r", 3, 8).moments(4)
    rep = transforms.dependence_check(m, "R", n, seed=n)
    assert rep.perturbed_order == n + 2
    assert rep.passed, rep.per_degree


@pytest.mark.parametrize("n", [0, 1, 2])
def test_s_terms_depend_on_one_moment_more(m2, n):
    m = fock.random_model(m2, 1, "s", 3, 9).moments(4)
    # S_0..S_n are untouched by mu_{n+2} ...
    assert transforms.dependence_check(m, "S", n, seed=n, perturb=n + 2).passed
    # ... but S_n does move with mu_{n+1}
    moved = transforms.dependence_check(m, "S", n, seed=n)
    assert moved.per_degree[n] > 1e-3
    assert max(moved.per_degree[:n], default=0.0) <= 1e-10


def test_dependence_zero_perturbation(m2):
    m = fock.random_model(m2, 1, "s", 2, 1).moments(3)
    assert transforms.dependence_check(m, "S", 1, magnitude=0).deviation == 0.0


def test_perturbation_keeps_bimodularity(m2):
    t = transforms.random_bimodule_tensor(m2, 3, np.random.default_rng(0))
    assert MomentData(m2, [np.zeros((4, 4)), np.zeros((4,) * 3), t]).bimodule_residual() <= 1e-13


def test_json_round_trips(m2, tmp_path):
    x = fock.random_model(m2, 2, "r", 2, 4)
    m = x.moments(3)
    io.save_moments(m, tmp_path / "m.json")
    m2_ = io.load_moments(tmp_path / "m.json")
    assert all(np.array_equal(a, b) for a, b in zip(m.mu, m2_.mu))
    res = transforms.s_transform(m)
    io.save_jet(res.jet, tmp_path / "s.json")
    assert series.equal(io.load_jet(tmp_path / "s.json"), res.jet, 0)
    io.save_model(x, tmp_path / "x.json")
    y = io.load_model(tmp_path / "x.json")
    assert (y.index, y.flavor, y.N) == (2, "r", 2)
    d = io.transform_result_to_dict(res)
    assert set(d["diagnostics"]) == {"inversion", "strip", "residual"}
    with pytest.raises(ValueError):
        io.decode_tensor(d["terms"][1], 4, 2)
