import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeprob import series
from freeprob.algebra import Algebra, NotInvertible
from freeprob.harness import diagonal_consistency
from freeprob.series import FactorizationFailed, Jet, MultilinearMap, ResourceLimit

from conftest import assert_close
from oracles import geometric_jet


def test_compositions():
    assert series.compositions(3, 2) == ((1, 2), (2, 1))
    assert len(series.compositions(6, 3)) == 10
    assert series.compositions(2, 3) == ()


def test_multilinear_map_matches_matrix_word(m2):
    a = m2.random(5)
    f = MultilinearMap.from_function(m2, 2, lambda x, y: m2.prod(x, a, y))
    x, y = m2.random(1), m2.random(2)
    assert_close(f(x, y), m2.prod(x, a, y), 1e-12)
    assert f.order == 2
    with pytest.raises(ValueError):
        f(x)


def test_reciprocal_of_geometric_series_is_linear(m2):
    # (sum (ba)^n)^{-1} = 1 - ba, argument by argument
    a = m2.random(3)
    g = geometric_jet(m2, a, 4)
    r = series.reciprocal(g)
    assert_close(r.terms[0], m2.unit, 1e-13)
    assert_close(r.terms[1], g.terms[1] * -1, 1e-13)
    for t in r.terms[2:]:
        assert_close(t, 0, 1e-13)


def test_mul_terms_are_ordered(m2):
    a, c = m2.random(1), m2.random(2)
    f = geometric_jet(m2, a, 2)
    g = geometric_jet(m2, c, 2)
    h = series.mul(f, g)
    x, y = m2.random(3), m2.random(4)
    want = m2.prod(x, a, y, c) + m2.prod(x, a, y, a) + m2.prod(x, c, y, c)
    assert_close(series.evaluate_term(h.terms[2], [x, y]), want, 1e-12)


def test_compose_against_direct_evaluation(m2):
    a, c = m2.random(1, 0.5), m2.random(2, 0.5)
    # f(b) = 1 + b a + b a b a, h(b) = b c + b c b
    f = geometric_jet(m2, a, 2)
    h2 = MultilinearMap.from_function(m2, 2, lambda x, y: m2.prod(x, c, y)).coeffs
    h = Jet(m2, [m2.zero(), m2.right_matrix(c), h2])
    comp = series.compose(f, h)
    b = m2.random(9, 1e-3)
    hb = m2.mul(b, c) + m2.prod(b, c, b)
    exact = m2.unit + m2.mul(hb, a) + m2.prod(hb, a, hb, a)
    # error is O(|b|^3)
    assert_close(comp(b), exact, 1e-7)


def test_compose_rejects_nonzero_inner(m2):
    f = series.random_jet(m2, 2, 0)
    with pytest.raises(ValueError):
        series.compose(f, f)


@pytest.mark.parametrize("seed", range(3))
def test_inverse_identities(alg, seed):
    f = series.random_jet(alg, 4, seed, constant=alg.unit + alg.random(seed, 0.3))
    g = series.random_jet(alg, 4, seed + 10)
    g = Jet(alg, [alg.zero(), np.eye(alg.dim) + 0.1 * g.terms[1]] + list(g.terms[2:]))
    one, ident = Jet.unit(alg, 4), Jet.identity(alg, 4)
    assert series.equal(series.mul(f, series.reciprocal(f)), one, 1e-10)
    assert series.equal(series.mul(series.reciprocal(f), f), one, 1e-10)
    inv = series.comp_inverse(g)
    assert series.equal(series.compose(g, inv), ident, 1e-10)
    assert series.equal(series.compose(inv, g), ident, 1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_diagonal_consistency_property(seed):
    alg = Algebra.matrix(2)
    f = series.random_jet(alg, 4, (seed, 0), constant=alg.unit + alg.random((seed, 1), 0.3))
    g = series.random_jet(alg, 4, (seed, 2))
    h = Jet(alg, [alg.zero(), np.eye(alg.dim) + 0.1 * g.terms[1]] + list(g.terms[2:]))
    assert diagonal_consistency(f, h, seed, points=3) <= 1e-9


def test_reciprocal_needs_invertible_constant(m2):
    f = Jet(m2, [m2.basis(1), np.eye(4)])
    with pytest.raises(NotInvertible):
        series.reciprocal(f)


def test_comp_inverse_needs_invertible_linear_term(m2):
    f = Jet(m2, [m2.zero(), m2.left_matrix(m2.basis(1))])
    with pytest.raises(NotInvertible):
        series.comp_inverse(f)


def test_strip_left_and_right(m2):
    h = series.random_jet(m2, 2, 4)
    ident = Jet.identity(m2, 3)
    pad = Jet(m2, list(h.terms) + [np.zeros((4,) * 4)])
    left = series.mul(ident, pad)
    right = series.mul(pad, ident)
    hl, res = series.strip(left, "left", return_residual=True)
    assert res <= 1e-13
    assert all(np.allclose(a, b) for a, b in zip(hl.terms, h.terms))
    hr = series.strip(right, "right")
    assert all(np.allclose(a, b) for a, b in zip(hr.terms, h.terms))


def test_strip_detects_non_factorable(m2):
    a = m2.random(2)
    # b -> a b has no left factor b
    g = Jet(m2, [m2.zero(), m2.left_matrix(a)])
    with pytest.raises(FactorizationFailed):
        series.strip(g, "left")


def test_equal_ignores_argument_order(m2):
    t = series.random_jet(m2, 3, 1).terms[3]
    f = Jet(m2, [m2.zero(), np.zeros((4, 4)), np.zeros((4,) * 3), t])
    g = Jet(m2, [m2.zero(), np.zeros((4, 4)), np.zeros((4,) * 3), t.transpose(0, 3, 1, 2)])
    assert series.equal(f, g, 1e-13)
    assert not series.equal(f, g + Jet.unit(m2, 3), 1e-3)


def test_equal_rejects_degree_mismatch(m2):
    with pytest.raises(series.ContractError):
        series.equal(Jet.unit(m2, 2), Jet.unit(m2, 3))


def test_jets_over_different_algebras_do_not_mix():
    with pytest.raises(series.ContractError):
        series.mul(Jet.unit(Algebra.matrix(1), 2), Jet.unit(Algebra.diagonal(2), 2))


def test_symmetrize_idempotent_and_capped(m2):
    t = series.random_jet(m2, 3, 0).terms[3]
    s = series.symmetrize_term(t)
    assert_close(series.symmetrize_term(s), s, 1e-14)
    assert_close(s, s.transpose(0, 2, 1, 3), 1e-14)
    big = np.zeros((1,) * 10)
    with pytest.raises(ResourceLimit):
        series.symmetrize_term(big)


def test_scalar_jets_are_power_series():
    f = Jet.from_scalars([1, 2, 3])
    g = Jet.from_scalars([0, 1, 1])
    assert np.allclose(series.mul(f, Jet.from_scalars([1, -1, 0])).scalars(), [1, 1, 1])
    # f(g(z)) = 1 + 2(z + z^2) + 3 z^2 + O(z^3)
    assert np.allclose(series.compose(f, g).scalars(), [1, 2, 5])
    assert np.allclose(series.comp_inverse(g).scalars(), [0, 1, -1])


def test_random_jet_deterministic(m2):
    a, b = series.random_jet(m2, 3, 5), series.random_jet(m2, 3, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.terms, b.terms))
