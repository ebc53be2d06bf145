import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergman_kit.geometry import (DimensionError, HyperbolicDisc, PolyPoint, beta, euclidean_realization,
                                  mobius, mobius_apply, rho)

from conftest import disc_points, poly_points, random_disc


def test_polypoint_rejects_boundary_and_empty():
    with pytest.raises(ValueError):
        PolyPoint([1.0])
    with pytest.raises(ValueError):
        PolyPoint([0.5, 1 - 1e-15])
    with pytest.raises(ValueError):
        PolyPoint([])
    assert PolyPoint([0.5j]).n == 1


def test_polypoint_json_roundtrip():
    p = PolyPoint([0.1 + 0.2j, -0.3j])
    assert PolyPoint.from_json(p.to_json()) == p


def test_mobius_examples():
    z = PolyPoint([0.3 - 0.2j, 0.6j])
    assert np.allclose(mobius_apply(z, PolyPoint.zero(2)).array, z.array)
    assert np.allclose(mobius_apply(z, z).array, 0)
    val = mobius_apply(PolyPoint([0.5]), PolyPoint([0.5j]))[0]
    assert abs(val - (0.5882352941 - 0.3529411765j)) < 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        mobius_apply(PolyPoint([0.1]), PolyPoint([0.1, 0.2]))
    with pytest.raises(DimensionError):
        rho(PolyPoint([0.1]), PolyPoint([0.1, 0.2]))


def test_rho_and_beta_examples():
    z = PolyPoint([0.5, 0])
    w = PolyPoint([0, 0.3])
    assert rho(z, w) == pytest.approx(0.5, abs=1e-15)
    assert rho(z, z) == 0
    assert rho(z, PolyPoint.zero(2)) == pytest.approx(0.5)
    assert beta(PolyPoint([0.5]), PolyPoint([0.0])) == pytest.approx(0.5493061443, abs=1e-10)
    assert beta(z, z) == 0


@given(poly_points(2), poly_points(2))
def test_involution(z, w):
    assert np.allclose(mobius(z, mobius(z, w)), w, atol=1e-12, rtol=0)


@given(poly_points(2), poly_points(2))
def test_modulus_identity(z, w):
    lhs = 1 - np.abs(mobius(z, w)) ** 2
    rhs = (1 - np.abs(z) ** 2) * (1 - np.abs(w) ** 2) / np.abs(1 - np.conj(z) * w) ** 2
    assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)


@given(poly_points(1), poly_points(1), poly_points(1))
def test_cross_identity(z, w, xi):
    lhs = 1 - np.conj(mobius(z, w)) * mobius(z, xi)
    rhs = (1 - np.abs(z) ** 2) * (1 - np.conj(w) * xi) / ((1 - np.conj(z) * xi) * (1 - np.conj(w) * z))
    assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)


@given(poly_points(2), poly_points(2), poly_points(2))
def test_rho_is_a_metric(x, y, z):
    assert rho(x, y) == pytest.approx(rho(y, x), abs=1e-12)
    assert rho(x, x) < 1e-15
    assert rho(x, z) <= rho(x, y) + rho(y, z) + 1e-12


@given(poly_points(2), poly_points(2))
def test_tanh_beta_is_rho(z, w):
    assert np.tanh(beta(z, w)) == pytest.approx(rho(z, w), abs=1e-12)


@given(poly_points(2, 0.9), poly_points(2, 0.9), poly_points(2, 0.9))
def test_beta_invariant_under_automorphisms(v, z, w):
    assert beta(mobius(v, z), mobius(v, w)) == pytest.approx(beta(z, w), rel=1e-8, abs=1e-10)


def test_rho_batches(rng):
    z = random_disc(rng, (50, 2))
    w = random_disc(rng, (50, 2))
    assert np.allclose(rho(z, w), [rho(a, b) for a, b in zip(z, w)])


def test_euclidean_realization_examples():
    d = HyperbolicDisc(PolyPoint([0.0]), 0.7)
    c, R = euclidean_realization(d, 0)
    assert c == 0 and R == pytest.approx(np.tanh(0.7))
    c, R = euclidean_realization(HyperbolicDisc(PolyPoint([0.5]), np.arctanh(0.5)), 0)
    # c = (1 - t^2) z / (1 - t^2 |z|^2) = 0.75*0.5/0.9375 = 0.4 and R = 0.5*0.75/0.9375 = 0.4
    assert c == pytest.approx(0.4, abs=1e-12) and R == pytest.approx(0.4, abs=1e-12)
    c, R = euclidean_realization(HyperbolicDisc(PolyPoint([0.3j, 0.2]), 0.0), 0)
    assert c == pytest.approx(0.3j) and R == 0
    with pytest.raises(IndexError):
        euclidean_realization(d, 1)


@given(disc_points(0.9), st.floats(0.05, 2.0))
def test_euclidean_realization_matches_membership(z, r):
    d = HyperbolicDisc(PolyPoint([z]), r)
    c, R = euclidean_realization(d, 0)
    rng = np.random.default_rng(0)
    w = random_disc(rng, 2000, 0.999)
    in_euclid = np.abs(w - c) <= R
    in_hyper = d.contains(w[:, None])
    border = np.abs(np.abs(w - c) - R) < 1e-9
    assert np.array_equal(in_euclid[~border], in_hyper[~border])


def test_hyperbolic_disc_rejects_negative_radius():
    with pytest.raises(ValueError):
        HyperbolicDisc(PolyPoint([0.0]), -1.0)
