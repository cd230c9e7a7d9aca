import numpy as np
import pytest
from hypothesis import given, strategies as st

from zngauge.link_algebra import LinkAlgebra, electric_eigenvalues, tilde_eigenvalues, weyl_pair


def test_z3_eigenvalues_match_reference():
    np.testing.assert_allclose(electric_eigenvalues(3, 0.0),
                               [-1.4472, 0.0, 1.4472], atol=1e-4)


def test_z2_eigenvalues_are_half_sqrt_pi():
    np.testing.assert_allclose(electric_eigenvalues(2, 0.0),
                               [-np.sqrt(np.pi) / 2, np.sqrt(np.pi) / 2], atol=1e-12)
    np.testing.assert_allclose(electric_eigenvalues(2, 0.0), [-0.8862, 0.8862], atol=1e-4)


def test_background_offset_shifts_spectrum():
    # frozen from direct evaluation of sqrt(2*pi/3) * (k - 1 + 1/3)
    np.testing.assert_allclose(electric_eigenvalues(3, 1.0 / 3.0),
                               [-0.9648, 0.4824, 1.9297], atol=1e-4)


@pytest.mark.parametrize("n", range(2, 17))
def test_spacing_is_the_electric_quantum(n):
    e = electric_eigenvalues(n)
    np.testing.assert_allclose(np.diff(e), np.sqrt(2 * np.pi / n), atol=1e-12)
    assert np.all(np.diff(e) > 0)


@pytest.mark.parametrize("n", range(3, 17, 2))
def test_odd_n_contains_zero_even_n_does_not(n):
    assert 0.0 in tilde_eigenvalues(n)
    assert min(abs(tilde_eigenvalues(n + 1))) == pytest.approx(0.5)


def test_tilde_symmetric_under_sign_flip_at_phi_zero():
    for n in range(2, 10):
        tilde = tilde_eigenvalues(n)
        np.testing.assert_allclose(tilde, -tilde[::-1], atol=1e-15)


def test_weyl_pair_z2_matrices():
    U, V = weyl_pair(2)
    np.testing.assert_array_equal(U.real, [[0, 1], [1, 0]])
    np.testing.assert_allclose(V, np.diag([1, -1]), atol=1e-15)


@pytest.mark.parametrize("n", range(2, 17))
def test_unitarity_and_order(n):
    U, V = weyl_pair(n)
    eye = np.eye(n)
    np.testing.assert_allclose(U.conj().T @ U, eye, atol=1e-12)
    np.testing.assert_allclose(V.conj().T @ V, eye, atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(U, n), eye, atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(V, n), eye, atol=1e-12)


def test_z3_group_commutator_single_step():
    U, V = weyl_pair(3)
    np.testing.assert_allclose(U @ V, np.exp(2j * np.pi / 3) * V @ U, atol=1e-12)


@given(st.integers(2, 16), st.data())
def test_group_commutator_all_powers(n, data):
    k = data.draw(st.integers(0, n - 1))
    ell = data.draw(st.integers(0, n - 1))
    U, V = weyl_pair(n)
    Ul = np.linalg.matrix_power(U, ell)
    Vk = np.linalg.matrix_power(V, k)
    phase = np.exp(2j * np.pi * k * ell / n)
    assert np.abs(Ul @ Vk - phase * Vk @ Ul).max() < 1e-12


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_rejects_bad_order(bad):
    with pytest.raises(ValueError):
        electric_eigenvalues(bad)
    with pytest.raises(ValueError):
        weyl_pair(bad)


def test_link_algebra_dataclass():
    link = LinkAlgebra(5, phi=0.25)
    np.testing.assert_allclose(link.eigenvalues, link.spacing * link.tilde_eigenvalues)
    assert link.tilde(7) == link.tilde(2)  # labels reduce mod n
