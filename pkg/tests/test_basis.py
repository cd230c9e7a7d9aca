import math

import numpy as np
import pytest

from zngauge.basis import (
    ChainGeometry,
    GaugeState,
    apply_cp,
    build_basis,
    candidate_sectors,
    default_sector,
    dirac_sea_pattern,
    dump_basis,
    gauss_residuals,
    meson_pattern,
    pair_cell_basis,
    reconstruct_fields,
)


# -- counting ---------------------------------------------------------------

@pytest.mark.parametrize("N,n", [(4, 2), (4, 3), (4, 5), (6, 3)])
def test_dimension_all_fillings_is_2N_times_n(N, n):
    geo = ChainGeometry(N // 2)
    per_sector = [len(build_basis(geo, n, k0, fixed_filling=False)) for k0 in range(n)]
    assert all(d == 2**N for d in per_sector)
    assert sum(per_sector) == 2**N * n


def test_half_filling_count_is_binomial():
    geo = ChainGeometry(2)
    assert len(build_basis(geo, 3, 1)) == math.comb(4, 2) == 6


def test_rejects_out_of_range_sector():
    with pytest.raises(ValueError):
        build_basis(ChainGeometry(2), 3, 3)


def test_ordering_is_lexicographic_and_deterministic():
    basis = build_basis(ChainGeometry(2), 3, 1)
    pats = [s.occupation for s in basis]
    assert pats == sorted(pats)


# -- field reconstruction ---------------------------------------------------

def test_dirac_sea_has_zero_fields_in_zero_sector():
    state = GaugeState(dirac_sea_pattern(8), 1, 3)
    np.testing.assert_array_equal(state.tilde_fields(), np.zeros(7))


def test_meson_fields_alternate_one_zero():
    state = GaugeState(meson_pattern(8), 1, 3)
    np.testing.assert_array_equal(state.tilde_fields(), [1, 0, 1, 0, 1, 0, 1])


def test_z2_fields_always_half_integer():
    geo = ChainGeometry(3)
    for k0 in (0, 1):
        for state in build_basis(geo, 2, k0):
            np.testing.assert_allclose(state.tilde_fields() ** 2, 0.25)


def test_every_generated_state_satisfies_gauss_law():
    for n in (2, 3, 5):
        for k0 in range(n):
            basis = build_basis(ChainGeometry(3), n, k0)
            for state in basis:
                res = gauss_residuals(state.occupation, state.link_labels, k0, n)
                assert np.all(res == 0)


def test_half_filling_outgoing_label_returns_to_k0():
    for state in build_basis(ChainGeometry(3), 5, 2):
        labels = state.link_labels
        out = (labels[-1] + state.occupation[-1] - 1) % 5
        assert out == 2


def test_reconstruct_fields_rejects_short_patterns():
    with pytest.raises(ValueError):
        reconstruct_fields([1], 0, 3)


# -- pair cells --------------------------------------------------------------

@pytest.mark.parametrize("n,count", [(2, 8), (3, 12), (5, 20)])
def test_pair_cell_count_is_4n(n, count):
    cells = pair_cell_basis(n)
    assert len(cells) == count
    # brute-force oracle: all (k, e, o) triples
    assert set(cells.states) == {(k, e, o) for k in range(n) for e in (0, 1) for o in (0, 1)}


def test_pair_cell_label_rules():
    cells = pair_cell_basis(3)
    for (k, e, o) in cells.states:
        assert cells.k_mid((k, e, o)) == (k + e) % 3
        assert cells.k_right((k, e, o)) == ((k + e) - (1 - o)) % 3


def test_pair_cell_rejects_bad_order():
    with pytest.raises(ValueError):
        pair_cell_basis(1)


@pytest.mark.parametrize("n", [2, 3])
def test_chained_cells_bijective_with_chain_basis_N4(n):
    cells = pair_cell_basis(n)
    chained = set()
    for s1 in cells.states:
        for s2 in cells.states:
            if cells.k_right(s1) == s2[0]:
                occ = (s1[1], s1[2], s2[1], s2[2])
                chained.add((s1[0], occ))
    geo = ChainGeometry(2)
    direct = set()
    for k0 in range(n):
        for state in build_basis(geo, n, k0, fixed_filling=False):
            direct.add((k0, state.occupation))
    assert chained == direct
    assert len(chained) == 2**4 * n


def test_two_state_half_filled_cell_for_z2():
    basis = build_basis(ChainGeometry(1), 2, 0)
    states = [(s.occupation, s.link_labels) for s in basis]
    assert states == [((0, 1), (0,)), ((1, 0), (1,))]


# -- charge conjugation x parity ---------------------------------------------

def test_cp_fixes_dirac_sea():
    state = GaugeState(dirac_sea_pattern(8), 1, 3)
    image, sign = apply_cp(state)
    assert image == state
    assert sign in (-1, 1)


def test_cp_is_an_involution_with_unit_sign_product():
    for state in build_basis(ChainGeometry(3), 3, 1):
        image, s1 = apply_cp(state)
        back, s2 = apply_cp(image)
        assert back == state
        assert (s1 * s2) in (-1, 1)
        assert back.k0 == state.k0


def test_cp_negates_boundary_label_between_even_sectors():
    # the two Etilde = -1/2, +1/2 polarized vacua are mapped into each other
    for n in (2, 4):
        sea = GaugeState(dirac_sea_pattern(6), n // 2 - 1, n)
        image, _ = apply_cp(sea)
        assert image.k0 == n // 2
        assert image.occupation == sea.occupation
        np.testing.assert_array_equal(image.tilde_fields(), -sea.tilde_fields())


def test_cp_field_equivariance():
    # image fields are the reversed original shifted by (n-1) - 2*k0 mod n;
    # in the zero-field sector of odd n the shift vanishes
    n, k0 = 5, 1
    rng = np.random.default_rng(11)
    for _ in range(20):
        occ = rng.permutation([1] * 4 + [0] * 4)
        state = GaugeState(tuple(int(b) for b in occ), k0, n)
        image, _ = apply_cp(state)
        shift = (n - 1 - 2 * k0) % n
        expect = (np.array(state.link_labels)[::-1] + shift) % n
        np.testing.assert_array_equal(image.link_labels, expect)


def test_cp_rejects_background_field():
    state = GaugeState(dirac_sea_pattern(4), 1, 3)
    with pytest.raises(ValueError):
        apply_cp(state, phi=0.5)


def test_cp_reordering_sign_is_consistent_under_double_application():
    rng = np.random.default_rng(5)
    for _ in range(10):
        occ = tuple(int(b) for b in rng.permutation([1] * 3 + [0] * 3))
        state = GaugeState(occ, 2, 5)
        image, s1 = apply_cp(state)
        back, s2 = apply_cp(image)
        assert back == state and s1 * s2 == 1  # order-2 up to a global sign


# -- sector policy and dump ---------------------------------------------------

def test_default_sector_policy():
    assert default_sector(3) == 1
    assert default_sector(5) == 2
    assert candidate_sectors(4)[:2] == [1, 2]  # Etilde = -1/2 then +1/2
    assert default_sector(3, phi=1.0 / 3.0) == 1  # Etilde = +1/3 is the smallest


def test_dump_format():
    basis = build_basis(ChainGeometry(1), 3, 1)
    text = dump_basis(basis)
    lines = text.strip().splitlines()
    assert lines == ["01 1 1", "10 1 2"]
