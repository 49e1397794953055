"""
Tests for the channel basis, the multipole coupling elements and W(r).
"""

import math
from pathlib import Path

import numpy as np
import pytest

from angular import wigner3j, wigner6j
from channels import (
    Channel,
    ChannelBasis,
    Truncation,
    asymptotic_wavenumbers,
    build_channel_basis,
    c2_symmetric,
    count_open_channels,
    coupling_matrix,
    coupling_table,
    multipole_matrix,
    reduced_mass,
    rotor_factor,
)
from datasets import load_gas, load_increments, load_molecule
from dispersion import angular_expansion, dispersion_coefficients, molecule_tensors
from errors import DomainError, NumericalError
from rotor import RotorSpec, rotor_levels
from units import AMU_ME, kelvin_to_hartree

DATA = Path(__file__).parent / "data"


def asymmetric_levels(j_max: int = 6):
    spec = RotorSpec.from_constants(kelvin_to_hartree(2.5), kelvin_to_hartree(0.35), kelvin_to_hartree(0.30))
    return rotor_levels(spec, j_max)


def dataset_setup():
    molecule = load_molecule(DATA / "d2s2.toml")
    gas = load_gas(DATA / "helium.toml")
    spec = RotorSpec.from_dataset(molecule)
    s = molecule_tensors(load_increments(DATA / "increments.toml"), spec).with_gas(gas)
    left, right = dispersion_coefficients(s)
    return rotor_levels(spec, 8), left, right, reduced_mass(spec.total_mass, gas.mass)


def test_reduced_mass():
    mass = reduced_mass(2 * 31.972071 + 2 * 2.014102, 4.002602)
    assert mass / AMU_ME == pytest.approx(3.78, abs=0.01)


def test_basis_layout():
    levels = asymmetric_levels()
    energy = kelvin_to_hartree(2.0)
    truncation = Truncation(e_closed_max=kelvin_to_hartree(5.0), j_max=4)
    basis = build_channel_basis(5, 1, energy, truncation, levels)

    assert all(ch.parity == 1 for ch in basis.channels)
    assert all(abs(5 - ch.j) <= ch.l <= 5 + ch.j for ch in basis.channels)
    assert all(ch.j <= 4 for ch in basis.channels)
    flags = [ch.open_at(energy) for ch in basis.channels]
    assert flags == sorted(flags, reverse=True)
    assert basis.n_open == sum(flags)
    assert len(basis.open_channels) == basis.n_open
    first = basis.channels[0]
    assert basis.index(first.j, first.tau, first.l) == 0
    with pytest.raises(KeyError):
        basis.index(99, 0, 0)


def test_parity_blocks_partition_the_full_basis():
    levels = asymmetric_levels()
    energy = kelvin_to_hartree(3.0)
    truncation = Truncation.default(energy, levels)
    full = build_channel_basis(4, None, energy, truncation, levels)
    even = build_channel_basis(4, 1, energy, truncation, levels)
    odd = build_channel_basis(4, -1, energy, truncation, levels)
    assert len(full) == len(even) + len(odd)


def test_open_channel_count_at_large_j():
    levels = asymmetric_levels()
    energy = kelvin_to_hartree(3.0)
    truncation = Truncation(e_closed_max=0.0, j_max=6)
    J = 20
    basis = build_channel_basis(J, None, energy, truncation, levels)
    assert basis.n_open == count_open_channels(energy, levels)


def test_basis_errors():
    levels = asymmetric_levels()
    truncation = Truncation(e_closed_max=0.0, j_max=3)
    with pytest.raises(DomainError):
        build_channel_basis(0, 1, 0.0, truncation, levels)
    # No odd-parity level is open just above zero energy.
    with pytest.raises(DomainError):
        build_channel_basis(0, -1, 1e-12, truncation, levels)


def test_truncation_defaults():
    levels = asymmetric_levels()
    low = Truncation.default(kelvin_to_hartree(0.1), levels)
    assert low.e_closed_max == pytest.approx(kelvin_to_hartree(25.0))
    assert low.j_max == 3
    high = Truncation.default(kelvin_to_hartree(30.0), levels, j_extra=2)
    assert high.e_closed_max == pytest.approx(kelvin_to_hartree(60.0))
    assert high.j_max >= 8


def test_asymptotic_wavenumbers():
    levels = asymmetric_levels()
    energy = kelvin_to_hartree(1.0)
    basis = build_channel_basis(2, 1, energy, Truncation.default(energy, levels), levels)
    k, open_mask = asymptotic_wavenumbers(basis, energy, 5000.0)
    assert open_mask.sum() == basis.n_open
    assert k[0] == pytest.approx(math.sqrt(2.0 * 5000.0 * energy))
    assert np.all(k >= 0)


def test_isotropic_term_is_identity():
    levels = asymmetric_levels()
    energy = kelvin_to_hartree(3.0)
    for parity in (1, -1):
        basis = build_channel_basis(3, parity, energy, Truncation.default(energy, levels), levels)
        matrix = multipole_matrix(basis, {(0, 0): 1.7})
        assert np.allclose(matrix, 1.7 * np.eye(len(basis)), atol=1e-12)


def test_linear_rotor_limit():
    # K = 0 states of a prolate top couple like a diatomic:
    # (-1)^(j+j'+J) [(2j+1)(2j'+1)(2l+1)(2l'+1)]^(1/2) (j lam j'; 000)(l lam l'; 000) {j l J; l' j' lam}
    levels = rotor_levels(RotorSpec.from_constants(5.0, 1.0, 1.0), 4)
    k_zero = tuple(lv for lv in levels if abs(lv.coefficients[lv.j]) > 0.999)
    J = 3
    channels = tuple(Channel(i, lv.j, lv.tau, l, lv.energy, lv.parity)
                     for i, lv in enumerate(k_zero) for l in range(abs(J - lv.j), J + lv.j + 1))
    basis = ChannelBasis(J, None, 100.0, channels, k_zero, Truncation(0.0, 4))
    a, b = 0.8, -0.3
    matrix = multipole_matrix(basis, {(0, 0): a, (2, 0): b})

    for x, ca in enumerate(channels):
        for y, cb in enumerate(channels):
            expected = 0.0
            for lam, v in ((0, a), (2, b)):
                expected += (v * (-1) ** (ca.j + cb.j + J)
                             * math.sqrt((2 * ca.j + 1) * (2 * cb.j + 1) * (2 * ca.l + 1) * (2 * cb.l + 1))
                             * wigner3j(ca.j, lam, cb.j, 0, 0, 0) * wigner3j(ca.l, lam, cb.l, 0, 0, 0)
                             * wigner6j(ca.j, ca.l, J, cb.l, cb.j, lam))
            assert matrix[x, y] == pytest.approx(expected, abs=1e-12)


def test_rotor_factor_selection_rules():
    levels = asymmetric_levels()
    ground = levels[0]
    assert rotor_factor(ground, ground, 0, 0) == pytest.approx(1.0)
    j2 = [lv for lv in levels if lv.j == 2]
    assert rotor_factor(ground, j2[0], 1, 0) == 0.0
    assert any(abs(rotor_factor(ground, lv, 2, 0)) > 0 for lv in j2)


def test_c2_symmetry_check():
    assert c2_symmetric({(0, 0): 1.0, (2, 2): 0.3})
    assert c2_symmetric({(3, 2): 0.5j, (3, -2): -0.5j})
    assert not c2_symmetric({(1, 0): 1.0})

    levels = asymmetric_levels()
    energy = kelvin_to_hartree(3.0)
    basis = build_channel_basis(2, 1, energy, Truncation.default(energy, levels), levels)
    with pytest.raises(NumericalError):
        multipole_matrix(basis, {(1, 0): 1.0})


def test_coupling_matrix_for_dataset():
    levels, left, right, mass = dataset_setup()
    energy = kelvin_to_hartree(1.0)
    truncation = Truncation.default(energy, levels)
    basis = build_channel_basis(4, 1, energy, truncation, levels)
    w_left = coupling_matrix(basis, left, mass)
    w_right = coupling_matrix(basis, right, mass)

    for w in (w_left, w_right):
        assert np.allclose(w.m6, w.m6.T)
        assert np.allclose(w.m7, w.m7.T)
    assert np.allclose(w_left.m6, w_right.m6)

    chiral = angular_expansion(left)[7]
    expected = 2.0 * multipole_matrix(basis, chiral)
    assert np.allclose(w_left.m7 - w_right.m7, expected, atol=1e-10 * np.max(np.abs(w_left.m7)))
    assert np.allclose(w_right.m7, -w_left.m7)

    r = 10.0
    w = w_left(r)
    diagonal = 2.0 * mass * np.diag(w_left.potential(r)) + 2.0 * mass * w_left.thresholds
    diagonal += w_left.l_values * (w_left.l_values + 1) / r**2
    assert np.allclose(np.diag(w), diagonal)


def test_coupling_table_rows():
    levels, left, _, mass = dataset_setup()
    energy = kelvin_to_hartree(0.5)
    basis = build_channel_basis(1, 1, energy, Truncation.default(energy, levels), levels)
    rows = coupling_table(coupling_matrix(basis, left, mass), basis, [6.0, 8.0])
    n = len(basis)
    assert len(rows) == 2 * n * (n + 1) // 2
    assert set(rows[0]) == {"r", "row", "column", "W"}


if __name__ == "__main__":
    test_reduced_mass()
    test_basis_layout()
    test_parity_blocks_partition_the_full_basis()
    test_open_channel_count_at_large_j()
    test_basis_errors()
    test_truncation_defaults()
    test_asymptotic_wavenumbers()
    test_isotropic_term_is_identity()
    test_linear_rotor_limit()
    test_rotor_factor_selection_rules()
    test_c2_symmetry_check()
    test_coupling_matrix_for_dataset()
    test_coupling_table_rows()
    print("✓ All channel tests passed")
