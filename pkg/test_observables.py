"""
Tests for the partial-wave cross sections, thermal averages and the
critical-pressure estimate.
"""

import math
from pathlib import Path

import numpy as np
import pytest
from scipy import constants
from scipy.integrate import quad
from scipy.special import eval_legendre

from angular import clebsch_gordan, spherical_harmonic
from channels import Truncation, build_channel_basis, reduced_mass
from datasets import load_gas, load_increments, load_molecule
from dispersion import dispersion_coefficients, molecule_tensors
from errors import ConvergenceError, DomainError
from highenergy import beta_parameter
from models import ChiralityMode, CriticalTerms, OnsetRate
from observables import (
    critical_pressure,
    decoherence_report,
    epsilon_shift,
    eta_decoherence,
    maxwell_density,
    maxwell_moment,
    number_density,
    pressure_constant,
    sigma_state_resolved,
    sigma_total,
    tail_fraction,
    temperature_exponent,
    thermal_average,
    thermal_average_rates,
)
from propagator import RadialGrid, SMatrixBlock, solve_block
from rotor import RotorSpec, boltzmann_weights, rotor_levels
from units import kelvin_to_hartree

AMU = constants.atomic_mass
K0 = 0.8
LEFT_PHASES = [0.9, 0.6, 0.35, 0.15, 0.05, 0.01]
RIGHT_PHASES = [0.85, 0.62, 0.33, 0.16, 0.04, 0.012]
DATA = Path(__file__).parent / "data"


def elastic_blocks(phases, hand: str) -> list[SMatrixBlock]:
    """j = 0 target: one channel per J with l = J."""
    return [
        SMatrixBlock(energy=K0**2 / 2.0, J=J, parity=1, handedness=hand, channels=[(0, 0, J)],
                     wavenumbers=np.array([K0]), s=np.array([[np.exp(2j * delta)]]))
        for J, delta in enumerate(phases)
    ]


def amplitude(phases, cos_theta):
    s = np.exp(2j * np.array(phases))
    return sum((2 * l + 1) * (s[l] - 1.0) * eval_legendre(l, cos_theta) for l in range(len(phases))) / (2j * K0)


def sphere_integral(values, weights):
    return 2.0 * math.pi * np.sum(weights * values)


def random_unitary_block(J: int, seed: int, hand: str) -> SMatrixBlock:
    channels = [(0, 0, J), (1, 0, J - 1), (1, 0, J + 1)]
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(3, 3))
    k = 0.5 * (k + k.T)
    eye = np.eye(3)
    s = (eye + 1j * k) @ np.linalg.inv(eye - 1j * k)
    return SMatrixBlock(energy=1.0, J=J, parity=1, handedness=hand, channels=channels,
                        wavenumbers=np.array([K0, 0.5, 0.5]), s=s)


def test_sigma_total_matches_optical_theorem():
    blocks = elastic_blocks(LEFT_PHASES, "L")
    forward = amplitude(LEFT_PHASES, 1.0)
    assert sigma_total(blocks) == pytest.approx(4.0 * math.pi / K0 * forward.imag, rel=1e-12)
    expected = 4.0 * math.pi / K0**2 * sum((2 * J + 1) * math.sin(d) ** 2 for J, d in enumerate(LEFT_PHASES))
    assert sigma_total(blocks) == pytest.approx(expected, rel=1e-12)


def test_eta_and_eps_match_angular_integrals():
    x, w = np.polynomial.legendre.leggauss(40)
    f_left = amplitude(LEFT_PHASES, x)
    f_right = amplitude(RIGHT_PHASES, x)
    left = elastic_blocks(LEFT_PHASES, "L")
    right = elastic_blocks(RIGHT_PHASES, "R")

    eta, channels = eta_decoherence(left, right)
    assert eta == pytest.approx(0.5 * sphere_integral(np.abs(f_left - f_right) ** 2, w), rel=1e-10)
    assert channels[(0, 0)] == pytest.approx(eta)

    eps = epsilon_shift(left, right)
    assert eps == pytest.approx(sphere_integral(f_left * np.conj(f_right), w).imag, rel=1e-10)


def dataset_rotor_blocks(j_total_max: int = 4, energy_kelvin: float = 1.0):
    """Coupled L and R blocks for the dataset molecule in a j <= 1 rotor basis, full chirality."""
    molecule = load_molecule(DATA / "d2s2.toml")
    gas = load_gas(DATA / "helium.toml")
    spec = RotorSpec.from_dataset(molecule)
    s = molecule_tensors(load_increments(DATA / "increments.toml"), spec).with_gas(gas)
    left, right = dispersion_coefficients(s, chirality=ChiralityMode.FULL)
    levels = rotor_levels(spec, 1)
    mass = reduced_mass(spec.total_mass, gas.mass)
    energy = kelvin_to_hartree(energy_kelvin)
    truncation = Truncation(e_closed_max=kelvin_to_hartree(25.0), j_max=1)
    grid = RadialGrid(4.0, 40.0, 0.02)
    blocks = {"L": [], "R": []}
    for J in range(j_total_max + 1):
        basis = build_channel_basis(J, None, energy, truncation, levels)
        for surface in (left, right):
            block = solve_block(basis, surface, mass, grid)
            blocks[block.handedness].append(block)
    return blocks["L"], blocks["R"]


def ground_state_amplitudes(blocks, theta, phi) -> dict[tuple[int, int, int], np.ndarray]:
    """
    Space-fixed amplitudes g_{j tau m}(theta, phi) for incidence along z from
    j = 0, normalized so that sigma = sum over (j, tau, m) of the sphere
    integral of |g|^2.
    """
    out: dict[tuple[int, int, int], np.ndarray] = {}
    for block in blocks:
        J = block.J
        column = block.channels.index((0, 0, J))
        k0 = block.wavenumbers[column]
        t = np.eye(block.n_open) - block.s
        for row, (j, tau, l) in enumerate(block.channels):
            for m in range(-min(j, l), min(j, l) + 1):
                cg = clebsch_gordan(j, m, l, -m, J, 0)
                if cg == 0.0:
                    continue
                term = (2.0 * math.pi / (1j * k0) * 1j ** (J - l) * math.sqrt((2 * J + 1) / (4.0 * math.pi))
                        * cg * spherical_harmonic(l, -m, theta, phi) * t[row, column])
                out[(j, tau, m)] = out.get((j, tau, m), 0.0) + term
    return out


def test_coupled_rotor_cross_sections_match_angular_integrals():
    left, right = dataset_rotor_blocks()
    assert any(j == 1 for block in left for j, _, _ in block.channels)

    x, wx = np.polynomial.legendre.leggauss(16)
    phi = 2.0 * math.pi * np.arange(24) / 24
    theta, phi = np.meshgrid(np.arccos(x), phi, indexing="ij")
    weights = np.outer(wx, np.full(24, 2.0 * math.pi / 24))
    g_left = ground_state_amplitudes(left, theta, phi)
    g_right = ground_state_amplitudes(right, theta, phi)

    sigma = sum(float(np.sum(weights * np.abs(g) ** 2)) for g in g_left.values())
    eta_sphere = 0.5 * sum(float(np.sum(weights * np.abs(g_left[key] - g_right[key]) ** 2)) for key in g_left)
    eps_sphere = sum(float(np.sum(weights * np.imag(g_left[key] * np.conj(g_right[key])))) for key in g_left)

    eta, channels = eta_decoherence(left, right)
    assert eta > 0.0
    assert eta == pytest.approx(eta_sphere, rel=1e-10)
    assert epsilon_shift(left, right) == pytest.approx(eps_sphere, rel=1e-8, abs=1e-10 * sigma)
    assert sum(sigma_state_resolved(left).values()) == pytest.approx(sigma, rel=1e-10)
    assert sigma_total(left) == pytest.approx(sigma, rel=1e-6)
    assert sigma_total(left) == pytest.approx(sigma_total(right), rel=1e-6)
    assert sum(channels.values()) == pytest.approx(eta)


def test_handedness_exchange():
    left = elastic_blocks(LEFT_PHASES, "L")
    right = elastic_blocks(RIGHT_PHASES, "R")
    assert eta_decoherence(left, right)[0] == pytest.approx(eta_decoherence(right, left)[0])
    assert epsilon_shift(left, right) == pytest.approx(-epsilon_shift(right, left))
    assert eta_decoherence(left, left)[0] == 0.0
    assert epsilon_shift(left, left) == pytest.approx(0.0, abs=1e-15)


def test_state_resolved_sum_equals_total():
    blocks = [random_unitary_block(J, seed=J, hand="L") for J in range(1, 6)]
    resolved = sigma_state_resolved(blocks)
    assert set(resolved) == {(0, 0), (1, 0)}
    assert sum(resolved.values()) == pytest.approx(sigma_total(blocks), rel=1e-10)


def test_mismatched_bases_are_rejected():
    left = elastic_blocks(LEFT_PHASES, "L")
    right = elastic_blocks(RIGHT_PHASES[:-1], "R")
    with pytest.raises(DomainError):
        eta_decoherence(left, right)
    with pytest.raises(DomainError):
        sigma_total(left, initial=(2, 0))


def test_tail_fraction():
    assert tail_fraction([4.0, 3.0, 2.0, 1.0]) == pytest.approx(0.3)
    assert tail_fraction([0.0, 0.0]) == 0.0
    assert tail_fraction([1.0, 1.0, 1.0], window=1) == pytest.approx(1.0 / 3.0)


def test_decoherence_report():
    report = decoherence_report(elastic_blocks(LEFT_PHASES, "L"), elastic_blocks(RIGHT_PHASES, "R"), 1.5)
    row = report.row()
    assert row["E_K"] == 1.5
    assert (row["j0"], row["tau0"]) == (0, 0)
    assert row["J_max"] == len(LEFT_PHASES) - 1
    assert report.sigma_tot == pytest.approx(0.5 * (report.sigma_left + report.sigma_right))
    assert report.tails["sigma"] < 0.02
    assert len(report.channel_rows()) == 1


def test_maxwell_moments():
    mass, temperature = 4.0026 * AMU, 300.0
    norm, _ = quad(lambda v: maxwell_density(v, temperature, mass), 0.0, 2e4)
    assert norm == pytest.approx(1.0, rel=1e-8)
    assert maxwell_moment(0.0, temperature, mass) == pytest.approx(1.0)
    assert maxwell_moment(1.0, temperature, mass) == pytest.approx(
        math.sqrt(8.0 * constants.k * temperature / (math.pi * mass)))
    assert maxwell_moment(2.0, temperature, mass) == pytest.approx(3.0 * constants.k * temperature / mass)
    with pytest.raises(DomainError):
        maxwell_moment(-3.0, temperature, mass)


def test_thermal_average_of_power_law():
    mass, temperature = 4.0026 * AMU, 300.0
    vp = math.sqrt(2.0 * constants.k * temperature / mass)
    v = np.geomspace(0.02 * vp, 6.0 * vp, 60)
    constant = thermal_average(v, np.full(v.size, 2e-18), temperature, mass)
    assert constant == pytest.approx(2e-18 * maxwell_moment(1.0, temperature, mass), rel=1e-3)
    power = thermal_average(v, 1e-18 * v ** (-1.0 / 3.0), temperature, mass)
    assert power == pytest.approx(1e-18 * maxwell_moment(2.0 / 3.0, temperature, mass), rel=1e-3)

    with pytest.raises(ConvergenceError):
        thermal_average(v[:10], np.ones(10), temperature, mass)


def test_thermal_average_rates():
    mass, temperature = 4.0026 * AMU, 300.0
    vp = math.sqrt(2.0 * constants.k * temperature / mass)
    v = np.geomspace(0.02 * vp, 6.0 * vp, 60)
    tables = {(0, 0): (np.full(v.size, 1e-18), np.full(v.size, -2e-19))}
    n_gas = number_density(1e-5, temperature)
    result = thermal_average_rates(v, tables, temperature, n_gas, 2 * math.pi * 176.0, mass)
    mean_v = maxwell_moment(1.0, temperature, mass)
    assert result.gamma == pytest.approx(n_gas * 1e-18 * mean_v, rel=1e-3)
    assert result.omega_x == pytest.approx(-n_gas * 2e-19 * mean_v, rel=1e-3)
    p_c = 2 * math.pi * 176.0 * constants.k * temperature / (1e-18 * mean_v) / 100.0
    assert result.critical_pressure == pytest.approx(p_c, rel=1e-3)


def test_single_velocity_is_a_beam():
    v0, eta0 = 1250.0, 3e-18
    assert thermal_average([v0], [eta0], 300.0, 4.0026 * AMU) == pytest.approx(v0 * eta0)
    tables = {(0, 0): (np.array([eta0]), np.array([1e-19]))}
    result = thermal_average_rates([v0], tables, 300.0, 2e19, 2 * math.pi * 176.0, 4.0026 * AMU)
    assert result.gamma == pytest.approx(2e19 * v0 * eta0)
    assert result.omega_x == pytest.approx(2e19 * v0 * 1e-19)
    with pytest.raises(DomainError):
        thermal_average([v0, 2 * v0], [eta0], 300.0, 4.0026 * AMU)


def test_initial_states_are_boltzmann_weighted():
    mass, temperature = 4.0026 * AMU, 300.0
    vp = math.sqrt(2.0 * constants.k * temperature / mass)
    v = np.geomspace(0.02 * vp, 6.0 * vp, 60)
    levels = rotor_levels(RotorSpec.from_constants(kelvin_to_hartree(3.0), kelvin_to_hartree(0.3),
                                                   kelvin_to_hartree(0.28)), 1)
    ground, excited = levels[0], levels[1]
    tables = {ground.key: (np.full(v.size, 1e-18), np.zeros(v.size)),
              excited.key: (np.full(v.size, 3e-18), np.zeros(v.size))}
    result = thermal_average_rates(v, tables, temperature, 1.0, 1.0, mass, levels=levels)
    weights = boltzmann_weights([ground, excited], temperature)
    assert weights[excited.key] > weights[ground.key]
    expected = (weights[ground.key] * 1e-18 + weights[excited.key] * 3e-18) * maxwell_moment(1.0, temperature, mass)
    assert result.gamma == pytest.approx(expected, rel=1e-3)

    with pytest.raises(DomainError):
        thermal_average_rates(v, tables, temperature, 1.0, 1.0, mass)


def test_number_density():
    assert number_density(1.0, 300.0) == pytest.approx(2.4143e22, rel=1e-4)


def test_dataset_critical_pressure():
    molecule = load_molecule(DATA / "d2s2.toml")
    gas = load_gas(DATA / "helium.toml")
    spec = RotorSpec.from_dataset(molecule)
    left, right = dispersion_coefficients(molecule_tensors(load_increments(DATA / "increments.toml"), spec)
                                          .with_gas(gas))
    mass = reduced_mass(spec.total_mass, gas.mass)
    beta = beta_parameter(left, right, rotor_levels(spec, 6), mass)
    assert beta == pytest.approx(9.28, rel=0.02)

    omega_z = 2.0 * math.pi * 176.0
    reduced_kg, gas_kg = mass * constants.m_e, gas.mass * AMU
    angular = critical_pressure(300.0, omega_z, beta, reduced_kg, gas_kg)
    cyclic = critical_pressure(300.0, omega_z, beta, reduced_kg, gas_kg, onset=OnsetRate.CYCLIC)
    assert angular == pytest.approx(1.40e-4, rel=0.05)
    assert cyclic == pytest.approx(angular / (2.0 * math.pi), rel=1e-12)
    # Published anchors: p_c(300 K) = 1.6e-5 mbar and p_c T^-2/3 = 3.0e-7.
    assert 0.5 < cyclic / 1.6e-5 < 2.0
    assert 0.5 < pressure_constant(cyclic, 300.0) / 3.0e-7 < 2.0

    two_term = critical_pressure(300.0, omega_z, beta, reduced_kg, gas_kg, CriticalTerms.TWO_TERM)
    assert two_term > angular
    with pytest.raises(DomainError):
        critical_pressure(0.0, omega_z, beta, reduced_kg, gas_kg)


def test_critical_pressure_scaling():
    omega_z = 2.0 * math.pi * 176.0
    temperatures = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0]
    pressures = [critical_pressure(t, omega_z, 34.1, 3.78 * AMU, 4.0026 * AMU) for t in temperatures]
    assert temperature_exponent(temperatures, pressures) == pytest.approx(2.0 / 3.0, abs=1e-10)
    constants_ = [pressure_constant(p, t) for p, t in zip(pressures, temperatures)]
    assert np.allclose(constants_, constants_[0])


if __name__ == "__main__":
    test_sigma_total_matches_optical_theorem()
    test_eta_and_eps_match_angular_integrals()
    test_coupled_rotor_cross_sections_match_angular_integrals()
    test_handedness_exchange()
    test_state_resolved_sum_equals_total()
    test_mismatched_bases_are_rejected()
    test_tail_fraction()
    test_decoherence_report()
    test_maxwell_moments()
    test_thermal_average_of_power_law()
    test_thermal_average_rates()
    test_single_velocity_is_a_beam()
    test_initial_states_are_boltzmann_weighted()
    test_number_density()
    test_dataset_critical_pressure()
    test_critical_pressure_scaling()
    print("✓ All observable tests passed")
