"""
Physical constants and unit conversions.

Everything inside the package is in atomic units (hartree, bohr, electron
mass, hbar = 1). Conversions happen only at I/O boundaries.
"""

from scipy import constants

HARTREE_J = constants.physical_constants["Hartree energy"][0]
BOHR_M = constants.physical_constants["Bohr radius"][0]
BOHR_ANGSTROM = BOHR_M * 1e10
ATOMIC_TIME_S = constants.hbar / HARTREE_J
AMU_ME = constants.physical_constants["atomic mass constant"][0] / constants.m_e
KELVIN_HARTREE = constants.k / HARTREE_J
WAVENUMBER_HARTREE = constants.h * constants.c * 100.0 / HARTREE_J
MBAR_PA = 100.0


def kelvin_to_hartree(t: float) -> float:
    return t * KELVIN_HARTREE


def hartree_to_kelvin(e: float) -> float:
    return e / KELVIN_HARTREE


def hartree_to_wavenumber(e: float) -> float:
    return e / WAVENUMBER_HARTREE


def angstrom_to_bohr(x):
    return x / BOHR_ANGSTROM


def bohr2_to_m2(area: float) -> float:
    return area * BOHR_M**2


def amu_to_me(m: float) -> float:
    return m * AMU_ME


def atomic_velocity_to_si(v: float) -> float:
    """Velocity in bohr per atomic time unit to m/s."""
    return v * BOHR_M / ATOMIC_TIME_S


def si_velocity_to_atomic(v: float) -> float:
    return v * ATOMIC_TIME_S / BOHR_M
