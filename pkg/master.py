"""
Two-level configuration dynamics of a tunneling chiral molecule.

    d rho / dt = (1/2i) [w_z s_z + w_x s_x, rho] + (gamma/2) (s_x rho s_x - rho)

|L> and |R> are the s_x eigenstates (x = +1 and x = -1), the tunneling
doublet |psi_0>, |psi_1> the s_z eigenstates (z = +1 and z = -1). With
rho = (1 + x s_x + y s_y + z s_z)/2 the Bloch vector obeys dr/dt = G r.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from errors import DomainError

NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TwoLevelParams:
    """Frequencies in s^-1."""
    omega_z: float
    omega_x: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise DomainError("decoherence rate must be non-negative")


@dataclass(frozen=True)
class ConfigState:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm > 1.0 + NORM_TOLERANCE:
            raise DomainError(f"Bloch vector length {self.norm:.6f} exceeds 1")

    @classmethod
    def left(cls) -> "ConfigState":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def right(cls) -> "ConfigState":
        return cls(-1.0, 0.0, 0.0)

    @classmethod
    def symmetric(cls) -> "ConfigState":
        """|psi_0> = (|L> + |R>)/sqrt(2)."""
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def from_vector(cls, v) -> "ConfigState":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def left_population(self) -> float:
        return 0.5 * (1.0 + self.x)

    def density_matrix(self) -> np.ndarray:
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
        return 0.5 * (np.eye(2) + self.x * sx + self.y * sy + self.z * sz)


def bloch_generator(p: TwoLevelParams) -> np.ndarray:
    return np.array([
        [0.0, -p.omega_z, 0.0],
        [p.omega_z, -p.gamma, -p.omega_x],
        [0.0, p.omega_x, -p.gamma],
    ])


def evolve_state(s0: ConfigState, p: TwoLevelParams, t: float) -> ConfigState:
    """Exact propagation by the matrix exponential."""
    return ConfigState.from_vector(expm(bloch_generator(p) * t) @ s0.vector)


def trajectory(s0: ConfigState, p: TwoLevelParams, times) -> np.ndarray:
    """Rows (t, x, y, z)."""
    g = bloch_generator(p)
    rows = [np.concatenate([[t], expm(g * t) @ s0.vector]) for t in times]
    return np.array(rows)


@dataclass(frozen=True)
class DecayRates:
    """
    Relaxation rates (s^-1): `slow` is the mode dominated by the chiral
    coordinate x, `fast` the other two.
    """
    slow: float
    fast: tuple[float, float]
    frequencies: tuple[float, float, float]


def decay_rates(p: TwoLevelParams) -> DecayRates:
    values, vectors = np.linalg.eig(bloch_generator(p))
    weight_x = np.abs(vectors[0, :]) / np.linalg.norm(vectors, axis=0)
    slow_index = int(np.argmax(weight_x))
    # Without decoherence the precession pair has equal x weight; take the zero mode.
    if p.gamma == 0:
        slow_index = int(np.argmin(np.abs(values)))
    rates = -values.real
    fast = tuple(sorted(float(rates[i]) for i in range(3) if i != slow_index))
    return DecayRates(
        slow=float(rates[slow_index]),
        fast=fast,
        frequencies=tuple(float(v) for v in values.imag),
    )


def zeno_scan(omega_z: float, gammas, omega_x: float = 0.0) -> list[tuple[float, float]]:
    """(gamma, slow rate) pairs."""
    return [(float(g), decay_rates(TwoLevelParams(omega_z, omega_x, g)).slow) for g in gammas]


def stabilized_axis(p: TwoLevelParams) -> np.ndarray:
    """Unit eigenvector of the mode with the smallest decay rate, x >= 0."""
    values, vectors = np.linalg.eig(bloch_generator(p))
    index = int(np.argmin(np.abs(values.real) + np.abs(values.imag)))
    axis = np.real_if_close(vectors[:, index]).real
    axis = axis / np.linalg.norm(axis)
    return axis if axis[0] >= 0 else -axis
