"""
Coupled-channel basis and coupling matrix in the total-J representation.

A channel is a rotor level (j, tau) coupled with orbital angular momentum l
to total J. For a potential F(n) = sum_{lambda mu} v_{lambda mu} C_{lambda mu}(n)
in the body frame,

    <(j l) J | F | (j' l') J> = sum v (-1)^(J+lambda) [(2j+1)(2j'+1)(2l+1)(2l'+1)]^(1/2)
                                (l lambda l'; 0 0 0) {j l J; l' j' lambda}
                                sum_{k k'} c_k c'_k' (-1)^k' (j lambda j'; k mu -k')

Channels with p (-1)^l = -1 (p the rotor C2 character) are multiplied by i,
which makes the matrix real symmetric.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from angular import wigner3j, wigner6j
from dispersion import PotentialSurface, angular_expansion
from errors import DomainError, NumericalError
from rotor import RotorState
from units import AMU_ME, KELVIN_HARTREE

IMAGINARY_TOLERANCE = 1e-10


def reduced_mass(mass_a: float, mass_b: float) -> float:
    """Reduced mass in electron masses from two masses in amu."""
    return AMU_ME * mass_a * mass_b / (mass_a + mass_b)


@dataclass(frozen=True)
class Channel:
    rotor: int
    j: int
    tau: int
    l: int
    threshold: float
    parity: int

    def open_at(self, energy: float) -> bool:
        return self.threshold <= energy

    @property
    def label(self) -> str:
        return f"j={self.j} tau={self.tau:+d} l={self.l}"


@dataclass(frozen=True)
class Truncation:
    """Closed channels are kept up to E + e_closed_max with j <= j_max."""
    e_closed_max: float
    j_max: int

    @classmethod
    def default(cls, energy: float, levels: list[RotorState], closed_window: float = 2.0,
                closed_floor_kelvin: float = 25.0, j_extra: int = 2, j_min: int = 3) -> "Truncation":
        open_j = [lv.j for lv in levels if lv.energy <= energy]
        j_open_max = max(open_j) if open_j else 0
        return cls(
            e_closed_max=max(closed_window * energy, closed_floor_kelvin * KELVIN_HARTREE),
            j_max=max(j_open_max + j_extra, j_min),
        )


@dataclass(frozen=True)
class ChannelBasis:
    """
    Ordered channels of one (J, rotor parity) block, open channels first.

    `parity` is None when both rotor parities are kept.
    """
    J: int
    parity: int | None
    energy: float
    channels: tuple[Channel, ...]
    states: tuple[RotorState, ...] = field(repr=False)
    truncation: Truncation

    def __len__(self) -> int:
        return len(self.channels)

    @cached_property
    def n_open(self) -> int:
        return sum(1 for ch in self.channels if ch.open_at(self.energy))

    @property
    def open_channels(self) -> tuple[Channel, ...]:
        return self.channels[: self.n_open]

    def index(self, j: int, tau: int, l: int) -> int:
        for i, ch in enumerate(self.channels):
            if (ch.j, ch.tau, ch.l) == (j, tau, l):
                return i
        raise KeyError((j, tau, l))

    def same_layout(self, other: "ChannelBasis") -> bool:
        return [(c.j, c.tau, c.l) for c in self.channels] == [(c.j, c.tau, c.l) for c in other.channels]


def build_channel_basis(J: int, parity: int | None, energy: float, truncation: Truncation,
                        levels: list[RotorState]) -> ChannelBasis:
    """
    All channels of total J (and rotor parity, if given) that are open at
    `energy` or closed within the truncation window.

    Raises:
        DomainError: Non-positive energy or no open channel
    """
    if energy <= 0:
        raise DomainError("collision energy must be positive")

    kept = [lv for lv in levels
            if lv.j <= truncation.j_max
            and lv.energy <= energy + truncation.e_closed_max
            and (parity is None or lv.parity == parity)]
    states = tuple(kept)

    channels = []
    for index, lv in enumerate(states):
        for l in range(abs(J - lv.j), J + lv.j + 1):
            channels.append(Channel(index, lv.j, lv.tau, l, lv.energy, lv.parity))
    channels.sort(key=lambda ch: (not ch.open_at(energy), ch.threshold, ch.j, ch.tau, ch.l))

    basis = ChannelBasis(J, parity, energy, tuple(channels), states, truncation)
    if basis.n_open == 0:
        raise DomainError(f"no open channel for J={J}, parity={parity} at E={energy:.3e}")
    return basis


def count_open_channels(energy: float, levels: list[RotorState]) -> int:
    """Open channels of a large-J block: sum of 2j+1 over open levels."""
    return sum(2 * lv.j + 1 for lv in levels if lv.energy <= energy)


def asymptotic_wavenumbers(basis: ChannelBasis, energy: float, mass: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-channel k (open) or decay constant kappa (closed), both >= 0, and the
    boolean open mask.
    """
    thresholds = np.array([ch.threshold for ch in basis.channels])
    open_mask = thresholds <= energy
    values = np.sqrt(2.0 * mass * np.abs(energy - thresholds))
    return values, open_mask


def rotor_factor(bra: RotorState, ket: RotorState, lam: int, mu: int) -> float:
    """[(2j+1)(2j'+1)]^(1/2) sum_{k k'} c_k c'_k' (-1)^k' (j lambda j'; k mu -k')."""
    j, jp = bra.j, ket.j
    if not abs(j - jp) <= lam <= j + jp:
        return 0.0
    total = 0.0
    for k, ck in zip(range(-j, j + 1), bra.coefficients):
        if ck == 0.0:
            continue
        kp = k + mu
        if abs(kp) > jp:
            continue
        ckp = ket.coefficients[kp + jp]
        if ckp == 0.0:
            continue
        total += ck * ckp * (-1) ** kp * wigner3j(j, lam, jp, k, mu, -kp)
    return math.sqrt((2 * j + 1) * (2 * jp + 1)) * total


def c2_symmetric(coefficients: dict[tuple[int, int], complex], tolerance: float = 1e-10) -> bool:
    """Whether F(n) is invariant under the body C2(y) rotation."""
    scale = max((abs(v) for v in coefficients.values()), default=0.0)
    return all(abs((-1) ** lam * v - np.conj(v)) <= tolerance * max(scale, 1e-300)
               for (lam, _), v in coefficients.items())


def channel_phases(basis: ChannelBasis) -> np.ndarray:
    return np.array([1.0 if ch.parity * (-1) ** ch.l == 1 else 1j for ch in basis.channels])


def multipole_matrix(basis: ChannelBasis, coefficients: dict[tuple[int, int], complex]) -> np.ndarray:
    """
    Real symmetric matrix of F over the basis, in the phase-adjusted channels.

    Raises:
        NumericalError: The matrix is not real after the phase change, or a
            parity-restricted basis is used with a potential that mixes rotor
            parities
    """
    if basis.parity is not None and not c2_symmetric(coefficients):
        raise NumericalError("potential mixes rotor parity blocks; build the basis with parity=None")

    n = len(basis)
    J = basis.J
    rotor_cache: dict[tuple[int, int, int, int], float] = {}
    out = np.zeros((n, n), dtype=complex)
    for a, ca in enumerate(basis.channels):
        for b in range(a, n):
            cb = basis.channels[b]
            value = 0.0
            for (lam, mu), v in coefficients.items():
                if (ca.l + lam + cb.l) % 2:
                    continue
                orbital = wigner3j(ca.l, lam, cb.l, 0, 0, 0)
                if orbital == 0.0:
                    continue
                recoupling = wigner6j(ca.j, ca.l, J, cb.l, cb.j, lam)
                if recoupling == 0.0:
                    continue
                key = (ca.rotor, cb.rotor, lam, mu)
                if key not in rotor_cache:
                    rotor_cache[key] = rotor_factor(basis.states[ca.rotor], basis.states[cb.rotor], lam, mu)
                rot = rotor_cache[key]
                if rot == 0.0:
                    continue
                value += (v * (-1) ** (J + lam) * math.sqrt((2 * ca.l + 1) * (2 * cb.l + 1))
                          * orbital * recoupling * rot)
            out[a, b] = value
            out[b, a] = np.conj(value)

    phases = channel_phases(basis)
    out = np.conj(phases)[:, None] * out * phases[None, :]
    scale = max(float(np.max(np.abs(out))), 1e-300)
    if np.max(np.abs(out.imag)) > IMAGINARY_TOLERANCE * scale:
        raise NumericalError("coupling matrix is not real in the phase-adjusted basis",
                             value=float(np.max(np.abs(out.imag)) / scale))
    real = out.real
    return 0.5 * (real + real.T)


@dataclass(frozen=True)
class CouplingMatrix:
    """
    W(r) = 2m (M6 / r^6 + M7 / r^7) + diag(2m E_a + l(l+1) / r^2).
    """
    m6: np.ndarray
    m7: np.ndarray
    thresholds: np.ndarray
    l_values: np.ndarray
    mass: float

    def __len__(self) -> int:
        return len(self.thresholds)

    def potential(self, r: float) -> np.ndarray:
        """The interaction matrix in hartree."""
        return self.m6 / r**6 + self.m7 / r**7

    def __call__(self, r: float) -> np.ndarray:
        centrifugal = self.l_values * (self.l_values + 1) / r**2
        return 2.0 * self.mass * self.potential(r) + np.diag(2.0 * self.mass * self.thresholds + centrifugal)


def coupling_matrix(basis: ChannelBasis, surface: PotentialSurface, mass: float,
                    expansion: dict | None = None) -> CouplingMatrix:
    """W(r) for one surface; `expansion` may pass precomputed multipoles."""
    expansion = expansion or angular_expansion(surface)
    return CouplingMatrix(
        m6=multipole_matrix(basis, expansion[6]),
        m7=multipole_matrix(basis, expansion[7]),
        thresholds=np.array([ch.threshold for ch in basis.channels]),
        l_values=np.array([ch.l for ch in basis.channels], dtype=float),
        mass=mass,
    )


def coupling_table(coupling: CouplingMatrix, basis: ChannelBasis, radii) -> list[dict[str, float]]:
    """Rows r, a, b, W_ab for the upper triangle, for CSV dumps."""
    rows = []
    for r in radii:
        w = coupling(r)
        for a in range(len(basis)):
            for b in range(a, len(basis)):
                rows.append({"r": float(r), "row": basis.channels[a].label,
                             "column": basis.channels[b].label, "W": float(w[a, b])})
    return rows
