"""
Log-derivative propagation of the coupled radial equations and extraction of
the S-matrix.

The radial equations are psi'' = W(r) psi - 2 m E psi. Johnson's
log-derivative method carries Y = psi' psi^-1 from a hard wall at r_core
(Y = 1e30) to r_match, where Y is matched to Riccati-Bessel functions for
open channels and modified spherical Bessel functions for closed ones.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ive, kve, spherical_jn, spherical_yn

from channels import ChannelBasis, CouplingMatrix, coupling_matrix
from dispersion import PotentialSurface
from errors import DomainError, NumericalError
from models import Handedness

WALL = 1e30
UNITARITY_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-8
CONDITION_LIMIT = 1e12
STEP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RadialGrid:
    """Equally spaced nodes from r_core to r_match with an even interval count."""
    r_core: float
    r_match: float
    step: float

    def __post_init__(self):
        if self.r_core <= 0 or self.r_match <= self.r_core:
            raise DomainError("radial grid needs 0 < r_core < r_match")
        if self.step <= 0:
            raise DomainError("radial step must be positive")

    @property
    def intervals(self) -> int:
        n = math.ceil((self.r_match - self.r_core) / self.step)
        return n + n % 2

    @property
    def h(self) -> float:
        return (self.r_match - self.r_core) / self.intervals

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.r_core, self.r_match, self.intervals + 1)

    def halved(self) -> "RadialGrid":
        return RadialGrid(self.r_core, self.r_match, self.h / 2.0)


def propagate_logderiv(w: Callable[[float], np.ndarray], energy: float, mass: float, grid: RadialGrid) -> np.ndarray:
    """
    Log-derivative matrix at r_match.

    `w(r)` returns the coupling matrix W(r) (thresholds and centrifugal terms
    included); `2 mass energy` is subtracted here.
    """
    r = grid.points
    h = grid.h
    size = np.atleast_2d(w(r[0])).shape[0]
    eye = np.eye(size)
    y = WALL * eye
    last = len(r) - 1
    for i in range(1, len(r)):
        q = 2.0 * mass * energy * eye - np.atleast_2d(w(r[i]))
        if i % 2:
            u = np.linalg.solve(eye + h * h / 6.0 * q, q)
            weight = 4.0
        else:
            u = q
            weight = 1.0 if i == last else 2.0
        y = np.linalg.solve(eye + h * y, y) - h / 3.0 * weight * u
        y = 0.5 * (y + y.T)
    return y


def _open_functions(l: int, k: float, r: float):
    x = k * r
    j, jp = spherical_jn(l, x), spherical_jn(l, x, derivative=True)
    n, np_ = spherical_yn(l, x), spherical_yn(l, x, derivative=True)
    scale = 1.0 / math.sqrt(k)
    # Riccati functions x j_l(x), x y_l(x) and their r-derivatives.
    return (scale * x * j, scale * k * (j + x * jp),
            scale * x * n, scale * k * (n + x * np_))


def _closed_functions(l: int, kappa: float, r: float):
    x = kappa * r
    nu = l + 0.5
    root = math.sqrt(x)
    i_nu, i_next = ive(nu, x), ive(nu + 1.0, x)
    k_nu, k_next = kve(nu, x), kve(nu + 1.0, x)
    di = i_next + nu * i_nu / x
    dk = -k_next + nu * k_nu / x
    # sqrt(x) I and sqrt(x) K, exponentially scaled; K is the regular choice at infinity.
    return (root * i_nu, kappa * (i_nu / (2.0 * root) + root * di),
            root * k_nu, kappa * (k_nu / (2.0 * root) + root * dk))


@dataclass
class SMatrixBlock:
    """
    S-matrix of one (E, J, parity, handedness) block over the open channels.

    `channels` holds (j, tau, l) per row; `wavenumbers` the open k values.
    """
    energy: float
    J: int
    parity: int | None
    handedness: str
    channels: list[tuple[int, int, int]]
    wavenumbers: np.ndarray
    s: np.ndarray
    k_matrix: np.ndarray = field(default=None, repr=False)

    @property
    def n_open(self) -> int:
        return len(self.channels)

    def unitarity_defect(self) -> float:
        """max |S^dagger S - 1|."""
        if not self.n_open:
            return 0.0
        return float(np.max(np.abs(self.s.conj().T @ self.s - np.eye(self.n_open))))

    def symmetry_defect(self) -> float:
        """max |S - S^T|; time reversal makes S symmetric."""
        if not self.n_open:
            return 0.0
        return float(np.max(np.abs(self.s - self.s.T)))

    def to_dict(self) -> dict:
        return {
            "energy": self.energy, "J": self.J, "parity": self.parity,
            "handedness": self.handedness,
            "channels": [list(c) for c in self.channels],
            "wavenumbers": self.wavenumbers.tolist(),
            "s_real": self.s.real.tolist(), "s_imag": self.s.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SMatrixBlock":
        return cls(
            energy=data["energy"], J=data["J"], parity=data["parity"],
            handedness=data["handedness"],
            channels=[tuple(c) for c in data["channels"]],
            wavenumbers=np.array(data["wavenumbers"]),
            s=np.array(data["s_real"]) + 1j * np.array(data["s_imag"]),
        )

    def rows(self) -> list[dict]:
        """One CSV row per S element."""
        out = []
        for a, (j, tau, l) in enumerate(self.channels):
            for b, (j0, tau0, l0) in enumerate(self.channels):
                out.append({
                    "energy": self.energy, "J": self.J, "handedness": self.handedness,
                    "j": j, "tau": tau, "l": l, "j0": j0, "tau0": tau0, "l0": l0,
                    "re": float(self.s[a, b].real), "im": float(self.s[a, b].imag),
                })
        return out


def extract_smatrix(y: np.ndarray, thresholds: np.ndarray, l_values: np.ndarray, energy: float,
                    mass: float, r: float) -> tuple[np.ndarray, np.ndarray]:
    """
    (S, K) over the open channels from the log-derivative at r.

    Open channels must come first in the channel order.

    Raises:
        NumericalError: An open channel sits exactly at threshold, the matching
            system is ill-conditioned, or S is not unitary
    """
    size = len(thresholds)
    open_mask = np.asarray(thresholds) <= energy
    n_open = int(open_mask.sum())
    if not np.all(open_mask[:n_open]):
        raise DomainError("open channels must precede closed channels")

    regular = np.zeros((size, size))
    regular_d = np.zeros((size, size))
    irregular = np.zeros((size, size))
    irregular_d = np.zeros((size, size))
    for a in range(size):
        wavenumber = math.sqrt(2.0 * mass * abs(energy - thresholds[a]))
        if wavenumber == 0.0:
            raise NumericalError("open channel at threshold; shift the energy off the level", value=energy)
        fn = _open_functions if open_mask[a] else _closed_functions
        values = fn(int(l_values[a]), wavenumber, r)
        regular[a, a], regular_d[a, a], irregular[a, a], irregular_d[a, a] = values

    lhs = y @ irregular - irregular_d
    # High partial waves make the columns differ by many orders of magnitude.
    balanced = lhs / np.linalg.norm(lhs, axis=0)
    balanced = balanced / np.linalg.norm(balanced, axis=1)[:, None]
    condition = float(np.linalg.cond(balanced))
    if not condition < CONDITION_LIMIT:
        raise NumericalError("K-matrix matching is ill-conditioned", value=condition)
    k_full = np.linalg.solve(lhs, y @ regular - regular_d)
    k_open = k_full[:n_open, :n_open]
    k_open = 0.5 * (k_open + k_open.T)
    eye = np.eye(n_open)
    s = (eye + 1j * k_open) @ np.linalg.inv(eye - 1j * k_open)

    defect = float(np.max(np.abs(s.conj().T @ s - eye))) if n_open else 0.0
    if defect > UNITARITY_TOLERANCE:
        raise NumericalError("S-matrix is not unitary", value=defect)
    return s, k_open


def scatter(coupling: CouplingMatrix, energy: float, grid: RadialGrid, verify_step: bool = False):
    """
    (S, K) for one coupling matrix; with `verify_step` the propagation is
    repeated at half step and the finer result returned.

    Raises:
        NumericalError: The half-step result differs by more than STEP_TOLERANCE
    """
    def run(g: RadialGrid):
        y = propagate_logderiv(coupling, energy, coupling.mass, g)
        return extract_smatrix(y, coupling.thresholds, coupling.l_values, energy, coupling.mass, g.r_match)

    s, k = run(grid)
    if verify_step:
        s_fine, k_fine = run(grid.halved())
        difference = float(np.max(np.abs(s_fine - s))) if s.size else 0.0
        if difference > STEP_TOLERANCE:
            raise NumericalError(f"S changes by {difference:.2e} when the radial step is halved",
                                 value=difference)
        return s_fine, k_fine
    return s, k


def solve_block(basis: ChannelBasis, surface: PotentialSurface, mass: float, grid: RadialGrid,
                verify_step: bool = False, expansion: dict | None = None) -> SMatrixBlock:
    """
    S-matrix block of one surface over one channel basis.

    Raises:
        NumericalError: The block fails the unitarity or symmetry check, or
            the step check when `verify_step` is set
    """
    coupling = coupling_matrix(basis, surface, mass, expansion)
    s, k = scatter(coupling, basis.energy, grid, verify_step)
    open_channels = basis.open_channels
    wavenumbers = np.array([math.sqrt(2.0 * mass * (basis.energy - ch.threshold)) for ch in open_channels])
    block = SMatrixBlock(
        energy=basis.energy,
        J=basis.J,
        parity=basis.parity,
        handedness=Handedness(surface.handedness).value,
        channels=[(ch.j, ch.tau, ch.l) for ch in open_channels],
        wavenumbers=wavenumbers,
        s=s,
        k_matrix=k,
    )
    check_block(block)
    return block


def check_block(block: SMatrixBlock):
    """
    Raises:
        NumericalError: S is not unitary or not symmetric within tolerance
    """
    label = f"J={block.J} {block.handedness}"
    unitarity = block.unitarity_defect()
    if not unitarity <= UNITARITY_TOLERANCE:
        raise NumericalError(f"S-matrix at {label} is not unitary ({unitarity:.2e})", value=unitarity)
    symmetry = block.symmetry_defect()
    if not symmetry <= SYMMETRY_TOLERANCE:
        raise NumericalError(f"S-matrix at {label} is not symmetric ({symmetry:.2e})", value=symmetry)
