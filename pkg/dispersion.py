"""
Dispersion interaction between a chiral molecule and a closed-shell gas atom.

The molecule's dipole-dipole polarizability alpha(iw) and dipole-quadrupole
polarizability A_{i,jk}(iw) are assembled from per-atom Drude increments. The
Casimir-Polder integrals over imaginary frequency give

    Q_ik     = (1/2pi) Int dw alpha_gas(iw) alpha_ik(iw)
    D_{i,kl} = (1/3pi) Int dw alpha_gas(iw) A_{i,kl}(iw)

and the potential for the gas atom in body-frame direction n at distance r

    V(r, n) = -(3 n.Q.n + tr Q) / r^6 - g(n) / r^7,
    g(n)    = 12 D_{i,kl} n_i n_k n_l + 6 D_{i,ik} n_k.

A uses the traceless (Buckingham) quadrupole, Theta_jk = A_{i,jk} F_i. Its
orientation average of V is -C6 / r^6 with C6 = 2 tr Q. In pseudoscalar mode D
is replaced by its D2-invariant part, so g(n) reduces to a multiple of
n_x n_y n_z.
"""

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.special import roots_legendre

from angular import spherical_harmonic
from errors import ConfigError, ConvergenceError, DomainError
from models import BondIncrementTable, ChiralityMode, GasDataset, Handedness
from rotor import RotorSpec

QUADRATURE_TOLERANCE = 1e-10
QUADRATURE_MAX_NODES = 2048
FREQUENCY_SCALE = 0.5

# Grid for projecting angular functions on C_{lambda mu}; exact for lambda <= 3.
_N_THETA = 8
_N_PHI = 16

# C2 rotations about x, y, z; averaging over them projects on the D2-invariant part.
_D2 = [np.diag(d) for d in ((1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0))]


def drude_factor(omega_a: float, omega: float) -> float:
    """Drude response f = omega_a^2 / (omega_a^2 + omega^2) on the imaginary axis."""
    if omega_a <= 0:
        raise DomainError("Drude frequency must be positive")
    if np.any(np.asarray(omega) < 0):
        raise DomainError("imaginary frequency must be non-negative")
    return omega_a**2 / (omega_a**2 + np.asarray(omega, dtype=float) ** 2)


def _symmetric_traceless(b: np.ndarray) -> np.ndarray:
    """Fully symmetric rank-3 tensor along unit vector b, traceless in any pair."""
    eye = np.eye(3)
    t = np.einsum("i,j,k->ijk", b, b, b)
    t -= 0.2 * (np.einsum("i,jk->ijk", b, eye) + np.einsum("j,ik->ijk", b, eye) + np.einsum("k,ij->ijk", b, eye))
    return t


def shift_quadrupole(alpha: np.ndarray, position: np.ndarray) -> np.ndarray:
    """A_{i,jk} of a polarizable point at `position`, about the origin."""
    ra = position @ alpha
    return (1.5 * (np.einsum("j,ik->ijk", position, alpha) + np.einsum("k,ij->ijk", position, alpha))
            - np.einsum("i,jk->ijk", ra, np.eye(3)))


@dataclass(frozen=True)
class SusceptibilitySet:
    """
    Frequency-dependent susceptibilities on the imaginary axis.

    Each molecular term is (static tensor, Drude frequency); the gas
    polarizability is a list of (strength, frequency) Lorentzians.
    """
    alpha_terms: tuple[tuple[np.ndarray, float], ...]
    quadrupole_terms: tuple[tuple[np.ndarray, float], ...]
    gas_terms: tuple[tuple[float, float], ...] = ()

    def alpha(self, omega: float) -> np.ndarray:
        out = np.zeros((3, 3))
        for tensor, w in self.alpha_terms:
            out += tensor * drude_factor(w, omega)
        return out

    def quadrupole(self, omega: float) -> np.ndarray:
        out = np.zeros((3, 3, 3))
        for tensor, w in self.quadrupole_terms:
            out += tensor * drude_factor(w, omega)
        return out

    def gas_alpha(self, omega):
        omega = np.asarray(omega, dtype=float)
        return sum((s * drude_factor(w, omega) for s, w in self.gas_terms), np.zeros_like(omega))

    def with_gas(self, gas: GasDataset) -> "SusceptibilitySet":
        return replace(self, gas_terms=tuple((lz.strength, lz.frequency) for lz in gas.lorentzians))


def molecule_tensors(table: BondIncrementTable, spec: RotorSpec) -> SusceptibilitySet:
    """
    Body-frame susceptibilities from bond increments.

    Atom a contributes alpha_a = alpha_iso 1 + kappa sum_bonds (b b - 1/3), a
    bond-axial intrinsic A, and the origin shift of its induced dipole.

    Raises:
        ConfigError: An atom's element is missing from the table
    """
    positions = np.asarray(spec.positions, dtype=float).reshape(-1, 3)
    neighbours: dict[int, list[int]] = {i: [] for i in range(len(spec.symbols))}
    for a, b in spec.bonds:
        neighbours[a].append(b)
        neighbours[b].append(a)

    alpha_terms, quad_terms = [], []
    for index, symbol in enumerate(spec.symbols):
        if symbol not in table.elements:
            raise ConfigError(f"no bond increment for element {symbol!r}")
        entry = table.elements[symbol]
        alpha = entry.alpha_iso * np.eye(3)
        intrinsic = np.zeros((3, 3, 3))
        for other in neighbours[index]:
            bond = positions[other] - positions[index]
            b = bond / np.linalg.norm(bond)
            alpha += entry.bond_anisotropy * (np.outer(b, b) - np.eye(3) / 3.0)
            intrinsic += entry.dipole_quadrupole * _symmetric_traceless(b)
        quad = intrinsic + shift_quadrupole(alpha, positions[index])
        alpha_terms.append((alpha, entry.drude_frequency))
        quad_terms.append((quad, entry.drude_frequency))
    return SusceptibilitySet(tuple(alpha_terms), tuple(quad_terms))


def casimir_polder(integrand, tolerance: float = QUADRATURE_TOLERANCE, nodes: int = 32):
    """
    Int_0^inf integrand(w) dw by Gauss-Legendre on w = s t / (1 - t), doubling
    the node count until successive results agree to `tolerance`.

    The integrand may return arrays. Returns (value, error estimate).

    Raises:
        ConvergenceError: Node budget exhausted
    """
    def rule(n):
        t, weights = roots_legendre(n)
        t = 0.5 * (t + 1.0)
        weights = 0.5 * weights
        omega = FREQUENCY_SCALE * t / (1.0 - t)
        jac = FREQUENCY_SCALE / (1.0 - t) ** 2
        return sum(w * j * np.asarray(integrand(o)) for w, j, o in zip(weights, jac, omega))

    previous = rule(nodes)
    while nodes < QUADRATURE_MAX_NODES:
        nodes *= 2
        current = rule(nodes)
        scale = max(np.max(np.abs(current)), 1e-300)
        error = float(np.max(np.abs(current - previous)) / scale)
        if error < tolerance or np.max(np.abs(current)) == 0.0:
            return current, error
        previous = current
    raise ConvergenceError("Casimir-Polder quadrature did not converge", estimate=error)


def d2_projection(tensor: np.ndarray) -> np.ndarray:
    """Average of a rank-3 tensor over the C2 rotations about the body axes."""
    return sum(np.einsum("ia,kb,lc,abc->ikl", r, r, r, tensor) for r in _D2) / len(_D2)


@dataclass(frozen=True)
class PotentialSurface:
    """
    One enantiomer's potential.

    `q` is the r^-6 tensor and `d_chiral` the r^-7 tensor, which changes sign
    between the enantiomers.
    """
    handedness: Handedness
    q: np.ndarray
    d_chiral: np.ndarray
    r_core: float = 4.0
    chirality: ChiralityMode = ChiralityMode.PSEUDOSCALAR
    provenance: str = field(default="", compare=False)

    @property
    def c6(self) -> float:
        return float(2.0 * np.trace(self.q))

    @property
    def chiral_coefficient(self) -> float:
        """Coefficient of n_x n_y n_z in the chiral angular function."""
        p = d2_projection(self.d_chiral)
        return float(12.0 * (p[0, 1, 2] + p[0, 2, 1] + p[1, 0, 2] + p[1, 2, 0] + p[2, 0, 1] + p[2, 1, 0]))

    def mirrored(self) -> "PotentialSurface":
        other = Handedness.RIGHT if self.handedness == Handedness.LEFT else Handedness.LEFT
        return replace(self, handedness=other, d_chiral=-self.d_chiral)

    def without_chirality(self) -> "PotentialSurface":
        return replace(self, d_chiral=np.zeros_like(self.d_chiral))

    def scaled_chirality(self, factor: float) -> "PotentialSurface":
        return replace(self, d_chiral=factor * self.d_chiral)

    def angular6(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return -(3.0 * np.einsum("...i,ik,...k->...", n, self.q, n) + np.trace(self.q))

    def angular7(self, n: np.ndarray) -> np.ndarray:
        """-g(n) of the chiral r^-7 tensor."""
        n = np.asarray(n, dtype=float)
        cubic = np.einsum("ikl,...i,...k,...l->...", self.d_chiral, n, n, n)
        linear = np.einsum("iik,...k->...", self.d_chiral, n)
        return -(12.0 * cubic + 6.0 * linear)


def dispersion_coefficients(
    s: SusceptibilitySet,
    r_core: float = 4.0,
    chirality: ChiralityMode = ChiralityMode.PSEUDOSCALAR,
    chiral: bool = True,
    provenance: str = "",
) -> tuple[PotentialSurface, PotentialSurface]:
    """
    The (L, R) surface pair from Casimir-Polder quadratures.

    The L surface is the one built from the given geometry; R is its parity
    image. `full` mode keeps the whole r^-7 tensor; `pseudoscalar` mode keeps
    only its D2-invariant part, the n_x n_y n_z term. Either way the r^-7
    tensor is odd under inversion of the geometry, so rebuilding from the
    mirror image swaps L and R exactly.
    """
    def integrand(omega):
        g = float(s.gas_alpha(omega))
        return np.concatenate([(g * s.alpha(omega)).ravel(), (g * s.quadrupole(omega)).ravel()])

    if not s.gas_terms:
        values = np.zeros(9 + 27)
    else:
        values, _ = casimir_polder(integrand)
    q = values[:9].reshape(3, 3) / (2.0 * math.pi)
    d = values[9:].reshape(3, 3, 3) / (3.0 * math.pi)

    mode = ChiralityMode(chirality)
    chiral_part = d if mode == ChiralityMode.FULL else d2_projection(d)
    if not chiral:
        chiral_part = np.zeros_like(d)

    left = PotentialSurface(Handedness.LEFT, q, chiral_part, r_core, mode, provenance)
    return left, left.mirrored()


def potential_eval(surface: PotentialSurface, r: float, n: np.ndarray) -> np.ndarray:
    """
    V(r, n) in hartree for body-frame unit vector(s) n.

    Raises:
        DomainError: r inside the hard core
    """
    if np.any(np.asarray(r) <= surface.r_core):
        raise DomainError(f"r = {r} bohr lies inside r_core = {surface.r_core}")
    return surface.angular6(n) / r**6 + surface.angular7(n) / r**7


def delta_potential(left: PotentialSurface, right: PotentialSurface, r: float, n: np.ndarray) -> np.ndarray:
    """V_L - V_R."""
    return potential_eval(left, r, n) - potential_eval(right, r, n)


def _sphere_grid():
    x, wx = roots_legendre(_N_THETA)
    phi = 2.0 * math.pi * np.arange(_N_PHI) / _N_PHI
    theta = np.arccos(x)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    weights = np.outer(wx, np.full(_N_PHI, 2.0 * math.pi / _N_PHI))
    n = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1)
    return tt, pp, weights, n


def project_multipoles(values: np.ndarray, lambdas=(0, 1, 2, 3)) -> dict[tuple[int, int], complex]:
    """
    Coefficients v of F(n) = sum v_{lambda mu} C_{lambda mu}(n) from samples
    of F on the internal sphere grid (see `sphere_directions`).
    """
    tt, pp, weights, _ = _sphere_grid()
    out = {}
    for lam in lambdas:
        norm = math.sqrt(4.0 * math.pi / (2 * lam + 1))
        for mu in range(-lam, lam + 1):
            c = norm * spherical_harmonic(lam, mu, tt, pp)
            v = (2 * lam + 1) / (4.0 * math.pi) * np.sum(weights * values * np.conj(c))
            if abs(v) > 1e-14 * max(1.0, np.max(np.abs(values))):
                out[(lam, mu)] = complex(v)
    return out


def sphere_directions() -> np.ndarray:
    """Unit vectors of the projection grid, shape (N_theta, N_phi, 3)."""
    return _sphere_grid()[3]


def angular_expansion(surface: PotentialSurface) -> dict[int, dict[tuple[int, int], complex]]:
    """Multipole coefficients of the r^-6 and r^-7 angular functions, keyed by power."""
    n = sphere_directions()
    return {
        6: project_multipoles(surface.angular6(n), lambdas=(0, 2)),
        7: project_multipoles(surface.angular7(n), lambdas=(1, 3)),
    }


def orientation_average(values: np.ndarray) -> float:
    """Sphere average of samples taken on `sphere_directions()`."""
    _, _, weights, _ = _sphere_grid()
    return float(np.sum(weights * values) / (4.0 * math.pi))


def susceptibility_table(s: SusceptibilitySet, frequencies) -> list[dict[str, float]]:
    """Rows of alpha(iw), A(iw) components and alpha_gas(iw) for CSV dumps."""
    axes = "xyz"
    rows = []
    for omega in frequencies:
        alpha = s.alpha(omega)
        quad = s.quadrupole(omega)
        row = {"omega": float(omega), "alpha_gas": float(s.gas_alpha(omega))}
        for i, k in product(range(3), repeat=2):
            if i <= k:
                row[f"alpha_{axes[i]}{axes[k]}"] = float(alpha[i, k])
        for i, k, l in product(range(3), repeat=3):
            if k <= l:
                row[f"A_{axes[i]},{axes[k]}{axes[l]}"] = float(quad[i, k, l])
        rows.append(row)
    return rows
